#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "dpglab/numerics.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/rng.hpp"
#include "dpglab/seqspace.hpp"
#include "test_util.hpp"

using namespace dpglab;

TEST_CASE("zero logits give the uniform log-probability") {
  const TabularPolicy policy = TabularPolicy::uniform(VocabSpec{2, 3});
  for_each_sequence(policy.space(), [&](std::uint64_t, const Sequence& seq) {
    CHECK(policy.log_prob(seq) == doctest::Approx(std::log(1.0 / 8.0)).epsilon(1e-12));
  });
}

TEST_CASE("dominant logits concentrate the policy") {
  TabularPolicy policy(VocabSpec{2, 2});
  for (std::size_t row = 0; row < policy.row_count(); ++row) {
    policy.params()[row * 2 + 0] = 50.0;
  }
  CHECK(policy.log_prob({0, 0}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::fabs(policy.log_prob({0, 0})) < 1e-9);
}

TEST_CASE("probabilities of a random policy sum to one") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 2}, 42);
  KahanAccumulator total;
  for_each_sequence(policy.space(), [&](std::uint64_t, const Sequence& seq) {
    total.add(std::exp(policy.log_prob(seq)));
  });
  CHECK(total.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("root-row gradient of the uniform binary policy") {
  const TabularPolicy policy = TabularPolicy::uniform(VocabSpec{2, 1});
  const SparseGrad g = policy.grad_log_prob({0});
  REQUIRE(g.rows.size() == 1);
  CHECK(g.rows[0] == 0);
  CHECK(g.values[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.values[1] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("score identity: expected grad log prob vanishes") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 2}, 7);
  ParamVector mean(policy.param_count());
  for_each_sequence(policy.space(), [&](std::uint64_t, const Sequence& seq) {
    const double p = std::exp(policy.log_prob(seq));
    policy.grad_log_prob(seq).add_to(mean, p);
  });
  CHECK(mean.max_abs() < 1e-10);
}

TEST_CASE("gradient matches central finite differences") {
  TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 3}, 12);
  const Sequence x = {2, 0, 1};
  const ParamVector dense = policy.grad_log_prob(x).to_dense(policy.param_count());
  const double h = 1e-5;
  for (const std::size_t idx : {std::size_t{0}, std::size_t{5}, policy.param_count() - 2}) {
    const double saved = policy.params()[idx];
    policy.params()[idx] = saved + h;
    const double up = policy.log_prob(x);
    policy.params()[idx] = saved - h;
    const double down = policy.log_prob(x);
    policy.params()[idx] = saved;
    const double fd = (up - down) / (2.0 * h);
    if (std::fabs(dense[idx]) > 1e-8) {
      CHECK(fd == doctest::Approx(dense[idx]).epsilon(1e-4));
    } else {
      CHECK(std::fabs(fd - dense[idx]) < 1e-6);
    }
  }
}

TEST_CASE("adding a constant to a logit row changes nothing") {
  TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 2}, 9);
  std::vector<double> before;
  for_each_sequence(policy.space(), [&](std::uint64_t, const Sequence& seq) {
    before.push_back(policy.log_prob(seq));
  });
  for (int v = 0; v < 3; ++v) policy.params()[1 * 3 + v] += 3.25;
  std::size_t i = 0;
  for_each_sequence(policy.space(), [&](std::uint64_t, const Sequence& seq) {
    CHECK(policy.log_prob(seq) == doctest::Approx(before[i]).epsilon(1e-12));
    ++i;
  });
}

TEST_CASE("near-deterministic policy always samples the dominant token") {
  TabularPolicy policy(VocabSpec{3, 4});
  for (std::size_t row = 0; row < policy.row_count(); ++row) {
    policy.params()[row * 3 + 1] = 50.0;
  }
  auto rng = rng::stream_rng(3, rng::Domain::test, 11);
  for (int i = 0; i < 100; ++i) {
    CHECK(policy.sample(rng) == Sequence{1, 1, 1, 1});
  }
}

TEST_CASE("uniform binary sampling frequency is centered") {
  const TabularPolicy policy = TabularPolicy::uniform(VocabSpec{2, 1});
  int zeros = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto rng = rng::stream_rng(17, rng::Domain::test, static_cast<std::uint64_t>(i));
    if (policy.sample(rng)[0] == 0) ++zeros;
  }
  CHECK(std::fabs(zeros / static_cast<double>(n) - 0.5) < 0.01);
}

TEST_CASE("sampling is deterministic in the stream") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{4, 6}, 5);
  for (int i = 0; i < 20; ++i) {
    auto r1 = rng::stream_rng(23, rng::Domain::test, static_cast<std::uint64_t>(i));
    auto r2 = rng::stream_rng(23, rng::Domain::test, static_cast<std::uint64_t>(i));
    CHECK(policy.sample(r1) == policy.sample(r2));
  }
}

TEST_CASE("exact distribution of the uniform and concentrated policies") {
  const ExactDistribution u = TabularPolicy::uniform(VocabSpec{2, 2}).exact_distribution();
  for (double p : u.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  TabularPolicy sharp(VocabSpec{2, 2});
  for (std::size_t row = 0; row < sharp.row_count(); ++row) sharp.params()[row * 2 + 1] = 50.0;
  const ExactDistribution d = sharp.exact_distribution();
  CHECK(d.probs[3] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exact distribution sums to one and matches log_prob") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 3}, 31);
  const ExactDistribution d = policy.exact_distribution();
  KahanAccumulator total;
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    total.add(d.probs[rank]);
    CHECK(d.probs[rank] == doctest::Approx(std::exp(policy.log_prob(seq))).epsilon(1e-12));
  });
  CHECK(total.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log_prob_and_grad agrees with the separate calls") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 3}, 77);
  const Sequence x = {1, 2, 0};
  SparseGrad g;
  const double lp = policy.log_prob_and_grad(x, g);
  CHECK(lp == doctest::Approx(policy.log_prob(x)).epsilon(1e-15));
  const ParamVector a = g.to_dense(policy.param_count());
  const ParamVector b = policy.grad_log_prob(x).to_dense(policy.param_count());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
  CHECK(policy.grad_log_prob_squared_norm(x) ==
        doctest::Approx(g.squared_norm()).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip preserves every logit") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 2}, 101);
  const std::string path =
      (std::filesystem::temp_directory_path() / "dpglab_ckpt_roundtrip.txt").string();
  policy.save_checkpoint(path);
  const TabularPolicy loaded = TabularPolicy::load_checkpoint(path);
  REQUIRE(loaded.space() == policy.space());
  for (std::size_t i = 0; i < policy.param_count(); ++i) {
    CHECK(loaded.params()[i] == policy.params()[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("policy_from_distribution reproduces a random policy") {
  const TabularPolicy policy = TabularPolicy::randomized(VocabSpec{3, 3}, 1234);
  const ExactDistribution d = policy.exact_distribution();
  const TabularPolicy rebuilt = testutil::policy_from_distribution(d);
  const ExactDistribution d2 = rebuilt.exact_distribution();
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    CHECK(d2.probs[i] == doctest::Approx(d.probs[i]).epsilon(1e-10));
  }
}
