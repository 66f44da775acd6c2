#include "dpglab/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpglab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite_log(double lp, const char* what) {
  if (!std::isfinite(lp)) {
    throw std::runtime_error(std::string("estimator: non-finite log probability from ") + what);
  }
}

}  // namespace

RewardSpec RewardSpec::feature_indicator(Feature f) {
  RewardSpec r;
  r.kind_ = Kind::feature_indicator;
  r.feature_ = std::move(f);
  return r;
}

RewardSpec RewardSpec::ebm_score(std::shared_ptr<const EbmSpec> ebm) {
  if (!ebm) throw std::invalid_argument("RewardSpec: null EBM");
  RewardSpec r;
  r.kind_ = Kind::ebm_score;
  r.ebm_ = std::move(ebm);
  return r;
}

RewardSpec RewardSpec::custom_table(VocabSpec space, std::vector<double> table) {
  if (table.size() != space.sequence_count()) {
    throw std::invalid_argument("RewardSpec: table size " + std::to_string(table.size()) +
                                " does not cover the space of " +
                                std::to_string(space.sequence_count()) + " sequences");
  }
  RewardSpec r;
  r.kind_ = Kind::custom_table;
  r.space_ = space;
  r.table_ = std::move(table);
  return r;
}

double RewardSpec::operator()(const Sequence& x) const {
  switch (kind_) {
    case Kind::feature_indicator:
      return feature_.eval(x) ? 1.0 : 0.0;
    case Kind::ebm_score:
      return ebm_->score(x);
    case Kind::custom_table:
      return table_[static_cast<std::size_t>(index_of(space_, x))];
  }
  return 0.0;
}

ParamVector batch_mean_grad(const std::vector<GradSample>& batch, std::size_t param_count) {
  ParamVector mean(param_count);
  for (const GradSample& s : batch) s.grad.add_to(mean);
  if (!batch.empty()) mean.scale(1.0 / static_cast<double>(batch.size()));
  return mean;
}

namespace {

/* Shared RM skeleton: sample, score, pick the batch baseline, scale grads. */
template <typename RewardFn>
std::vector<GradSample> rm_batch(const TabularPolicy& policy, RewardFn&& reward_of,
                                 BaselineKind baseline, std::size_t n, std::uint64_t seed,
                                 std::uint64_t stream_base) {
  if (baseline != BaselineKind::none && n < 2) {
    throw std::invalid_argument("batch baselines need n >= 2");
  }
  std::vector<GradSample> batch(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto rng = rng::stream_rng(seed, rng::Domain::train, stream_base + k);
    GradSample& s = batch[k];
    s.x = policy.sample(rng);
    s.log_prob_policy = policy.log_prob_and_grad(s.x, s.grad);
    require_finite_log(s.log_prob_policy, "policy");
    s.log_prob_proposal = s.log_prob_policy;
    s.reward = reward_of(s.x, s.log_prob_policy);
  }

  double b = 0.0;
  switch (baseline) {
    case BaselineKind::none:
      break;
    case BaselineKind::mean_reward: {
      for (const GradSample& s : batch) b += s.reward;
      b /= static_cast<double>(n);
      break;
    }
    case BaselineKind::optimal_constant: {
      double num = 0.0;
      double den = 0.0;
      for (const GradSample& s : batch) {
        const double g2 = s.grad.squared_norm();  // grads are still unscaled here
        num += s.reward * g2;
        den += g2;
      }
      b = den > 0.0 ? num / den : 0.0;
      break;
    }
    default:
      throw std::invalid_argument("reward-maximization batch: unsupported baseline kind");
  }

  for (GradSample& s : batch) {
    s.baseline = b;
    s.advantage = s.reward - b;
    s.grad.scale(s.advantage);
  }
  return batch;
}

}  // namespace

std::vector<GradSample> reinforce_batch(const TabularPolicy& policy, const RewardSpec& reward,
                                        BaselineKind baseline, std::size_t n, std::uint64_t seed,
                                        std::uint64_t stream_base) {
  return rm_batch(
      policy, [&](const Sequence& x, double) { return reward(x); }, baseline, n, seed, stream_base);
}

double ziegler_reward(const TabularPolicy& policy, const TabularPolicy& base, const RewardSpec& r,
                      double beta, const Sequence& x) {
  if (beta <= 0.0) throw std::invalid_argument("ziegler_reward: beta must be positive");
  return r(x) - beta * (policy.log_prob(x) - base.log_prob(x));
}

std::vector<GradSample> ziegler_batch(const TabularPolicy& policy, const TabularPolicy& base,
                                      const RewardSpec& r, double beta, BaselineKind baseline,
                                      std::size_t n, std::uint64_t seed,
                                      std::uint64_t stream_base) {
  if (beta <= 0.0) throw std::invalid_argument("ziegler_batch: beta must be positive");
  if (baseline != BaselineKind::none && baseline != BaselineKind::mean_reward) {
    throw std::invalid_argument("ziegler_batch: baseline must be none or mean_reward");
  }
  return rm_batch(
      policy,
      [&](const Sequence& x, double log_pi) { return r(x) - beta * (log_pi - base.log_prob(x)); },
      baseline, n, seed, stream_base);
}

std::vector<GradSample> dpg_off_batch(const TabularPolicy& policy, const TabularPolicy& proposal,
                                      const EbmSpec& ebm, double z, bool with_baseline,
                                      std::size_t n, std::uint64_t seed,
                                      std::uint64_t stream_base) {
  if (z <= 0.0) throw std::invalid_argument("dpg batch: Z must be positive");
  std::vector<GradSample> batch(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto rng = rng::stream_rng(seed, rng::Domain::train, stream_base + k);
    GradSample& s = batch[k];
    s.x = proposal.sample(rng);
    s.log_prob_proposal = proposal.log_prob(s.x);
    require_finite_log(s.log_prob_proposal, "proposal");
    s.log_prob_policy = policy.log_prob_and_grad(s.x, s.grad);
    require_finite_log(s.log_prob_policy, "policy");
    const double log_score = ebm.log_score(s.x);
    s.reward = log_score == kNegInf ? 0.0 : std::exp(log_score - s.log_prob_proposal);
    s.importance_weight = std::exp(s.log_prob_policy - s.log_prob_proposal);
    s.baseline = with_baseline ? z * s.importance_weight : 0.0;
    s.advantage = s.reward - s.baseline;
    s.grad.scale(s.advantage);
  }
  return batch;
}

std::vector<GradSample> dpg_on_batch(const TabularPolicy& policy, const EbmSpec& ebm, double z,
                                     bool with_baseline, std::size_t n, std::uint64_t seed,
                                     std::uint64_t stream_base) {
  return dpg_off_batch(policy, policy, ebm, z, with_baseline, n, seed, stream_base);
}

}  // namespace dpglab
