#include "dpglab/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpglab/numerics.hpp"

namespace dpglab::oracle {
namespace {

/* Population mean and second moment of G(x) = coeff(x) * grad log pi(x)
 * under sampling weights w(x). Shared by every gradient/variance routine:
 * mean accumulates densely, E||G||^2 uses the per-sequence squared norm. */
struct GradMoments {
  ParamVector mean;
  double second_moment = 0.0;
};

GradMoments grad_moments(const TabularPolicy& policy, const TabularPolicy& sampling,
                         const std::function<double(const Sequence&, std::uint64_t)>& coeff) {
  const ExactDistribution w = sampling.exact_distribution();
  GradMoments out{ParamVector(policy.param_count()), 0.0};
  KahanAccumulator second;
  std::vector<KahanAccumulator> mean(policy.param_count());
  SparseGrad g;
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    const double weight = w.probs[static_cast<std::size_t>(rank)];
    if (weight == 0.0) return;
    const double c = coeff(seq, rank);
    policy.log_prob_and_grad(seq, g);
    second.add(weight * c * c * g.squared_norm());
    if (c == 0.0) return;
    const auto bw = static_cast<std::size_t>(g.block_width);
    for (std::size_t b = 0; b < g.rows.size(); ++b) {
      const std::size_t base = static_cast<std::size_t>(g.rows[b]) * bw;
      for (std::size_t v = 0; v < bw; ++v) mean[base + v].add(weight * c * g.values[b * bw + v]);
    }
  });
  for (std::size_t i = 0; i < out.mean.size(); ++i) out.mean[i] = mean[i].sum();
  out.second_moment = second.sum();
  return out;
}

void require_same_space(const ExactDistribution& d1, const ExactDistribution& d2) {
  if (!(d1.space == d2.space)) {
    throw std::invalid_argument("distributions live on different spaces");
  }
}

}  // namespace

std::pair<ExactDistribution, double> normalize_ebm(const EbmSpec& ebm) {
  ebm.base.space().require_enumerable();
  const std::uint64_t n = ebm.base.space().sequence_count();
  ExactDistribution p{ebm.base.space(), std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  KahanAccumulator z;
  for_each_sequence(ebm.base.space(), [&](std::uint64_t rank, const Sequence& seq) {
    const double s = ebm.score(seq);
    p.probs[static_cast<std::size_t>(rank)] = s;
    z.add(s);
  });
  if (z.sum() <= 0.0) {
    throw std::domain_error("EBM partition is zero: the filter leaves no support");
  }
  for (double& v : p.probs) v /= z.sum();
  return {std::move(p), z.sum()};
}

double kl(const ExactDistribution& d1, const ExactDistribution& d2) {
  require_same_space(d1, d2);
  KahanAccumulator acc;
  for (std::size_t i = 0; i < d1.probs.size(); ++i) {
    const double a = d1.probs[i];
    if (a == 0.0) continue;
    const double b = d2.probs[i];
    if (b == 0.0) {
      throw std::domain_error("kl: infinite divergence, sequence " +
                              format_sequence(sequence_at(d1.space, i)) +
                              " has mass in d1 but none in d2");
    }
    acc.add(a * std::log(a / b));
  }
  return acc.sum();
}

double tvd(const ExactDistribution& d1, const ExactDistribution& d2) {
  require_same_space(d1, d2);
  KahanAccumulator acc;
  for (std::size_t i = 0; i < d1.probs.size(); ++i) acc.add(std::fabs(d1.probs[i] - d2.probs[i]));
  return 0.5 * acc.sum();
}

double feature_moment(const ExactDistribution& d, const Feature& feature) {
  KahanAccumulator acc;
  for_each_sequence(d.space, [&](std::uint64_t rank, const Sequence& seq) {
    if (feature.eval(seq)) acc.add(d.probs[static_cast<std::size_t>(rank)]);
  });
  return acc.sum();
}

ParamVector rm_expected_gradient(const TabularPolicy& policy, const RewardFn& reward, double b) {
  return grad_moments(policy, policy, [&](const Sequence& x, std::uint64_t) {
           return reward(x) - b;
         })
      .mean;
}

double rm_gradient_variance(const TabularPolicy& policy, const RewardFn& reward, double b) {
  const GradMoments m = grad_moments(
      policy, policy, [&](const Sequence& x, std::uint64_t) { return reward(x) - b; });
  return m.second_moment - m.mean.squared_norm();
}

double mean_reward_baseline(const TabularPolicy& policy, const RewardFn& reward) {
  const ExactDistribution pi = policy.exact_distribution();
  KahanAccumulator acc;
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    acc.add(pi.probs[static_cast<std::size_t>(rank)] * reward(seq));
  });
  return acc.sum();
}

double optimal_baseline(const TabularPolicy& policy, const RewardFn& reward) {
  const ExactDistribution pi = policy.exact_distribution();
  KahanAccumulator num;
  KahanAccumulator den;
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    const double w = pi.probs[static_cast<std::size_t>(rank)];
    if (w == 0.0) return;
    const double g2 = policy.grad_log_prob_squared_norm(seq);
    num.add(w * reward(seq) * g2);
    den.add(w * g2);
  });
  if (den.sum() <= 0.0) {
    throw std::domain_error("optimal_baseline: score norm is identically zero");
  }
  return num.sum() / den.sum();
}

namespace {

/* Coefficient for the off-policy DPG advantage at one sequence. */
std::function<double(const Sequence&, std::uint64_t)> dpg_coeff(const ExactDistribution& target_scores,
                                                                const ExactDistribution& proposal,
                                                                const ExactDistribution& pi,
                                                                double z, bool with_baseline) {
  return [&target_scores, &proposal, &pi, z, with_baseline](const Sequence&, std::uint64_t rank) {
    const std::size_t i = static_cast<std::size_t>(rank);
    const double q = proposal.probs[i];
    const double ratio = target_scores.probs[i] / q;
    return with_baseline ? ratio - z * pi.probs[i] / q : ratio;
  };
}

struct DpgTables {
  ExactDistribution scores;  // unnormalized P(x) in the probs slot
  ExactDistribution proposal;
  ExactDistribution pi;
};

DpgTables dpg_tables(const TabularPolicy& policy, const TabularPolicy& proposal,
                     const EbmSpec& ebm) {
  DpgTables t{ExactDistribution{policy.space(), {}}, proposal.exact_distribution(),
              policy.exact_distribution()};
  t.scores.probs.resize(t.pi.probs.size(), 0.0);
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    t.scores.probs[static_cast<std::size_t>(rank)] = ebm.score(seq);
  });
  return t;
}

}  // namespace

ParamVector dpg_off_expected_gradient(const TabularPolicy& policy, const TabularPolicy& proposal,
                                      const EbmSpec& ebm, double z, bool with_baseline) {
  const DpgTables t = dpg_tables(policy, proposal, ebm);
  return grad_moments(policy, proposal, dpg_coeff(t.scores, t.proposal, t.pi, z, with_baseline))
      .mean;
}

double dpg_off_gradient_variance(const TabularPolicy& policy, const TabularPolicy& proposal,
                                 const EbmSpec& ebm, double z, bool with_baseline) {
  const DpgTables t = dpg_tables(policy, proposal, ebm);
  const GradMoments m =
      grad_moments(policy, proposal, dpg_coeff(t.scores, t.proposal, t.pi, z, with_baseline));
  return m.second_moment - m.mean.squared_norm();
}

ParamVector dpg_on_expected_gradient(const TabularPolicy& policy, const EbmSpec& ebm, double z,
                                     bool with_baseline) {
  return dpg_off_expected_gradient(policy, policy, ebm, z, with_baseline);
}

double dpg_on_gradient_variance(const TabularPolicy& policy, const EbmSpec& ebm, double z,
                                bool with_baseline) {
  return dpg_off_gradient_variance(policy, policy, ebm, z, with_baseline);
}

double dpg_off_expected_advantage(const TabularPolicy& policy, const TabularPolicy& proposal,
                                  const EbmSpec& ebm, double z) {
  const DpgTables t = dpg_tables(policy, proposal, ebm);
  KahanAccumulator acc;
  for (std::size_t i = 0; i < t.proposal.probs.size(); ++i) {
    // q * (P/q - Z pi/q) = P - Z pi, summed exactly.
    acc.add(t.scores.probs[i] - z * t.pi.probs[i]);
  }
  return acc.sum();
}

double dpg_off_expected_abs_advantage(const TabularPolicy& policy, const TabularPolicy& proposal,
                                      const EbmSpec& ebm, double z) {
  const DpgTables t = dpg_tables(policy, proposal, ebm);
  KahanAccumulator acc;
  for (std::size_t i = 0; i < t.proposal.probs.size(); ++i) {
    acc.add(std::fabs(t.scores.probs[i] - z * t.pi.probs[i]));
  }
  return acc.sum();
}

double dpg_off_advantage_variance(const TabularPolicy& policy, const TabularPolicy& proposal,
                                  const EbmSpec& ebm, double z, bool with_baseline) {
  const DpgTables t = dpg_tables(policy, proposal, ebm);
  KahanAccumulator mean;
  KahanAccumulator second;
  for (std::size_t i = 0; i < t.proposal.probs.size(); ++i) {
    const double q = t.proposal.probs[i];
    if (q <= 0.0) continue;
    const double adv =
        (t.scores.probs[i] - (with_baseline ? z * t.pi.probs[i] : 0.0)) / q;
    mean.add(q * adv);
    second.add(q * adv * adv);
  }
  return second.sum() - mean.sum() * mean.sum();
}

std::pair<ExactDistribution, double> ziegler_optimal_policy(const TabularPolicy& base,
                                                            const RewardFn& r, double beta) {
  if (beta <= 0.0) throw std::invalid_argument("ziegler_optimal_policy: beta must be positive");
  base.space().require_enumerable();
  const ExactDistribution a = base.exact_distribution();
  ExactDistribution p_z{base.space(), std::vector<double>(a.probs.size(), 0.0)};
  KahanAccumulator z;
  for_each_sequence(base.space(), [&](std::uint64_t rank, const Sequence& seq) {
    const std::size_t i = static_cast<std::size_t>(rank);
    p_z.probs[i] = a.probs[i] * std::exp(r(seq) / beta);
    z.add(p_z.probs[i]);
  });
  for (double& v : p_z.probs) v /= z.sum();
  return {std::move(p_z), z.sum()};
}

double expected_ziegler_reward(const TabularPolicy& policy, const TabularPolicy& base,
                               const RewardFn& r, double beta) {
  const ExactDistribution pi = policy.exact_distribution();
  KahanAccumulator acc;
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    const double w = pi.probs[static_cast<std::size_t>(rank)];
    if (w == 0.0) return;
    acc.add(w * (r(seq) - beta * (policy.log_prob(seq) - base.log_prob(seq))));
  });
  return acc.sum();
}

ParamVector ziegler_rg_term(const TabularPolicy& policy, const TabularPolicy& /*base*/,
                            double beta) {
  // grad R^z(x) = -beta grad log pi(x) at fixed x; the expectation over pi is
  // the score-function identity and must vanish.
  return grad_moments(policy, policy, [&](const Sequence&, std::uint64_t) { return -beta; }).mean;
}

TwoTerms dpg_two_terms(const TabularPolicy& policy, const EbmSpec& ebm) {
  const DpgTables t = dpg_tables(policy, policy, ebm);
  // R_theta = P/pi: grad R_theta = -(P/pi) grad log pi, so the RG-term is
  // E_pi[grad R_theta] = -sum_x P grad log pi; the PG-term is its negation.
  TwoTerms out{
      grad_moments(policy, policy,
                   [&](const Sequence&, std::uint64_t rank) {
                     const std::size_t i = static_cast<std::size_t>(rank);
                     return -t.scores.probs[i] / t.pi.probs[i];
                   })
          .mean,
      grad_moments(policy, policy,
                   [&](const Sequence&, std::uint64_t rank) {
                     const std::size_t i = static_cast<std::size_t>(rank);
                     return t.scores.probs[i] / t.pi.probs[i];
                   })
          .mean};
  return out;
}

}  // namespace dpglab::oracle
