#pragma once

/*
 * Per-sample gradient estimators.
 *
 * Reward-maximization family (ascent on E[R]):
 *   reinforce_batch   x ~ pi, advantage R(x) - B with B in {0, batch mean,
 *                     batch plug-in optimal constant}
 *   ziegler_batch     same, with the KL-penalized reward
 *                     R^z(x) = r(x) - beta * log(pi(x)/a(x))
 *
 * Distribution-matching family (ascent on Z times the negated forward KL;
 * the trainer applies the 1/Z scaling):
 *   dpg_on_batch      x ~ pi, advantage P/pi - [Z]
 *   dpg_off_batch     x ~ q,  advantage P/q - [Z*pi/q]
 *
 * All ratios are formed in log space and exponentiated once. Sample k of a
 * batch draws from its own RNG stream (stream_base + k), so batches are
 * reproducible independently of any parallel fan-out.
 */

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "dpglab/ebm.hpp"
#include "dpglab/features.hpp"
#include "dpglab/param_vector.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/rng.hpp"
#include "dpglab/seqspace.hpp"

namespace dpglab {

class RewardSpec {
 public:
  enum class Kind { feature_indicator, ebm_score, custom_table };

  static RewardSpec feature_indicator(Feature f);
  static RewardSpec ebm_score(std::shared_ptr<const EbmSpec> ebm);
  /* Reward per sequence rank; the table must cover the whole space. */
  static RewardSpec custom_table(VocabSpec space, std::vector<double> table);

  Kind kind() const { return kind_; }
  double operator()(const Sequence& x) const;

 private:
  RewardSpec() = default;
  Kind kind_ = Kind::feature_indicator;
  Feature feature_ = Feature::contains_token(0);
  std::shared_ptr<const EbmSpec> ebm_;
  VocabSpec space_;
  std::vector<double> table_;
};

enum class BaselineKind { none, mean_reward, optimal_constant, partition_z, offpolicy_z_ratio };

struct GradSample {
  Sequence x;
  double reward = 0.0;
  double baseline = 0.0;
  double advantage = 0.0;          // reward - baseline
  double importance_weight = 1.0;  // pi(x)/q(x); 1 on-policy
  double log_prob_policy = 0.0;
  double log_prob_proposal = 0.0;  // equals log_prob_policy on-policy
  SparseGrad grad;                 // advantage * grad log pi(x)
};

/* Sum of sample grads divided by batch size, densified. */
ParamVector batch_mean_grad(const std::vector<GradSample>& batch, std::size_t param_count);

/* x_k ~ pi. baseline must be none, mean_reward or optimal_constant; the batch
 * variants need n >= 2. optimal_constant is the batch plug-in
 * sum R ||g||^2 / sum ||g||^2 over unscaled score gradients g. */
std::vector<GradSample> reinforce_batch(const TabularPolicy& policy, const RewardSpec& reward,
                                        BaselineKind baseline, std::size_t n, std::uint64_t seed,
                                        std::uint64_t stream_base);

/* R^z(x) = r(x) - beta * (log pi(x) - log a(x)). beta > 0. */
double ziegler_reward(const TabularPolicy& policy, const TabularPolicy& base,
                      const RewardSpec& r, double beta, const Sequence& x);

/* REINFORCE on the KL-penalized reward. baseline: none or mean_reward. */
std::vector<GradSample> ziegler_batch(const TabularPolicy& policy, const TabularPolicy& base,
                                      const RewardSpec& r, double beta, BaselineKind baseline,
                                      std::size_t n, std::uint64_t seed, std::uint64_t stream_base);

/* x_k ~ pi; reward P/pi; baseline Z when with_baseline. */
std::vector<GradSample> dpg_on_batch(const TabularPolicy& policy, const EbmSpec& ebm, double z,
                                     bool with_baseline, std::size_t n, std::uint64_t seed,
                                     std::uint64_t stream_base);

/* x_k ~ q; reward P/q; baseline Z*pi/q when with_baseline. With q == pi this
 * reproduces dpg_on_batch sample for sample. */
std::vector<GradSample> dpg_off_batch(const TabularPolicy& policy, const TabularPolicy& proposal,
                                      const EbmSpec& ebm, double z, bool with_baseline,
                                      std::size_t n, std::uint64_t seed, std::uint64_t stream_base);

}  // namespace dpglab
