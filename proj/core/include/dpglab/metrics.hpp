#pragma once

/*
 * Monte-Carlo training metrics: the Z moving average, plug-in KL estimates,
 * advantage/gradient variance diagnostics and Distinct-n diversity.
 *
 * These are the quantities a run reports when the oracle is switched off;
 * each has an exact counterpart in the oracle module that tests compare
 * against.
 */

#include <cstdint>
#include <vector>

#include "dpglab/ebm.hpp"
#include "dpglab/estimators.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/seqspace.hpp"

namespace dpglab {

struct RunningPartition {
  double z_ma = 0.0;
  std::int64_t iterations = 0;
};

/* Z_hat = mean of the batch's P/q ratios (the reward field of a
 * distribution-matching batch); folds it into the running mean
 * z_ma <- (i z_ma + Z_hat)/(i+1). Returns Z_hat. Throws on an empty batch. */
double update_z(RunningPartition& rp, const std::vector<GradSample>& batch);

/* Plug-in forward KL from the normalized target:
 * -log z + (1/(K z)) sum_k (P(x_k)/q(x_k)) log(P(x_k)/pi(x_k)), batch from
 * the proposal. Substituting the proposal for `model` estimates KL(p, q).
 * Transient negative values are reported as-is. */
double is_kl_from_target(const EbmSpec& ebm, double z, const TabularPolicy& proposal,
                         const TabularPolicy& model, const std::vector<GradSample>& batch);

struct VarianceDiagnostics {
  double var_grad = 0.0;
  double var_adv = 0.0;
  double mean_abs_adv = 0.0;
  double mean_adv = 0.0;
};

/* Diagnostics of the normalized advantage A/z_ref and gradient G/z_ref
 * (z_ref = 1 for reward-maximization batches, the trainer's Z estimate for
 * distribution-matching ones, making mean_abs_adv comparable to 2 TVD).
 * var_adv uses the n-1 convention; var_grad is mean ||G||^2 - ||mean G||^2
 * with sample means. Needs n >= 2. */
VarianceDiagnostics variance_diagnostics(const std::vector<GradSample>& batch, double z_ref = 1.0);

/* Mean over samples of (#unique n-grams / #n-grams) within each sequence. */
double distinct_n(const std::vector<Sequence>& samples, int n);

}  // namespace dpglab
