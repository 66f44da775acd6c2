#pragma once

/*
 * Brute-force ground truth by exact enumeration.
 *
 * Everything here walks the whole sequence space with Kahan-compensated
 * sums: normalized targets, divergences, population expected gradients and
 * gradient variances for every estimator family, and the optimal policy of
 * the KL-penalized reward. Used by tests to pin the Monte-Carlo code and by
 * the trainer when exact metrics are requested.
 */

#include <functional>
#include <utility>

#include "dpglab/distribution.hpp"
#include "dpglab/ebm.hpp"
#include "dpglab/param_vector.hpp"
#include "dpglab/policy.hpp"

namespace dpglab::oracle {

using RewardFn = std::function<double(const Sequence&)>;

/* p = P/Z and Z. Throws std::domain_error on Z == 0 or a non-enumerable
 * space. */
std::pair<ExactDistribution, double> normalize_ebm(const EbmSpec& ebm);

/* Forward KL sum d1 log(d1/d2) with 0 log 0 = 0. Throws std::domain_error
 * naming the first sequence where d1 > 0 but d2 == 0. */
double kl(const ExactDistribution& d1, const ExactDistribution& d2);

/* Half L1 distance; spaces must match. */
double tvd(const ExactDistribution& d1, const ExactDistribution& d2);

/* E_d[phi]. */
double feature_moment(const ExactDistribution& d, const Feature& feature);

/* Reward-maximization family under x ~ pi with constant baseline b:
 * gradient sum_x pi(x) (R(x) - b) grad log pi(x); variance
 * E||G||^2 - ||E G||^2 of G = (R - b) grad log pi. */
ParamVector rm_expected_gradient(const TabularPolicy& policy, const RewardFn& reward, double b);
double rm_gradient_variance(const TabularPolicy& policy, const RewardFn& reward, double b);

/* B^RL = E_pi[R]. */
double mean_reward_baseline(const TabularPolicy& policy, const RewardFn& reward);

/* B* = E_pi[R ||grad log pi||^2] / E_pi[||grad log pi||^2]. */
double optimal_baseline(const TabularPolicy& policy, const RewardFn& reward);

/* Distribution-matching family. On-policy: x ~ pi, advantage P/pi - [Z];
 * off-policy: x ~ q, advantage P/q - [Z pi/q]. */
ParamVector dpg_on_expected_gradient(const TabularPolicy& policy, const EbmSpec& ebm, double z,
                                     bool with_baseline);
double dpg_on_gradient_variance(const TabularPolicy& policy, const EbmSpec& ebm, double z,
                                bool with_baseline);
ParamVector dpg_off_expected_gradient(const TabularPolicy& policy, const TabularPolicy& proposal,
                                      const EbmSpec& ebm, double z, bool with_baseline);
double dpg_off_gradient_variance(const TabularPolicy& policy, const TabularPolicy& proposal,
                                 const EbmSpec& ebm, double z, bool with_baseline);

/* E_q[P/q - Z pi/q]; zero for the true Z. */
double dpg_off_expected_advantage(const TabularPolicy& policy, const TabularPolicy& proposal,
                                  const EbmSpec& ebm, double z);

/* E_q|P/q - Z pi/q| == 2 Z TVD(p, pi); the raw expectation is returned. */
double dpg_off_expected_abs_advantage(const TabularPolicy& policy, const TabularPolicy& proposal,
                                      const EbmSpec& ebm, double z);

/* Var_q(A) of the off-policy advantage, with or without the Z pi/q term. */
double dpg_off_advantage_variance(const TabularPolicy& policy, const TabularPolicy& proposal,
                                  const EbmSpec& ebm, double z, bool with_baseline);

/* KL-penalized reward optimum p_z(x) proportional to a(x) exp(r(x)/beta),
 * with its partition sum. */
std::pair<ExactDistribution, double> ziegler_optimal_policy(const TabularPolicy& base,
                                                            const RewardFn& r, double beta);

/* E_pi[R^z] with R^z = r - beta log(pi/a). */
double expected_ziegler_reward(const TabularPolicy& policy, const TabularPolicy& base,
                               const RewardFn& r, double beta);

/* E_pi[grad R^z] = -beta E_pi[grad log pi]; identically zero in expectation,
 * computed literally so tests can watch it vanish. */
ParamVector ziegler_rg_term(const TabularPolicy& policy, const TabularPolicy& base, double beta);

/* Split of grad E_pi[R_theta] for the parametric reward R_theta = P/pi:
 * rg = E_pi[grad R_theta] and pg = E_pi[R_theta grad log pi]. Their sum is
 * the gradient of the constant Z, i.e. the zero vector. */
struct TwoTerms {
  ParamVector rg;
  ParamVector pg;
};
TwoTerms dpg_two_terms(const TabularPolicy& policy, const EbmSpec& ebm);

}  // namespace dpglab::oracle
