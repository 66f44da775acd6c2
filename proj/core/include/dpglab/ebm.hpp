#pragma once

/*
 * Target energy-based models P(x) = a(x) * exp(sum_i lambda_i phi_i(x)) * b(x)
 * and the moment-matching fit of the lambda coefficients.
 *
 * a is a tabular base policy, phi_i are binary features, b an optional hard
 * filter (product-of-experts form). Scores are handled in log space; a
 * filtered-out sequence has log score -inf and score 0.
 *
 * Exact-mode fitting collapses the space once into per-feature-mask base
 * mass, after which every moment evaluation is O(2^F) instead of O(V^L).
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpglab/features.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/seqspace.hpp"

namespace dpglab {

struct EbmSpec {
  TabularPolicy base;
  std::vector<FeatureSpec> features;
  std::vector<double> lambdas;
  std::optional<FeatureSpec> pointwise_filter;

  /* Coefficients are clamped to this magnitude; effectively-pointwise soft
   * targets are approximated at the cap. */
  static constexpr double kLambdaMax = 30.0;

  explicit EbmSpec(TabularPolicy base_policy) : base(std::move(base_policy)) {}

  /* Size agreement, feature validity, lambda cap. Throws std::invalid_argument. */
  void validate() const;

  /* log P(x); -inf when the filter rejects x. */
  double log_score(const Sequence& x) const;

  /* P(x) = exp(log_score). */
  double score(const Sequence& x) const;

  /* Z = sum_x score(x). Requires an enumerable space; throws std::domain_error
   * when the filter leaves no support (Z == 0). */
  double exact_partition() const;

  /* E_p[phi_i] under p = P/Z, by enumeration. Same errors as exact_partition. */
  std::vector<double> exact_moments() const;
};

struct MomentTargets {
  std::vector<double> mu_bar;

  /* Attainability against a concrete EBM's base/filter support: 0 < mu < 1
   * needs both phi and not-phi satisfiable on the support, mu == 1 needs phi
   * satisfiable, mu == 0 needs not-phi satisfiable. Throws std::domain_error
   * naming the offending target. */
  void validate(const EbmSpec& ebm) const;
};

struct SnisEstimate {
  std::vector<double> moments;  // mu_hat_i, self-normalized
  double z_hat = 0.0;           // mean importance weight, estimates Z
  std::uint64_t surviving = 0;  // samples with nonzero weight
};

/* Draws n samples from the proposal and importance-weights them by
 * score/proposal. Throws std::runtime_error when no sample survives the
 * filter, naming n. */
SnisEstimate snis_moments(const EbmSpec& ebm, const TabularPolicy& proposal, std::uint64_t n,
                          rng::CounterRng& rng);

enum class FitMode { exact, snis };

struct FitConfig {
  FitMode mode = FitMode::exact;
  double lr = 0.5;
  double tolerance = 0.01;
  int max_iters = 10000;
  std::uint64_t sample_size = 4096;
};

struct FitReport {
  bool converged = false;
  bool capped = false;  // some target was pointwise-like or a clamp bound
  int iterations = 0;
  std::vector<double> lambdas;
  std::vector<double> residuals;  // mu_bar - mu at exit, per feature
};

/* Coordinate-wise SGD lambda_i += lr * (mu_bar_i - mu_i(lambda)) until the
 * max residual is within tolerance. Targets within tolerance of 0 or 1 are
 * treated as pointwise requests: their lambda is pinned at -/+kLambdaMax and
 * reported as capped. Exceeding max_iters yields a failure report, not an
 * exception. snis mode redraws sample_size samples from the base policy each
 * iteration, on deterministic per-iteration streams of `seed`. */
FitReport fit_lambdas(EbmSpec& ebm, const MomentTargets& targets, const FitConfig& cfg,
                      std::uint64_t seed);

}  // namespace dpglab
