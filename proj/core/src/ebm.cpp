#include "dpglab/ebm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpglab/numerics.hpp"

namespace dpglab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/* Base mass per feature-sign pattern, restricted to the filter support.
 * mass[m] = sum of a(x) over filter-passing x whose feature bitmask is m.
 * Collapses every exact moment/partition query from O(V^L) to O(2^F). */
struct MaskTable {
  std::size_t feature_count = 0;
  std::vector<double> mass;
  double total = 0.0;  // filter-passing base mass
};

constexpr std::size_t kMaxMaskFeatures = 20;

MaskTable build_mask_table(const EbmSpec& ebm) {
  const std::size_t f = ebm.features.size();
  if (f > kMaxMaskFeatures) {
    throw std::invalid_argument("EbmSpec: " + std::to_string(f) +
                                " features exceed the exact-moment limit of " +
                                std::to_string(kMaxMaskFeatures));
  }
  MaskTable table;
  table.feature_count = f;
  std::vector<KahanAccumulator> acc(1ull << f);
  const ExactDistribution base = ebm.base.exact_distribution();
  for_each_sequence(ebm.base.space(), [&](std::uint64_t rank, const Sequence& seq) {
    if (ebm.pointwise_filter && !ebm.pointwise_filter->feature.eval(seq)) return;
    std::size_t mask = 0;
    for (std::size_t i = 0; i < f; ++i) {
      if (ebm.features[i].feature.eval(seq)) mask |= 1ull << i;
    }
    acc[mask].add(base.probs[static_cast<std::size_t>(rank)]);
  });
  table.mass.resize(acc.size());
  KahanAccumulator total;
  for (std::size_t m = 0; m < acc.size(); ++m) {
    table.mass[m] = acc[m].sum();
    total.add(table.mass[m]);
  }
  table.total = total.sum();
  return table;
}

double partition_from_masks(const MaskTable& table, const std::vector<double>& lambdas) {
  KahanAccumulator z;
  for (std::size_t m = 0; m < table.mass.size(); ++m) {
    if (table.mass[m] == 0.0) continue;
    double exponent = 0.0;
    for (std::size_t i = 0; i < table.feature_count; ++i) {
      if (m & (1ull << i)) exponent += lambdas[i];
    }
    z.add(table.mass[m] * std::exp(exponent));
  }
  return z.sum();
}

std::vector<double> moments_from_masks(const MaskTable& table, const std::vector<double>& lambdas) {
  std::vector<KahanAccumulator> num(table.feature_count);
  KahanAccumulator z;
  for (std::size_t m = 0; m < table.mass.size(); ++m) {
    if (table.mass[m] == 0.0) continue;
    double exponent = 0.0;
    for (std::size_t i = 0; i < table.feature_count; ++i) {
      if (m & (1ull << i)) exponent += lambdas[i];
    }
    const double w = table.mass[m] * std::exp(exponent);
    z.add(w);
    for (std::size_t i = 0; i < table.feature_count; ++i) {
      if (m & (1ull << i)) num[i].add(w);
    }
  }
  if (z.sum() <= 0.0) {
    throw std::domain_error("EBM partition is zero: the filter leaves no support");
  }
  std::vector<double> mu(table.feature_count);
  for (std::size_t i = 0; i < table.feature_count; ++i) mu[i] = num[i].sum() / z.sum();
  return mu;
}

}  // namespace

void EbmSpec::validate() const {
  if (features.size() != lambdas.size()) {
    throw std::invalid_argument("EbmSpec: " + std::to_string(features.size()) + " features vs " +
                                std::to_string(lambdas.size()) + " lambdas");
  }
  for (const FeatureSpec& fs : features) {
    if (fs.id.empty()) throw std::invalid_argument("EbmSpec: feature with empty id");
    fs.feature.validate(base.space());
  }
  if (pointwise_filter) pointwise_filter->feature.validate(base.space());
  for (double l : lambdas) {
    if (!(std::fabs(l) <= kLambdaMax)) {
      throw std::invalid_argument("EbmSpec: lambda " + std::to_string(l) +
                                  " outside the cap of " + std::to_string(kLambdaMax));
    }
  }
}

double EbmSpec::log_score(const Sequence& x) const {
  if (pointwise_filter && !pointwise_filter->feature.eval(x)) return kNegInf;
  double ls = base.log_prob(x);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].feature.eval(x)) ls += lambdas[i];
  }
  return ls;
}

double EbmSpec::score(const Sequence& x) const { return std::exp(log_score(x)); }

double EbmSpec::exact_partition() const {
  base.space().require_enumerable();
  validate();
  const double z = partition_from_masks(build_mask_table(*this), lambdas);
  if (z <= 0.0) {
    throw std::domain_error("EBM partition is zero: the filter leaves no support");
  }
  return z;
}

std::vector<double> EbmSpec::exact_moments() const {
  base.space().require_enumerable();
  validate();
  return moments_from_masks(build_mask_table(*this), lambdas);
}

void MomentTargets::validate(const EbmSpec& ebm) const {
  if (mu_bar.size() != ebm.features.size()) {
    throw std::domain_error("MomentTargets: " + std::to_string(mu_bar.size()) + " targets vs " +
                            std::to_string(ebm.features.size()) + " features");
  }
  const MaskTable table = build_mask_table(ebm);
  if (table.total <= 0.0) {
    throw std::domain_error("MomentTargets: the filter leaves no support");
  }
  for (std::size_t i = 0; i < mu_bar.size(); ++i) {
    const double mu = mu_bar[i];
    const std::string where = "target for feature '" + ebm.features[i].id + "'";
    if (!(mu >= 0.0 && mu <= 1.0)) {
      throw std::domain_error("MomentTargets: " + where + " must lie in [0,1], got " +
                              std::to_string(mu));
    }
    // Mass of phi_i = 1 and phi_i = 0 on the (filtered) support.
    double on = 0.0;
    double off = 0.0;
    for (std::size_t m = 0; m < table.mass.size(); ++m) {
      (m & (1ull << i) ? on : off) += table.mass[m];
    }
    if (mu > 0.0 && on <= 0.0) {
      throw std::domain_error("MomentTargets: " + where + " is " + std::to_string(mu) +
                              " but the feature is unsatisfiable on the support");
    }
    if (mu < 1.0 && off <= 0.0) {
      throw std::domain_error("MomentTargets: " + where + " is " + std::to_string(mu) +
                              " but the feature is constant 1 on the support");
    }
  }
}

SnisEstimate snis_moments(const EbmSpec& ebm, const TabularPolicy& proposal, std::uint64_t n,
                          rng::CounterRng& rng) {
  if (n < 1) throw std::invalid_argument("snis_moments: n must be >= 1");
  ebm.validate();
  const std::size_t f = ebm.features.size();
  SnisEstimate est;
  est.moments.assign(f, 0.0);
  KahanAccumulator weight_sum;
  std::vector<KahanAccumulator> feature_sum(f);
  for (std::uint64_t k = 0; k < n; ++k) {
    const Sequence x = proposal.sample(rng);
    const double ls = ebm.log_score(x);
    if (ls == kNegInf) continue;
    const double w = std::exp(ls - proposal.log_prob(x));
    if (w > 0.0) ++est.surviving;
    weight_sum.add(w);
    for (std::size_t i = 0; i < f; ++i) {
      if (ebm.features[i].feature.eval(x)) feature_sum[i].add(w);
    }
  }
  if (est.surviving == 0) {
    throw std::runtime_error("snis_moments: no surviving samples out of " + std::to_string(n));
  }
  est.z_hat = weight_sum.sum() / static_cast<double>(n);
  for (std::size_t i = 0; i < f; ++i) est.moments[i] = feature_sum[i].sum() / weight_sum.sum();
  return est;
}

FitReport fit_lambdas(EbmSpec& ebm, const MomentTargets& targets, const FitConfig& cfg,
                      std::uint64_t seed) {
  ebm.validate();
  targets.validate(ebm);
  if (cfg.lr <= 0.0) throw std::invalid_argument("fit_lambdas: lr must be positive");
  if (cfg.tolerance <= 0.0) throw std::invalid_argument("fit_lambdas: tolerance must be positive");

  const std::size_t f = ebm.features.size();
  FitReport report;
  report.residuals.assign(f, 0.0);

  // Targets within tolerance of a hard 0/1 are pointwise requests in soft
  // clothing; pin those coordinates at the cap instead of chasing them.
  std::vector<bool> pinned(f, false);
  for (std::size_t i = 0; i < f; ++i) {
    if (targets.mu_bar[i] > 1.0 - cfg.tolerance) {
      ebm.lambdas[i] = EbmSpec::kLambdaMax;
      pinned[i] = true;
    } else if (targets.mu_bar[i] < cfg.tolerance) {
      ebm.lambdas[i] = -EbmSpec::kLambdaMax;
      pinned[i] = true;
    }
    report.capped = report.capped || pinned[i];
  }

  const bool exact = cfg.mode == FitMode::exact;
  MaskTable table;
  if (exact) table = build_mask_table(ebm);

  const auto current_moments = [&](int iter) -> std::vector<double> {
    if (exact) return moments_from_masks(table, ebm.lambdas);
    auto rng = rng::stream_rng(seed, rng::Domain::fit, static_cast<std::uint64_t>(iter));
    return snis_moments(ebm, ebm.base, cfg.sample_size, rng).moments;
  };

  for (int iter = 0; iter <= cfg.max_iters; ++iter) {
    const std::vector<double> mu = current_moments(iter);
    double worst = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
      report.residuals[i] = targets.mu_bar[i] - mu[i];
      const double r = pinned[i] ? 0.0 : std::fabs(report.residuals[i]);
      worst = std::max(worst, r);
    }
    if (worst <= cfg.tolerance) {
      report.converged = true;
      report.iterations = iter;
      break;
    }
    if (iter == cfg.max_iters) {
      report.iterations = iter;
      break;
    }
    for (std::size_t i = 0; i < f; ++i) {
      if (pinned[i]) continue;
      double l = ebm.lambdas[i] + cfg.lr * report.residuals[i];
      if (l > EbmSpec::kLambdaMax) {
        l = EbmSpec::kLambdaMax;
        report.capped = true;
      } else if (l < -EbmSpec::kLambdaMax) {
        l = -EbmSpec::kLambdaMax;
        report.capped = true;
      }
      ebm.lambdas[i] = l;
    }
  }
  report.lambdas = ebm.lambdas;
  return report;
}

}  // namespace dpglab
