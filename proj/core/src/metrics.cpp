#include "dpglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpglab/numerics.hpp"

namespace dpglab {

double update_z(RunningPartition& rp, const std::vector<GradSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("update_z: empty batch");
  KahanAccumulator acc;
  for (const GradSample& s : batch) acc.add(s.reward);
  const double z_hat = acc.sum() / static_cast<double>(batch.size());
  rp.z_ma = (static_cast<double>(rp.iterations) * rp.z_ma + z_hat) /
            static_cast<double>(rp.iterations + 1);
  ++rp.iterations;
  return z_hat;
}

double is_kl_from_target(const EbmSpec& ebm, double z, const TabularPolicy& proposal,
                         const TabularPolicy& model, const std::vector<GradSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("is_kl_from_target: empty batch");
  if (!(z > 0.0)) throw std::invalid_argument("is_kl_from_target: z must be positive");
  KahanAccumulator acc;
  for (const GradSample& s : batch) {
    const double log_score = ebm.log_score(s.x);
    if (log_score == -std::numeric_limits<double>::infinity()) continue;  // weight 0
    const double w = std::exp(log_score - proposal.log_prob(s.x));
    acc.add(w * (log_score - model.log_prob(s.x)));
  }
  return -std::log(z) + acc.sum() / (static_cast<double>(batch.size()) * z);
}

VarianceDiagnostics variance_diagnostics(const std::vector<GradSample>& batch, double z_ref) {
  if (batch.size() < 2) throw std::invalid_argument("variance_diagnostics: need n >= 2");
  if (!(z_ref > 0.0)) throw std::invalid_argument("variance_diagnostics: z_ref must be positive");
  const double n = static_cast<double>(batch.size());

  // Dense mean-gradient buffer sized by the largest row the batch touches;
  // rows beyond that are zero in the mean and drop out of its norm.
  std::size_t width = 0;
  std::uint32_t max_row = 0;
  for (const GradSample& s : batch) {
    width = std::max(width, static_cast<std::size_t>(s.grad.block_width));
    for (std::uint32_t r : s.grad.rows) max_row = std::max(max_row, r);
  }
  ParamVector mean_grad((static_cast<std::size_t>(max_row) + 1) * width);

  KahanAccumulator grad_sq;
  KahanAccumulator adv_sum;
  KahanAccumulator abs_adv;
  for (const GradSample& s : batch) {
    grad_sq.add(s.grad.squared_norm());
    s.grad.add_to(mean_grad);
    adv_sum.add(s.advantage);
    abs_adv.add(std::fabs(s.advantage));
  }
  mean_grad.scale(1.0 / n);

  VarianceDiagnostics d;
  const double z2 = z_ref * z_ref;
  d.var_grad = (grad_sq.sum() / n - mean_grad.squared_norm()) / z2;
  d.mean_adv = adv_sum.sum() / n / z_ref;
  d.mean_abs_adv = abs_adv.sum() / n / z_ref;

  KahanAccumulator centered;
  const double mean_raw = adv_sum.sum() / n;
  for (const GradSample& s : batch) {
    const double c = s.advantage - mean_raw;
    centered.add(c * c);
  }
  d.var_adv = centered.sum() / (n - 1.0) / z2;
  return d;
}

double distinct_n(const std::vector<Sequence>& samples, int n) {
  if (samples.empty()) throw std::invalid_argument("distinct_n: empty sample list");
  if (n < 1) throw std::invalid_argument("distinct_n: gram size must be >= 1");
  KahanAccumulator acc;
  std::vector<std::size_t> grams;
  for (const Sequence& seq : samples) {
    const int len = static_cast<int>(seq.size());
    if (n > len) throw std::invalid_argument("distinct_n: gram size exceeds sequence length");
    const int total = len - n + 1;
    grams.clear();
    for (int i = 0; i < total; ++i) {
      // Fold the n-gram into one integer key; tokens are small so this is
      // collision-free for toy vocabularies.
      std::size_t key = 0;
      for (int j = 0; j < n; ++j) {
        key = key * 4096 + static_cast<std::size_t>(seq[static_cast<std::size_t>(i + j)]) + 1;
      }
      grams.push_back(key);
    }
    std::sort(grams.begin(), grams.end());
    const auto unique_end = std::unique(grams.begin(), grams.end());
    acc.add(static_cast<double>(unique_end - grams.begin()) / static_cast<double>(total));
  }
  return acc.sum() / static_cast<double>(samples.size());
}

}  // namespace dpglab
