#pragma once

/*
 * Tabular autoregressive softmax policy.
 *
 * One logit row per proper prefix of the space, V entries per row. Next-token
 * distribution at prefix row r is softmax(logits[r]). Row ids follow the
 * prefix tree in breadth order: row(prefix of length k with base-V value b)
 * = (V^k - 1)/(V - 1) + b, so the root is row 0. Every sequence therefore
 * has strictly positive probability, and log-probabilities are exact sums of
 * log-softmax terms (never materialized exponentials).
 */

#include <cstdint>
#include <string>
#include <vector>

#include "dpglab/distribution.hpp"
#include "dpglab/param_vector.hpp"
#include "dpglab/rng.hpp"
#include "dpglab/seqspace.hpp"

namespace dpglab {

class TabularPolicy {
 public:
  /* Zero logits, i.e. the uniform policy. */
  explicit TabularPolicy(const VocabSpec& space);

  static TabularPolicy uniform(const VocabSpec& space);

  /* Logits drawn iid N(0, scale^2) from the given seed. */
  static TabularPolicy randomized(const VocabSpec& space, std::uint64_t seed, double scale = 1.0);

  /* Text checkpoint: header "V L", then one line per prefix row with V
   * space-separated logits, 17 significant digits, canonical row order,
   * LF line endings. */
  static TabularPolicy load_checkpoint(const std::string& path);
  void save_checkpoint(const std::string& path) const;

  const VocabSpec& space() const { return space_; }
  std::size_t row_count() const { return row_count_; }
  std::size_t param_count() const { return logits_.size(); }

  ParamVector& params() { return logits_; }
  const ParamVector& params() const { return logits_; }

  /* Row id of the prefix seq[0..depth). depth in [0, L). */
  std::size_t prefix_row(const Sequence& seq, int depth) const;

  /* log pi(x), exact in log space. Throws on malformed sequences. */
  double log_prob(const Sequence& seq) const;

  /* Gradient of log pi(x) w.r.t. all logits; entries off the prefix path are
   * zero (absent from the sparse blocks). Block for row r holds
   * 1{v == x_t} - softmax(logits[r])[v]. */
  SparseGrad grad_log_prob(const Sequence& seq) const;

  /* Both of the above in one pass over the prefix path. */
  double log_prob_and_grad(const Sequence& seq, SparseGrad& grad) const;

  /* Squared L2 norm of grad_log_prob without materializing it. */
  double grad_log_prob_squared_norm(const Sequence& seq) const;

  /* Ancestral sampling, one token per step. Deterministic in the rng state. */
  Sequence sample(rng::CounterRng& rng) const;

  /* Full probability table; requires an enumerable space. Sums to 1 up to
   * roundoff by construction (per-row softmax normalization). */
  ExactDistribution exact_distribution() const;

 private:
  VocabSpec space_;
  std::size_t row_count_;
  std::vector<std::uint64_t> depth_offset_;  // row id base per prefix depth
  ParamVector logits_;
};

}  // namespace dpglab
