#include "dpglab/policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpglab {
namespace {

/* Row stats shared by sampling, scoring and gradients. Two passes over the
 * row: running max, then sum of shifted exponentials. */
struct RowNorm {
  double max_logit;
  double sum_exp;  // sum_v exp(l_v - max_logit)
};

RowNorm row_norm(const double* row, int v) {
  RowNorm n{row[0], 0.0};
  for (int i = 1; i < v; ++i) {
    if (row[i] > n.max_logit) n.max_logit = row[i];
  }
  for (int i = 0; i < v; ++i) n.sum_exp += std::exp(row[i] - n.max_logit);
  return n;
}

void check_sequence(const VocabSpec& space, const Sequence& seq) {
  if (seq.size() != static_cast<std::size_t>(space.seq_len)) {
    throw std::invalid_argument("policy: sequence length " + std::to_string(seq.size()) +
                                " does not match L=" + std::to_string(space.seq_len));
  }
  for (Token t : seq) {
    if (t < 0 || t >= space.vocab_size) {
      throw std::invalid_argument("policy: token " + std::to_string(t) +
                                  " outside vocabulary of size " + std::to_string(space.vocab_size));
    }
  }
}

}  // namespace

TabularPolicy::TabularPolicy(const VocabSpec& space) : space_(space) {
  space_.validate();
  // Prefix rows per depth: V^0, V^1, ... V^{L-1}; total (V^L - 1)/(V - 1).
  depth_offset_.resize(static_cast<std::size_t>(space_.seq_len));
  std::uint64_t offset = 0;
  std::uint64_t width = 1;
  for (int d = 0; d < space_.seq_len; ++d) {
    depth_offset_[static_cast<std::size_t>(d)] = offset;
    offset += width;
    width *= static_cast<std::uint64_t>(space_.vocab_size);
  }
  row_count_ = static_cast<std::size_t>(offset);
  logits_ = ParamVector(row_count_ * static_cast<std::size_t>(space_.vocab_size));
}

TabularPolicy TabularPolicy::uniform(const VocabSpec& space) { return TabularPolicy(space); }

TabularPolicy TabularPolicy::randomized(const VocabSpec& space, std::uint64_t seed, double scale) {
  TabularPolicy p(space);
  auto rng = rng::stream_rng(seed, rng::Domain::policy_init, 0);
  for (double& l : p.logits_.values) l = scale * rng.next_gaussian();
  return p;
}

std::size_t TabularPolicy::prefix_row(const Sequence& seq, int depth) const {
  std::uint64_t value = 0;
  for (int i = 0; i < depth; ++i) {
    value = value * static_cast<std::uint64_t>(space_.vocab_size) +
            static_cast<std::uint64_t>(seq[static_cast<std::size_t>(i)]);
  }
  return static_cast<std::size_t>(depth_offset_[static_cast<std::size_t>(depth)] + value);
}

double TabularPolicy::log_prob(const Sequence& seq) const {
  check_sequence(space_, seq);
  const int v = space_.vocab_size;
  double lp = 0.0;
  std::uint64_t row = 0;  // running prefix row id, root first
  std::uint64_t value = 0;
  for (int d = 0; d < space_.seq_len; ++d) {
    const double* rowp = logits_.values.data() + static_cast<std::size_t>(row) * v;
    const RowNorm n = row_norm(rowp, v);
    const Token t = seq[static_cast<std::size_t>(d)];
    lp += rowp[t] - n.max_logit - std::log(n.sum_exp);
    value = value * static_cast<std::uint64_t>(v) + static_cast<std::uint64_t>(t);
    if (d + 1 < space_.seq_len) row = depth_offset_[static_cast<std::size_t>(d + 1)] + value;
  }
  return lp;
}

double TabularPolicy::log_prob_and_grad(const Sequence& seq, SparseGrad& grad) const {
  check_sequence(space_, seq);
  const int v = space_.vocab_size;
  grad.block_width = v;
  grad.rows.assign(static_cast<std::size_t>(space_.seq_len), 0);
  grad.values.assign(static_cast<std::size_t>(space_.seq_len) * static_cast<std::size_t>(v), 0.0);
  double lp = 0.0;
  std::uint64_t row = 0;
  std::uint64_t value = 0;
  for (int d = 0; d < space_.seq_len; ++d) {
    const double* rowp = logits_.values.data() + static_cast<std::size_t>(row) * v;
    const RowNorm n = row_norm(rowp, v);
    const Token t = seq[static_cast<std::size_t>(d)];
    lp += rowp[t] - n.max_logit - std::log(n.sum_exp);
    grad.rows[static_cast<std::size_t>(d)] = static_cast<std::uint32_t>(row);
    double* block = grad.values.data() + static_cast<std::size_t>(d) * v;
    for (int i = 0; i < v; ++i) {
      const double p = std::exp(rowp[i] - n.max_logit) / n.sum_exp;
      block[i] = (i == t ? 1.0 : 0.0) - p;
    }
    value = value * static_cast<std::uint64_t>(v) + static_cast<std::uint64_t>(t);
    if (d + 1 < space_.seq_len) row = depth_offset_[static_cast<std::size_t>(d + 1)] + value;
  }
  return lp;
}

SparseGrad TabularPolicy::grad_log_prob(const Sequence& seq) const {
  SparseGrad g;
  log_prob_and_grad(seq, g);
  return g;
}

double TabularPolicy::grad_log_prob_squared_norm(const Sequence& seq) const {
  check_sequence(space_, seq);
  const int v = space_.vocab_size;
  double total = 0.0;
  std::uint64_t row = 0;
  std::uint64_t value = 0;
  for (int d = 0; d < space_.seq_len; ++d) {
    const double* rowp = logits_.values.data() + static_cast<std::size_t>(row) * v;
    const RowNorm n = row_norm(rowp, v);
    const Token t = seq[static_cast<std::size_t>(d)];
    // Per-row contribution (1 - p_t)^2 + sum_{i != t} p_i^2 = 1 - 2 p_t + sum_i p_i^2.
    double sum_sq = 0.0;
    double p_t = 0.0;
    for (int i = 0; i < v; ++i) {
      const double p = std::exp(rowp[i] - n.max_logit) / n.sum_exp;
      sum_sq += p * p;
      if (i == t) p_t = p;
    }
    total += 1.0 - 2.0 * p_t + sum_sq;
    value = value * static_cast<std::uint64_t>(v) + static_cast<std::uint64_t>(t);
    if (d + 1 < space_.seq_len) row = depth_offset_[static_cast<std::size_t>(d + 1)] + value;
  }
  return total;
}

Sequence TabularPolicy::sample(rng::CounterRng& rng) const {
  const int v = space_.vocab_size;
  Sequence seq(static_cast<std::size_t>(space_.seq_len), 0);
  std::uint64_t row = 0;
  std::uint64_t value = 0;
  for (int d = 0; d < space_.seq_len; ++d) {
    const double* rowp = logits_.values.data() + static_cast<std::size_t>(row) * v;
    const RowNorm n = row_norm(rowp, v);
    const double u = rng.next_unit() * n.sum_exp;
    double acc = 0.0;
    Token t = static_cast<Token>(v - 1);  // fallback absorbs roundoff at the top end
    for (int i = 0; i < v; ++i) {
      acc += std::exp(rowp[i] - n.max_logit);
      if (u < acc) {
        t = static_cast<Token>(i);
        break;
      }
    }
    seq[static_cast<std::size_t>(d)] = t;
    value = value * static_cast<std::uint64_t>(v) + static_cast<std::uint64_t>(t);
    if (d + 1 < space_.seq_len) row = depth_offset_[static_cast<std::size_t>(d + 1)] + value;
  }
  return seq;
}

ExactDistribution TabularPolicy::exact_distribution() const {
  space_.require_enumerable();
  const std::uint64_t n = space_.sequence_count();
  ExactDistribution dist{space_, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  const int v = space_.vocab_size;
  const int depth_max = space_.seq_len;
  // Depth-first walk of the prefix tree; each row's softmax is computed once
  // per prefix, leaves receive the product of path probabilities.
  std::vector<double> path_prob(static_cast<std::size_t>(depth_max) + 1, 1.0);
  std::vector<int> choice(static_cast<std::size_t>(depth_max), 0);
  std::vector<std::vector<double>> row_probs(static_cast<std::size_t>(depth_max),
                                             std::vector<double>(static_cast<std::size_t>(v), 0.0));
  std::uint64_t rank = 0;
  int d = 0;
  std::uint64_t value = 0;  // base-V value of current prefix
  while (true) {
    if (d == depth_max) {
      dist.probs[static_cast<std::size_t>(rank)] = path_prob[static_cast<std::size_t>(d)];
      ++rank;
      // Backtrack to the deepest level with an unexplored sibling.
      while (d > 0 && choice[static_cast<std::size_t>(d - 1)] == v - 1) {
        --d;
        value /= static_cast<std::uint64_t>(v);
      }
      if (d == 0) break;
      --d;
      value /= static_cast<std::uint64_t>(v);
      ++choice[static_cast<std::size_t>(d)];
    } else if (choice[static_cast<std::size_t>(d)] == 0) {
      const std::uint64_t row = depth_offset_[static_cast<std::size_t>(d)] + value;
      const double* rowp = logits_.values.data() + static_cast<std::size_t>(row) * v;
      const RowNorm norm = row_norm(rowp, v);
      for (int i = 0; i < v; ++i) {
        row_probs[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)] =
            std::exp(rowp[i] - norm.max_logit) / norm.sum_exp;
      }
    }
    if (d < depth_max) {
      const int c = choice[static_cast<std::size_t>(d)];
      path_prob[static_cast<std::size_t>(d + 1)] =
          path_prob[static_cast<std::size_t>(d)] *
          row_probs[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)];
      value = value * static_cast<std::uint64_t>(v) + static_cast<std::uint64_t>(c);
      if (d + 1 < depth_max) choice[static_cast<std::size_t>(d + 1)] = 0;
      ++d;
    }
  }
  return dist;
}

void TabularPolicy::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << space_.vocab_size << ' ' << space_.seq_len << '\n';
  const int v = space_.vocab_size;
  char buf[64];
  for (std::size_t r = 0; r < row_count_; ++r) {
    for (int i = 0; i < v; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", logits_[r * static_cast<std::size_t>(v) +
                                                       static_cast<std::size_t>(i)]);
      if (i > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for checkpoint: " + path);
}

TabularPolicy TabularPolicy::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  VocabSpec space;
  if (!(in >> space.vocab_size >> space.seq_len)) {
    throw std::runtime_error("checkpoint header must be 'V L': " + path);
  }
  TabularPolicy p(space);
  for (std::size_t i = 0; i < p.param_count(); ++i) {
    if (!(in >> p.logits_[i])) {
      throw std::runtime_error("checkpoint truncated at logit " + std::to_string(i) + ": " + path);
    }
  }
  double extra;
  if (in >> extra) {
    throw std::runtime_error("checkpoint has trailing data: " + path);
  }
  return p;
}

}  // namespace dpglab
