#pragma once

/*
 * Dense and sparse views of policy-parameter-shaped vectors.
 *
 * Layout matches TabularPolicy storage: row-major over prefix rows, V logits
 * per row. A single sequence only touches the L rows on its prefix path, so
 * per-sample gradients are kept sparse (row ids + V-wide blocks) and
 * densified or accumulated on demand.
 */

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dpglab {

struct ParamVector {
  std::vector<double> values;

  explicit ParamVector(std::size_t n = 0) : values(n, 0.0) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  void fill(double v);
  void add_scaled(const ParamVector& other, double coeff);  // this += coeff * other
  void scale(double coeff);
  double dot(const ParamVector& other) const;
  double squared_norm() const;
  double max_abs() const;
  bool all_finite() const;
};

/* Gradient of log-probability of one sequence: blocks.size() == rows.size(),
 * each block is V consecutive entries for one prefix row. Rows are the L
 * distinct prefixes of the sequence, in path order. */
struct SparseGrad {
  int block_width = 0;                  // V
  std::vector<std::uint32_t> rows;      // prefix row ids
  std::vector<double> values;           // rows.size() * block_width entries

  double squared_norm() const;
  void scale(double coeff);
  void add_to(ParamVector& dense, double coeff = 1.0) const;
  ParamVector to_dense(std::size_t param_count) const;
};

}  // namespace dpglab
