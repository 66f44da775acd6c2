#include "dpglab/param_vector.hpp"

#include <cmath>

namespace dpglab {

void ParamVector::fill(double v) {
  for (double& x : values) x = v;
}

void ParamVector::add_scaled(const ParamVector& other, double coeff) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += coeff * other.values[i];
}

void ParamVector::scale(double coeff) {
  for (double& x : values) x *= coeff;
}

double ParamVector::dot(const ParamVector& other) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
  return s;
}

double ParamVector::squared_norm() const { return dot(*this); }

double ParamVector::max_abs() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::fabs(x));
  return m;
}

bool ParamVector::all_finite() const {
  for (double x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double SparseGrad::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

void SparseGrad::scale(double coeff) {
  for (double& v : values) v *= coeff;
}

void SparseGrad::add_to(ParamVector& dense, double coeff) const {
  const auto w = static_cast<std::size_t>(block_width);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const std::size_t base = static_cast<std::size_t>(rows[b]) * w;
    for (std::size_t v = 0; v < w; ++v) dense[base + v] += coeff * values[b * w + v];
  }
}

ParamVector SparseGrad::to_dense(std::size_t param_count) const {
  ParamVector out(param_count);
  add_to(out);
  return out;
}

}  // namespace dpglab
