#pragma once

#include <cmath>

namespace dpglab {

/* Kahan compensated summation. Exact oracle sums run over up to 2^22 terms;
 * plain accumulation loses digits we assert on. */
class KahanAccumulator {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double sum() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace dpglab
