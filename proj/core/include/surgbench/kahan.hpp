#pragma once
// Compensated (Kahan) summation. Metric reductions use this so aggregates do
// not depend on how work was chunked across workers.

#include <cstddef>

namespace surgbench {

class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double kahan_mean(const double* data, std::size_t n) {
  if (n == 0) return 0.0;
  KahanSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(data[i]);
  return s.value() / static_cast<double>(n);
}

}  // namespace surgbench
