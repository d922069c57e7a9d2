#pragma once

#include <cmath>
#include <limits>

namespace ivp {

using LogValue = double;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// Streaming log-sum-exp with a running maximum and a compensated linear sum.
class LogSum {
 public:
  void add(double x) { add_scaled(x, 1.0); }

  // Adds count * e^x.
  void add_scaled(double x, double count) {
    if (x == kNegInf || count == 0.0) return;
    if (x > max_) {
      const double f = (max_ == kNegInf) ? 0.0 : std::exp(max_ - x);
      sum_ *= f;
      comp_ *= f;
      max_ = x;
    }
    const double term = count * std::exp(x - max_);
    const double y = term - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }

  void merge(const LogSum& o) {
    if (o.max_ == kNegInf) return;
    add_scaled(o.max_, o.sum_ - o.comp_);
  }

  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_ - comp_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace ivp
