#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace phasecrit {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// lgamma_r is reentrant; plain lgamma writes the global signgam.
double log_gamma(double x);
double log_factorial(long n);
double log_choose(long n, long k);  // -inf outside 0 <= k <= n

double log_sum_exp(std::span<const double> v);

// Streaming log-sum-exp.
class LogSum {
 public:
  void add(double v) {
    if (v == kNegInf) return;
    if (v <= m_) {
      s_ += std::exp(v - m_);
    } else {
      s_ = s_ * std::exp(m_ - v) + 1.0;
      m_ = v;
    }
  }
  void merge(const LogSum& o) {
    if (o.m_ == kNegInf) return;
    add(o.m_ + std::log(o.s_));
  }
  double value() const { return m_ == kNegInf ? kNegInf : m_ + std::log(s_); }

 private:
  double m_ = kNegInf;
  double s_ = 0.0;
};

// Table of log(k!) for k = 0..n.
std::vector<double> log_factorial_table(int n);

// x ln x with 0 ln 0 = 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace phasecrit
