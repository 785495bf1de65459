#include "phasecrit/numeric.hpp"

#include <algorithm>
#include <math.h>

namespace phasecrit {

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_factorial(long n) { return log_gamma(static_cast<double>(n) + 1.0); }

double log_choose(long n, long k) {
  if (k < 0 || k > n || n < 0) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_sum_exp(std::span<const double> v) {
  LogSum s;
  for (double x : v) s.add(x);
  return s.value();
}

std::vector<double> log_factorial_table(int n) {
  std::vector<double> t(std::max(n, 0) + 1, 0.0);
  for (int k = 2; k <= n; ++k) t[k] = log_factorial(k);
  return t;
}

}  // namespace phasecrit
