#pragma once

#include <cstdint>
#include <vector>

#include "phasecrit/model.hpp"

namespace phasecrit {

struct ConditioningData {
  int max_len = 0;
  double omega = 0;
  std::vector<int> lengths;           // even i = 2, 4, ..., max_len
  std::vector<double> lambdas;        // cycle rates r(Delta, i) / i
  std::vector<double> deltas;         // from the closed walk spectrum
  std::vector<double> deltas_from_omega;  // omega^{i/2}
  std::vector<double> partial_sums;   // exp of the running sum of lambda_i delta_i^2
  double sum_closed_form = 0;
  double tail_bound = 0;              // bound on sum_closed_form - partial_sums.back()
  double max_delta_gap = 0;           // max |deltas - deltas_from_omega|
};

// Needs non-uniqueness fixed points with (Delta-1) omega < 1; max_len >= 2.
ConditioningData conditioning_data(const SpinModel& m, int max_len = 20);

// Exact finite-n E[Z^{a,b} X_2] / E[Z^{a,b}] over the union-of-matchings ensemble,
// where X_2 counts pairs of parallel edges.
double exact_conditioned_double_edge_ratio(const SpinModel& m, int n, int a, int b);

struct ConditionedMoment {
  int n = 0, i = 0, a = 0, b = 0;
  long trials = 0;
  double estimate = 0, stderr_ = 0;
  double limit = 0;        // lambda_i (1 + delta_i)
  double exact = 0;        // finite-n value when available (i = 2), else NaN
  double mean_cycles = 0;  // unweighted sample mean of X_i
};

// Ratio estimator sum(Z X_i) / sum(Z) over seeded graphs, with a delta-method standard error.
// a, b < 0 picks the lattice point nearest (p+, p-) (or (p*, p*) in uniqueness).
ConditionedMoment conditioned_cycle_moment_mc(const SpinModel& m, int n, int i, long trials, std::uint64_t seed,
                                              int a = -1, int b = -1);

struct FactorialMomentCheck {
  double estimate = 0, stderr_ = 0, target = 0;
};
// E[(X)_r] for X ~ Poisson(mu) by sampling; target mu^r.
FactorialMomentCheck poisson_factorial_moment(double mu, int r, long samples, std::uint64_t seed);

}  // namespace phasecrit
