#pragma once

#include <string>

namespace phasecrit {

// Weight of a configuration: lambda^{#minus} * b1^{#(minus,minus) edges} * b2^{#(plus,plus) edges}.
// Spin -1 ("minus") is the occupied spin; index 1 refers to minus, index 2 to plus.
struct SpinModel {
  double b1 = 1.0;
  double b2 = 1.0;
  double lambda = 1.0;
  int delta = 3;

  // Throws std::invalid_argument. Tree-level code needs delta >= 3; moment and
  // oracle code also accepts smaller degrees.
  void validate(int min_delta = 3) const;

  int d() const { return delta - 1; }
  bool antiferromagnetic() const { return b1 * b2 < 1.0; }
  bool hard_core() const { return b1 == 0.0 && b2 == 1.0; }
  bool ising_no_field() const { return b1 == b2 && lambda == 1.0; }

  static SpinModel hardcore(int delta, double lambda) { return {0.0, 1.0, lambda, delta}; }
  static SpinModel ising(int delta, double b) { return {b, b, 1.0, delta}; }
};

std::string describe(const SpinModel& m);

// Closed-form thresholds on the Delta-regular tree.
double hardcore_lambda_c(int delta);
double ising_b_c(int delta);

}  // namespace phasecrit
