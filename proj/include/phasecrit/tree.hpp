#pragma once

#include <string>
#include <vector>

#include "phasecrit/model.hpp"

namespace phasecrit {

enum class Regime { Uniqueness, NonUniqueness, Boundary };
std::string to_string(Regime r);

struct TreePhaseData {
  double q_plus = 0, q_minus = 0, q_star = 0;
  double p_plus = 0, p_minus = 0, p_star = 0;
  double Q_plus = 0, Q_minus = 0, Q_star = 0;
  double omega = 0, omega_star = 0;
  Regime regime = Regime::Uniqueness;
  double residual = 0;  // max relative residual of the two-step recursion over returned pairs
};

struct TreeOptions {
  double boundary_tol = 1e-8;
  int max_iterations = 2000000;
};

// One step of the tree recursion on the (Delta-1)-ary tree:
// f(x) = lambda * ((b1 x + 1) / (x + b2))^{Delta-1}.
double tree_map(const SpinModel& m, double x);
double tree_map_derivative(const SpinModel& m, double x);

// Symmetric fixed point x = f(x) by bisection.
double solve_symmetric_fixed_point(const SpinModel& m);

double omega_value(const SpinModel& m, double q_plus_odds, double q_minus_odds);

// (Delta-1)^2 * omega at the symmetric fixed point; > 1 iff non-uniqueness.
double uniqueness_criterion(const SpinModel& m);

TreePhaseData solve_tree_fixed_points(const SpinModel& m, const TreeOptions& opt = {});

struct Marginals {
  double q_plus, q_minus, q_star, p_plus, p_minus, p_star;
};
Marginals tree_marginals(const SpinModel& m, double Q_plus, double Q_minus, double Q_star);

// Relative residual of the two-step system x = f(y), y = f(x).
double fixed_point_residual(const SpinModel& m, double x, double y);

struct UniquenessReport {
  Regime regime;
  double criterion;  // (Delta-1)^2 omega*
  bool has_closed_form = false;
  std::string threshold_name;  // "lambda_c" or "B_c"
  double threshold = 0;
  double signed_distance = 0;  // parameter minus threshold
};
UniquenessReport classify_uniqueness(const SpinModel& m, const TreeOptions& opt = {});

struct NonuniquenessReport {
  double lhs;         // (Delta-1)^2 omega
  double rhs;         // (Delta-1)^2 omega*
  double strong_lhs;  // b1 xy + b1 b2 (x+y) + b2 at (Q+, Q-)
  double strong_rhs;  // (d-1)(1-b1 b2) sqrt(xy); equal to strong_lhs when d = 2
  bool boundary = false;
  bool pass = false;
};
NonuniquenessReport check_nonuniqueness_inequality(const SpinModel& m);

struct FerroCheck {
  bool pass = true;
  int points = 0;
  double witness_z = 0;  // first violating z, if any
};
// z^{1/d} > (b'z+1)/(z+b') for z > 1 and the reverse for z < 1, on a log grid.
FerroCheck ferro_monotonicity_check(double b_prime, int d, int points_per_side = 2000);

}  // namespace phasecrit
