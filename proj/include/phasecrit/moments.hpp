#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "phasecrit/model.hpp"
#include "phasecrit/scaling.hpp"
#include "phasecrit/tree.hpp"

namespace phasecrit {

// Interaction matrices: 2x2 over (minus, plus) and its Kronecker square over spin pairs
// ordered (--, -+, +-, ++).
Eigen::Matrix2d interaction_matrix(const SpinModel& m);
Eigen::Matrix4d pair_interaction_matrix(const SpinModel& m);

struct FirstMomentPoint {
  double alpha = 0, beta = 0;
  Eigen::Matrix2d X = Eigen::Matrix2d::Zero();
  double phi1 = 0;  // -inf when the support pattern is infeasible
  bool feasible = true;
  Eigen::Vector2d R = Eigen::Vector2d::Zero(), C = Eigen::Vector2d::Zero();
};

struct SecondMomentPoint {
  double alpha = 0, beta = 0, gamma = 0, delta = 0;
  Eigen::Matrix4d Y = Eigen::Matrix4d::Zero();
  double phi2 = 0;
  bool feasible = true;
  Eigen::Vector4d R = Eigen::Vector4d::Zero(), C = Eigen::Vector4d::Zero();
};

FirstMomentPoint phi1(const SpinModel& m, double alpha, double beta, const ScalingOptions& opt = {});
SecondMomentPoint phi2(const SpinModel& m, double alpha, double beta, double gamma, double delta,
                       const ScalingOptions& opt = {}, const Eigen::Vector4d* warm_cols = nullptr);

// Analytic gradients from the scalers; need strictly interior points.
Eigen::Vector2d phi1_gradient(const SpinModel& m, const FirstMomentPoint& p);
Eigen::Vector2d phi2_gradient(const SpinModel& m, const SecondMomentPoint& p);  // d/dgamma, d/ddelta

// Region of admissible overlaps for one side: max(0, 2a-1) <= g <= a.
std::pair<double, double> overlap_range(double a);

// ---- exact finite-n moments (log domain) ----

// log E[Z^{a,b}] over the union of delta uniform perfect matchings; a, b are minus counts.
double exact_first_moment_log(const SpinModel& m, int n, int a, int b);
double exact_first_moment_log(const SpinModel& m, int n, double alpha, double beta);
// log E[Y^{g,dl}]: ordered pairs of configurations with a, b minus counts and overlaps g, dl.
double exact_second_moment_log(const SpinModel& m, int n, int a, int b, int g, int dl);

// log of the expected weight of one uniform matching on N+N vertices with A and B minus
// vertices on the two sides.
double matching_weight_log(const SpinModel& m, int N, int A, int B);

struct LatticePoint {
  int a = 0, b = 0;
  double alpha = 0, beta = 0;  // the rounded fractions actually used
};
LatticePoint round_to_lattice(int n, double alpha, double beta);

// ---- critical points of phi1 ----

struct CriticalPoint {
  double alpha = 0, beta = 0;
  double grad_norm = 0;
  std::string kind;  // "plus_minus", "minus_plus", "symmetric"
};
std::vector<CriticalPoint> find_phi1_critical_points(const SpinModel& m);

// Hessian of Phi_1 in (alpha, beta, x11); for b1 = 0 the 2x2 Hessian in (alpha, beta)
// with x11 pinned at 0.
Eigen::MatrixXd phi1_hessian(const SpinModel& m, double alpha, double beta, const Eigen::Matrix2d& X);
// Leading minors of -H taken from the lower-right corner upward.
std::vector<double> lower_right_minors(const Eigen::MatrixXd& negH);

struct CriticalPointClass {
  CriticalPoint point;
  std::vector<double> numeric_minors;
  std::vector<double> closed_minors;  // empty when b1*b2 = 0
  std::string kind;                   // "local_max" or "saddle"
};
std::vector<CriticalPointClass> classify_phi1_critical_points(const SpinModel& m);

// Closed-form minors P1, P2, P3 at odds (Qp, Qm); pass Q* twice for the symmetric point.
std::array<double, 3> first_moment_minors_closed(const SpinModel& m, double Qp, double Qm);

// ---- second moment ----

// Hessian of Phi_2 in (gamma, delta, y_ij for i, j < 3) at Y; needs Y > 0.
Eigen::MatrixXd phi2_hessian(const SpinModel& m, double alpha, double beta, double gamma, double delta,
                             const Eigen::Matrix4d& Y);
std::array<double, 2> second_moment_minors_closed(const SpinModel& m, const TreePhaseData& t);

struct Phi2SearchOptions {
  int grid = 41;
  int polish_starts = 5;
  double grid_tol = 1e-11;
  double position_tol = 1e-7;
};

struct Phi2MaxReport {
  std::string hypothesis;  // which sufficient condition holds, or "none"
  double alpha = 0, beta = 0;
  double target_gamma = 0, target_delta = 0;
  double found_gamma = 0, found_delta = 0;
  double position_error = 0;
  double phi2_max = 0;
  double two_phi1 = 0;
  double value_gap = 0;  // phi2_max - 2 phi1
  bool has_minors = false;
  std::array<double, 2> numeric_minors{};
  std::array<double, 2> closed_minors{};
  double minors_rel_err = 0;
  bool competing = false;
  double witness_gamma = 0, witness_delta = 0, witness_phi2 = 0;
  int grid_evaluations = 0;
  bool pass = false;
};
Phi2MaxReport verify_phi2_maximum(const SpinModel& m, const Phi2SearchOptions& opt = {});

// ---- asymptotic constants ----

double ratio_limit_formula(double omega, int delta);
double moment_ratio_limit(const SpinModel& m);

struct AsymptoticConstants {
  double E1 = 0, E2 = 0, E3 = 0;
  double first_prefactor = 0;
  double second_prefactor = 0;
  double ratio_limit = 0;
  double identity_lhs = 0;  // E1 E2 E3 / [(B2+Q-)(B2+Q+)(1+B1Q-)(1+B1Q+)]^2
  double identity_rhs = 0;  // 1 - omega^2
  double quad_form_det = 0;  // 4DF - E^2 closed form
};
AsymptoticConstants asymptotic_prefactors(const SpinModel& m);
// 4DF - E^2 from the Schur complement of the numeric Phi_2 Hessian (needs b1*b2 > 0).
double quad_form_det_numeric(const SpinModel& m);

// ---- gadget ratios ----

struct EtaCounts {
  int minus1 = 0, plus1 = 0, minus2 = 0, plus2 = 0;  // on U+ and U-
  int m_prime() const { return minus1 + plus1; }
  void validate() const;
};

double gadget_x_star(const SpinModel& m, double alpha, double beta);

struct GadgetFirstRatio {
  double ratio = 0;
  double x_star = 0;
  bool has_product_form = false;
  double product_form = 0;
};
// At (p+, p-) also evaluates the product-measure form; throws if the two disagree.
GadgetFirstRatio gadget_first_moment_ratio(const SpinModel& m, double alpha, double beta,
                                           const EtaCounts& eta);
double gadget_c_star(const SpinModel& m, const TreePhaseData& t, int m_prime);
double gadget_second_moment_ratio(const SpinModel& m, const EtaCounts& eta);
// Finite-n expectation ratio E[Z(eta)] / E[Z] for the gadget graph, with integer counts.
double gadget_first_moment_ratio_exact(const SpinModel& m, int n, int a, int b, const EtaCounts& eta);

struct MultinomialRatio {
  double approx = 0;
  double exact = 0;
  double rel_error = 0;
  double bound = 0;          // sum y_i^2 / b_i
  double rigorous_bound = 0;  // expm1(sum y_i (y_i + 1) / (2 b_i))
};
// (sum b + sum y)! / (sum b)! / prod((b_i + y_i)! / b_i!) relative to its power approximation.
MultinomialRatio multinomial_ratio_approx(const std::vector<long>& b, const std::vector<long>& y);

}  // namespace phasecrit
