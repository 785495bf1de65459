#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

namespace phasecrit {

struct MarginalSpec {
  Eigen::VectorXd rows;
  Eigen::VectorXd cols;
  // Sums equal 1 within 1e-12, entries >= 0 (tiny negative round-off is clamped).
  void validate() const;
};

struct ScalingOptions {
  double tol = 1e-13;  // max marginal residual
  int max_sweeps = 100000;
  bool relative = false;  // measure each row residual relative to its marginal
};

struct ScalingSolution {
  Eigen::VectorXd R;       // row scalers, zero on dropped rows
  Eigen::VectorXd C;       // column scalers, zero on dropped cols
  Eigen::MatrixXd Z_star;  // M_ij R_i C_j
  double g_star = 0;       // direct value of sum Z (ln M - ln Z)
  double g_star_scalers = 0;  // -sum Z ln(R_i C_j)
  double residual = 0;
  int sweeps = 0;
};

// Maximizes sum Z_ij ln M_ij - Z_ij ln Z_ij over nonnegative Z with the given row and
// column sums and Z_ij = 0 wherever M_ij = 0. Gauge: the first active row scaler is 1.
// Throws std::invalid_argument on an infeasible support pattern and std::runtime_error if
// the sweeps do not converge.
ScalingSolution maximize_entropy(const Eigen::MatrixXd& M, const MarginalSpec& marg,
                                 const ScalingOptions& opt = {},
                                 const Eigen::VectorXd* warm_cols = nullptr);

// Returns false (with the offending subset in *why) when no matrix with the support of M
// has the requested marginals.
bool support_feasible(const Eigen::MatrixXd& M, const MarginalSpec& marg, std::string* why = nullptr);

// dg*/du = -sum ln(R_i) dalpha_i/du, dg*/dv = -sum ln(C_j) dbeta_j/dv.
std::pair<double, double> gstar_gradient(const ScalingSolution& s, const Eigen::VectorXd& drows_du,
                                         const Eigen::VectorXd& dcols_dv);

struct QuadraticDecay {
  bool pass = false;
  Eigen::MatrixXd hessian;       // over free entries Z_ij, i < m-1, j < n-1
  Eigen::VectorXd eigenvalues;   // ascending
};
// Hessian of the entropy objective in the full-dimensional parametrization at Z*.
// Requires M > 0 entrywise.
QuadraticDecay quadratic_decay_check(const Eigen::MatrixXd& M, const MarginalSpec& marg);

// Hessian of -sum Z ln Z in the full-dimensional parametrization; exposed for reuse.
Eigen::MatrixXd entropy_hessian_free(const Eigen::MatrixXd& Z);

// Objective value at an arbitrary Z (entries with M = 0 must be 0).
double entropy_objective(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Z);

}  // namespace phasecrit
