#include "phasecrit/scaling.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasecrit/numeric.hpp"

namespace phasecrit {

namespace {

void clean_marginal(Eigen::VectorXd& v, const char* name) {
  if (v.size() == 0) throw std::invalid_argument(std::string(name) + " marginals are empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw std::invalid_argument(std::string(name) + " marginal is not finite");
    if (v[i] < 0.0) {
      if (v[i] < -1e-14) {
        std::ostringstream os;
        os << name << " marginal " << i << " is negative (" << v[i] << ")";
        throw std::invalid_argument(os.str());
      }
      v[i] = 0.0;
    }
  }
  if (std::abs(v.sum() - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << name << " marginals sum to " << v.sum() << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

void MarginalSpec::validate() const {
  Eigen::VectorXd r = rows, c = cols;
  clean_marginal(r, "row");
  clean_marginal(c, "col");
}

bool support_feasible(const Eigen::MatrixXd& M, const MarginalSpec& marg, std::string* why) {
  const int m = static_cast<int>(M.rows()), n = static_cast<int>(M.cols());
  for (int i = 0; i < m; ++i) {
    if (marg.rows[i] <= 0.0) continue;
    bool any = false;
    for (int j = 0; j < n; ++j) any = any || (M(i, j) > 0.0 && marg.cols[j] > 0.0);
    if (!any) {
      if (why) *why = "row " + std::to_string(i) + " has positive marginal but no usable support";
      return false;
    }
  }
  for (int j = 0; j < n; ++j) {
    if (marg.cols[j] <= 0.0) continue;
    bool any = false;
    for (int i = 0; i < m; ++i) any = any || (M(i, j) > 0.0 && marg.rows[i] > 0.0);
    if (!any) {
      if (why) *why = "col " + std::to_string(j) + " has positive marginal but no usable support";
      return false;
    }
  }
  // Hall condition on row subsets; all instances here have at most a handful of rows.
  if (m > 20) return true;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double need = 0.0, have = 0.0;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1u) need += marg.rows[i];
    for (int j = 0; j < n; ++j) {
      bool reach = false;
      for (int i = 0; i < m && !reach; ++i) reach = (mask >> i & 1u) && M(i, j) > 0.0;
      if (reach) have += marg.cols[j];
    }
    if (need > have + 1e-12) {
      if (why) {
        std::ostringstream os;
        os << "row set {";
        for (int i = 0; i < m; ++i)
          if (mask >> i & 1u) os << ' ' << i;
        os << " } needs mass " << need << " but its support columns carry only " << have;
        *why = os.str();
      }
      return false;
    }
  }
  return true;
}

double entropy_objective(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Z) {
  double g = 0.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double z = Z(i, j);
      if (z <= 0.0) continue;
      if (M(i, j) <= 0.0) return kNegInf;
      g += z * (std::log(M(i, j)) - std::log(z));
    }
  return g;
}

ScalingSolution maximize_entropy(const Eigen::MatrixXd& M, const MarginalSpec& marg_in,
                                 const ScalingOptions& opt, const Eigen::VectorXd* warm_cols) {
  const Eigen::Index m = M.rows(), n = M.cols();
  if (marg_in.rows.size() != m || marg_in.cols.size() != n)
    throw std::invalid_argument("maximize_entropy: marginal sizes do not match M");
  if ((M.array() < 0.0).any() || !M.allFinite())
    throw std::invalid_argument("maximize_entropy: M must be finite and nonnegative");
  MarginalSpec marg = marg_in;
  clean_marginal(marg.rows, "row");
  clean_marginal(marg.cols, "col");
  std::string why;
  if (!support_feasible(M, marg, &why))
    throw std::invalid_argument("maximize_entropy: infeasible support: " + why);

  ScalingSolution s;
  s.R = Eigen::VectorXd::Zero(m);
  s.C = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j)
    if (marg.cols[j] > 0.0) s.C[j] = warm_cols && (*warm_cols)[j] > 0.0 ? (*warm_cols)[j] : 1.0;

  for (s.sweeps = 1; s.sweeps <= opt.max_sweeps; ++s.sweeps) {
    for (Eigen::Index i = 0; i < m; ++i)
      s.R[i] = marg.rows[i] > 0.0 ? marg.rows[i] / M.row(i).dot(s.C) : 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      s.C[j] = marg.cols[j] > 0.0 ? marg.cols[j] / M.col(j).dot(s.R) : 0.0;
    // Columns are exact after the column update; only rows carry residual.
    double res = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (marg.rows[i] <= 0.0) continue;
      double r = std::abs(s.R[i] * M.row(i).dot(s.C) - marg.rows[i]);
      if (opt.relative) r /= marg.rows[i];
      res = std::max(res, r);
    }
    s.residual = res;
    if (res < opt.tol) break;
  }
  if (s.residual >= opt.tol) {
    std::ostringstream os;
    os << "maximize_entropy: no convergence after " << opt.max_sweeps
       << " sweeps, residual " << s.residual;
    throw std::runtime_error(os.str());
  }
  s.sweeps = std::min(s.sweeps, opt.max_sweeps);

  Eigen::Index first = 0;
  while (first < m && s.R[first] == 0.0) ++first;
  const double t = s.R[first];
  s.R /= t;
  s.C *= t;

  s.Z_star = Eigen::MatrixXd::Zero(m, n);
  double gs = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double z = M(i, j) * s.R[i] * s.C[j];
      s.Z_star(i, j) = z;
      if (z > 0.0) gs -= z * std::log(s.R[i] * s.C[j]);
    }
  s.g_star = entropy_objective(M, s.Z_star);
  s.g_star_scalers = gs;
  return s;
}

std::pair<double, double> gstar_gradient(const ScalingSolution& s, const Eigen::VectorXd& du,
                                         const Eigen::VectorXd& dv) {
  if (du.size() != s.R.size() || dv.size() != s.C.size())
    throw std::invalid_argument("gstar_gradient: derivative sizes do not match");
  double gu = 0.0, gv = 0.0;
  for (Eigen::Index i = 0; i < s.R.size(); ++i) {
    if (!(s.R[i] > 0.0))
      throw std::invalid_argument("gstar_gradient: zero row marginal, gradient needs an interior point");
    gu -= std::log(s.R[i]) * du[i];
  }
  for (Eigen::Index j = 0; j < s.C.size(); ++j) {
    if (!(s.C[j] > 0.0))
      throw std::invalid_argument("gstar_gradient: zero column marginal, gradient needs an interior point");
    gv -= std::log(s.C[j]) * dv[j];
  }
  return {gu, gv};
}

Eigen::MatrixXd entropy_hessian_free(const Eigen::MatrixXd& Z) {
  const Eigen::Index m = Z.rows(), n = Z.cols();
  const Eigen::Index fm = m - 1, fn = n - 1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(fm * fn, fm * fn);
  const double corner = 1.0 / Z(fm, fn);
  for (Eigen::Index i = 0; i < fm; ++i)
    for (Eigen::Index j = 0; j < fn; ++j)
      for (Eigen::Index k = 0; k < fm; ++k)
        for (Eigen::Index l = 0; l < fn; ++l) {
          double h = corner;
          if (i == k && j == l) h += 1.0 / Z(i, j);
          if (i == k) h += 1.0 / Z(i, fn);
          if (j == l) h += 1.0 / Z(fm, j);
          H(i * fn + j, k * fn + l) = -h;
        }
  return H;
}

QuadraticDecay quadratic_decay_check(const Eigen::MatrixXd& M, const MarginalSpec& marg) {
  if ((M.array() <= 0.0).any())
    throw std::invalid_argument("quadratic_decay_check: needs M > 0 entrywise (interior solution)");
  const ScalingSolution s = maximize_entropy(M, marg);
  if ((s.Z_star.array() <= 0.0).any())
    throw std::invalid_argument("quadratic_decay_check: optimizer is not interior");
  QuadraticDecay q;
  q.hessian = entropy_hessian_free(s.Z_star);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.hessian);
  q.eigenvalues = es.eigenvalues();
  q.pass = q.eigenvalues.size() == 0 || q.eigenvalues.maxCoeff() < 0.0;
  return q;
}

}  // namespace phasecrit
