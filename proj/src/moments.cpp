#include "phasecrit/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "phasecrit/numeric.hpp"

namespace phasecrit {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
}

// Exponent accumulator that keeps 0 * ln 0 = 0.
double pw_log(double count, double base_log) { return count == 0.0 ? 0.0 : count * base_log; }

}  // namespace

Eigen::Matrix2d interaction_matrix(const SpinModel& m) {
  Eigen::Matrix2d M;
  M << m.b1, 1.0, 1.0, m.b2;
  return M;
}

Eigen::Matrix4d pair_interaction_matrix(const SpinModel& m) {
  const Eigen::Matrix2d A = interaction_matrix(m);
  Eigen::Matrix4d M;
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      for (int t1 = 0; t1 < 2; ++t1)
        for (int t2 = 0; t2 < 2; ++t2) M(2 * s1 + s2, 2 * t1 + t2) = A(s1, t1) * A(s2, t2);
  return M;
}

std::pair<double, double> overlap_range(double a) { return {std::max(0.0, 2.0 * a - 1.0), a}; }

FirstMomentPoint phi1(const SpinModel& m, double alpha, double beta, const ScalingOptions& opt) {
  m.validate(1);
  check_fraction(alpha, "alpha");
  check_fraction(beta, "beta");
  FirstMomentPoint p;
  p.alpha = alpha;
  p.beta = beta;
  const Eigen::Matrix2d M = interaction_matrix(m);
  MarginalSpec marg{Eigen::Vector2d(alpha, 1.0 - alpha), Eigen::Vector2d(beta, 1.0 - beta)};
  if (!support_feasible(M, marg)) {
    p.feasible = false;
    p.phi1 = kNegInf;
    return p;
  }
  const ScalingSolution s = maximize_entropy(M, marg, opt);
  p.X = s.Z_star;
  p.R = s.R;
  p.C = s.C;
  const double f1 = xlogx(alpha) + xlogx(1.0 - alpha) + xlogx(beta) + xlogx(1.0 - beta);
  p.phi1 = (alpha + beta) * std::log(m.lambda) + m.d() * f1 + m.delta * s.g_star;
  return p;
}

SecondMomentPoint phi2(const SpinModel& m, double alpha, double beta, double gamma, double delta,
                       const ScalingOptions& opt, const Eigen::Vector4d* warm_cols) {
  m.validate(1);
  check_fraction(alpha, "alpha");
  check_fraction(beta, "beta");
  const auto [gl, gh] = overlap_range(alpha);
  const auto [dl, dh] = overlap_range(beta);
  const double eps = 1e-15;
  if (gamma < gl - eps || gamma > gh + eps || delta < dl - eps || delta > dh + eps) {
    std::ostringstream os;
    os.precision(17);
    os << "phi2: overlap (" << gamma << ", " << delta << ") outside the admissible region for ("
       << alpha << ", " << beta << ")";
    throw std::invalid_argument(os.str());
  }
  SecondMomentPoint p;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.delta = delta;
  const Eigen::Vector4d L(gamma, alpha - gamma, alpha - gamma, 1.0 - 2.0 * alpha + gamma);
  const Eigen::Vector4d R(delta, beta - delta, beta - delta, 1.0 - 2.0 * beta + delta);
  const Eigen::Matrix4d M = pair_interaction_matrix(m);
  MarginalSpec marg{L.cwiseMax(0.0), R.cwiseMax(0.0)};
  if (!support_feasible(M, marg)) {
    p.feasible = false;
    p.phi2 = kNegInf;
    return p;
  }
  Eigen::VectorXd warm;
  if (warm_cols) warm = *warm_cols;
  const ScalingSolution s = maximize_entropy(M, marg, opt, warm_cols ? &warm : nullptr);
  p.Y = s.Z_star;
  p.R = s.R;
  p.C = s.C;
  double f2 = 0.0;
  for (int i = 0; i < 4; ++i) f2 += xlogx(marg.rows[i]) + xlogx(marg.cols[i]);
  p.phi2 = 2.0 * (alpha + beta) * std::log(m.lambda) + m.d() * f2 + m.delta * s.g_star;
  return p;
}

Eigen::Vector2d phi1_gradient(const SpinModel& m, const FirstMomentPoint& p) {
  if (!(p.alpha > 0 && p.alpha < 1 && p.beta > 0 && p.beta < 1) || !p.feasible)
    throw std::invalid_argument("phi1_gradient: needs an interior feasible point");
  if (!(p.R.minCoeff() > 0 && p.C.minCoeff() > 0))
    throw std::invalid_argument("phi1_gradient: zero scaler");
  const double ll = std::log(m.lambda);
  return {ll + m.d() * std::log(p.alpha / (1.0 - p.alpha)) + m.delta * std::log(p.R[1] / p.R[0]),
          ll + m.d() * std::log(p.beta / (1.0 - p.beta)) + m.delta * std::log(p.C[1] / p.C[0])};
}

Eigen::Vector2d phi2_gradient(const SpinModel& m, const SecondMomentPoint& p) {
  if (!p.feasible || !(p.R.minCoeff() > 0 && p.C.minCoeff() > 0))
    throw std::invalid_argument("phi2_gradient: needs an interior feasible point");
  const double a = p.alpha, b = p.beta, g = p.gamma, dl = p.delta;
  const double fg = std::log(g * (1.0 - 2.0 * a + g) / ((a - g) * (a - g)));
  const double fd = std::log(dl * (1.0 - 2.0 * b + dl) / ((b - dl) * (b - dl)));
  return {m.d() * fg + m.delta * std::log(p.R[1] * p.R[2] / (p.R[0] * p.R[3])),
          m.d() * fd + m.delta * std::log(p.C[1] * p.C[2] / (p.C[0] * p.C[3]))};
}

// ---------------------------------------------------------------------------
// exact finite-n moments

double matching_weight_log(const SpinModel& m, int N, int A, int B) {
  if (A < 0 || B < 0 || A > N || B > N) throw std::invalid_argument("matching_weight_log: bad counts");
  const double l1 = safe_log(m.b1), l2 = std::log(m.b2);
  LogSum s;
  for (int k = std::max(0, A + B - N); k <= std::min(A, B); ++k) {
    if (k > 0 && m.b1 == 0.0) break;
    const double w = log_choose(A, k) + log_choose(N - A, B - k) - log_choose(N, B) +
                     pw_log(k, l1) + pw_log(N - A - B + k, l2);
    s.add(w);
  }
  return s.value();
}

double exact_first_moment_log(const SpinModel& m, int n, int a, int b) {
  m.validate(1);
  if (n < 1 || a < 0 || b < 0 || a > n || b > n)
    throw std::invalid_argument("exact_first_moment_log: counts out of range");
  return (a + b) * std::log(m.lambda) + log_choose(n, a) + log_choose(n, b) +
         m.delta * matching_weight_log(m, n, a, b);
}

double exact_first_moment_log(const SpinModel& m, int n, double alpha, double beta) {
  const double an = alpha * n, bn = beta * n;
  if (std::abs(an - std::round(an)) > 1e-9 || std::abs(bn - std::round(bn)) > 1e-9)
    throw std::invalid_argument(
        "exact_first_moment_log: alpha*n and beta*n must be integers; round with round_to_lattice");
  return exact_first_moment_log(m, n, static_cast<int>(std::lround(an)), static_cast<int>(std::lround(bn)));
}

LatticePoint round_to_lattice(int n, double alpha, double beta) {
  LatticePoint p;
  p.a = static_cast<int>(std::lround(alpha * n));
  p.b = static_cast<int>(std::lround(beta * n));
  p.alpha = static_cast<double>(p.a) / n;
  p.beta = static_cast<double>(p.b) / n;
  return p;
}

double exact_second_moment_log(const SpinModel& m, int n, int a, int b, int g, int dl) {
  m.validate(1);
  if (n > 40) throw std::invalid_argument("exact_second_moment_log: n > 40; validate by Monte Carlo instead");
  const int L[4] = {g, a - g, a - g, n - 2 * a + g};
  const int R[4] = {dl, b - dl, b - dl, n - 2 * b + dl};
  for (int i = 0; i < 4; ++i)
    if (L[i] < 0 || R[i] < 0 || a > n || b > n)
      throw std::invalid_argument("exact_second_moment_log: overlap counts outside the admissible region");
  const Eigen::Matrix4d M = pair_interaction_matrix(m);
  double lm[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) lm[i][j] = safe_log(M(i, j));
  const std::vector<double> lf = log_factorial_table(n);
  double base = -lf[n];
  for (int i = 0; i < 4; ++i) base += lf[L[i]] + lf[R[i]];

  LogSum sum;
  int cap[4];
  // Rows 0..2 are enumerated; row 3 takes whatever column capacity remains.
  auto row_terms = [&](int i, const int* c, auto&& emit) {
    for (int k0 = 0; k0 <= std::min(L[i], c[0]); ++k0)
      for (int k1 = 0; k1 <= std::min(L[i] - k0, c[1]); ++k1)
        for (int k2 = 0; k2 <= std::min(L[i] - k0 - k1, c[2]); ++k2) {
          const int k3 = L[i] - k0 - k1 - k2;
          if (k3 > c[3]) continue;
          emit(k0, k1, k2, k3);
        }
  };
  auto cell = [&](int i, int j, int k) {
    if (k == 0) return 0.0;
    return lm[i][j] == kNegInf ? kNegInf : k * lm[i][j] - lf[k];
  };
  for (int j = 0; j < 4; ++j) cap[j] = R[j];
  row_terms(0, cap, [&](int a0, int a1, int a2, int a3) {
    const double w0 = cell(0, 0, a0) + cell(0, 1, a1) + cell(0, 2, a2) + cell(0, 3, a3);
    if (w0 == kNegInf) return;
    const int c1[4] = {cap[0] - a0, cap[1] - a1, cap[2] - a2, cap[3] - a3};
    row_terms(1, c1, [&](int b0, int b1, int b2, int b3) {
      const double w1 = cell(1, 0, b0) + cell(1, 1, b1) + cell(1, 2, b2) + cell(1, 3, b3);
      if (w1 == kNegInf) return;
      const int c2[4] = {c1[0] - b0, c1[1] - b1, c1[2] - b2, c1[3] - b3};
      row_terms(2, c2, [&](int d0, int d1, int d2, int d3) {
        const double w2 = cell(2, 0, d0) + cell(2, 1, d1) + cell(2, 2, d2) + cell(2, 3, d3);
        if (w2 == kNegInf) return;
        const int r3[4] = {c2[0] - d0, c2[1] - d1, c2[2] - d2, c2[3] - d3};
        double w3 = 0.0;
        for (int j = 0; j < 4; ++j) w3 += cell(3, j, r3[j]);
        if (w3 == kNegInf) return;
        sum.add(w0 + w1 + w2 + w3);
      });
    });
  });
  const double logS = base + sum.value();
  const double pre = 2.0 * (a + b) * std::log(m.lambda) + log_choose(n, a) + log_choose(a, g) +
                     log_choose(n - a, a - g) + log_choose(n, b) + log_choose(b, dl) +
                     log_choose(n - b, b - dl);
  return pre + m.delta * logS;
}

// ---------------------------------------------------------------------------
// critical points of phi1

std::vector<CriticalPoint> find_phi1_critical_points(const SpinModel& m) {
  const TreePhaseData t = solve_tree_fixed_points(m);
  std::vector<CriticalPoint> pts;
  auto add = [&](double a, double b, const char* kind) {
    ScalingOptions opt;
    opt.relative = true;
    const FirstMomentPoint p = phi1(m, a, b, opt);
    CriticalPoint c{a, b, phi1_gradient(m, p).norm(), kind};
    if (!(c.grad_norm < 1e-8)) {
      std::ostringstream os;
      os << "phi1 critical point (" << a << ", " << b << ") fails stationarity: |grad| = " << c.grad_norm;
      throw std::runtime_error(os.str());
    }
    pts.push_back(c);
  };
  if (t.regime == Regime::NonUniqueness) {
    add(t.p_plus, t.p_minus, "plus_minus");
    add(t.p_minus, t.p_plus, "minus_plus");
  }
  add(t.p_star, t.p_star, "symmetric");
  return pts;
}

Eigen::MatrixXd phi1_hessian(const SpinModel& m, double a, double b, const Eigen::Matrix2d& X) {
  const double D = m.delta, d = m.d();
  const double da = d * (1.0 / a + 1.0 / (1.0 - a)), db = d * (1.0 / b + 1.0 / (1.0 - b));
  if (m.b1 == 0.0) {
    // x11 = 0; free (alpha, beta) with x12 = alpha, x21 = beta, x22 = 1 - alpha - beta.
    Eigen::Matrix2d H;
    H << da, 0.0, 0.0, db;
    const double x12 = a, x21 = b, x22 = 1.0 - a - b;
    H(0, 0) -= D / x12;
    H(1, 1) -= D / x21;
    H.array() -= D / x22;
    return H;
  }
  const Eigen::Vector3d dir[4] = {{0, 0, 1}, {1, 0, -1}, {0, 1, -1}, {-1, -1, 1}};
  const double x[4] = {X(0, 0), X(0, 1), X(1, 0), X(1, 1)};
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  H(0, 0) = da;
  H(1, 1) = db;
  for (int k = 0; k < 4; ++k) H -= D / x[k] * dir[k] * dir[k].transpose();
  return H;
}

std::vector<double> lower_right_minors(const Eigen::MatrixXd& N) {
  const Eigen::Index s = N.rows();
  std::vector<double> out;
  for (Eigen::Index k = 1; k <= s; ++k) out.push_back(N.bottomRightCorner(k, k).determinant());
  return out;
}

std::array<double, 3> first_moment_minors_closed(const SpinModel& m, double qp, double qm) {
  const double B1 = m.b1, B2 = m.b2, D = m.delta;
  const double E1 = B1 * qm * qp + qm + qp + B2;
  const double E2 = B1 * qm * qp + B1 * B2 * (qp + qm) + B2;
  const double om = omega_value(m, qp, qm);
  return {D * E1 * E2 / (B1 * B2 * qm * qp),
          D * E1 * E1 * (B2 + qm) * (1.0 + B1 * qm) * (1.0 + (D - 1.0) * om) / (B1 * B2 * qm * qm * qp),
          D * std::pow(E1, 4) * (1.0 - (D - 1.0) * (D - 1.0) * om) / (B1 * B2 * (qp * qm) * (qp * qm))};
}

std::vector<CriticalPointClass> classify_phi1_critical_points(const SpinModel& m) {
  const TreePhaseData t = solve_tree_fixed_points(m);
  std::vector<CriticalPointClass> out;
  for (const CriticalPoint& c : find_phi1_critical_points(m)) {
    CriticalPointClass k;
    k.point = c;
    const FirstMomentPoint p = phi1(m, c.alpha, c.beta);
    const Eigen::MatrixXd H = phi1_hessian(m, c.alpha, c.beta, p.X);
    k.numeric_minors = lower_right_minors(-H);
    const bool all_pos = std::all_of(k.numeric_minors.begin(), k.numeric_minors.end(),
                                     [](double v) { return v > 0.0; });
    k.kind = all_pos ? "local_max" : "saddle";
    if (m.b1 * m.b2 > 0.0) {
      const bool sym = c.kind == "symmetric";
      // The (alpha, beta) = (p-, p+) point swaps the roles of Q+ and Q-.
      double qp = sym ? t.Q_star : t.Q_plus, qm = sym ? t.Q_star : t.Q_minus;
      if (c.kind == "minus_plus") std::swap(qp, qm);
      const auto cl = first_moment_minors_closed(m, qp, qm);
      k.closed_minors.assign(cl.begin(), cl.end());
      for (int i = 0; i < 3; ++i) {
        const double rel = std::abs(k.numeric_minors[i] - cl[i]) / std::abs(cl[i]);
        if (rel > 1e-6) {
          std::ostringstream os;
          os.precision(12);
          os << "phi1 Hessian minor " << i + 1 << " at " << c.kind << ": numeric "
             << k.numeric_minors[i] << " vs closed form " << cl[i];
          throw std::runtime_error(os.str());
        }
      }
    }
    out.push_back(std::move(k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// second moment Hessian and maximum search

Eigen::MatrixXd phi2_hessian(const SpinModel& m, double a, double b, double g, double dl,
                             const Eigen::Matrix4d& Y) {
  constexpr int nv = 11;
  using Vec = Eigen::Matrix<double, nv, 1>;
  Vec A[4][4];
  for (auto& row : A)
    for (auto& v : row) v.setZero();
  const double dL[4][2] = {{1, 0}, {-1, 0}, {-1, 0}, {1, 0}};
  const double dR[4][2] = {{0, 1}, {0, -1}, {0, -1}, {0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A[i][j][2 + 3 * i + j] = 1.0;
  for (int i = 0; i < 3; ++i) {
    A[i][3][0] = dL[i][0];
    A[i][3][1] = dL[i][1];
    for (int j = 0; j < 3; ++j) A[i][3] -= A[i][j];
  }
  for (int j = 0; j < 3; ++j) {
    A[3][j][0] = dR[j][0];
    A[3][j][1] = dR[j][1];
    for (int i = 0; i < 3; ++i) A[3][j] -= A[i][j];
  }
  A[3][3][0] = dL[3][0];
  A[3][3][1] = dL[3][1];
  for (int j = 0; j < 3; ++j) A[3][3] -= A[3][j];

  const double D = m.delta, d = m.d();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv, nv);
  H(0, 0) = d * (2.0 / (a - g) + 1.0 / g + 1.0 / (1.0 - 2.0 * a + g));
  H(1, 1) = d * (2.0 / (b - dl) + 1.0 / dl + 1.0 / (1.0 - 2.0 * b + dl));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) H -= D / Y(i, j) * A[i][j] * A[i][j].transpose();
  return H;
}

std::array<double, 2> second_moment_minors_closed(const SpinModel& m, const TreePhaseData& t) {
  const double B1 = m.b1, B2 = m.b2, D = m.delta, qp = t.Q_plus, qm = t.Q_minus, om = t.omega;
  const double E1 = B1 * qm * qp + qm + qp + B2;
  const double E2 = B1 * qm * qp + B1 * B2 * (qp + qm) + B2;
  // Evaluated in logs: the powers overflow quickly.
  const double common = 9 * std::log(D) + 2 * std::log(E2) - 8 * std::log(B1 * B2) - 14 * std::log(qm);
  const double p10 = std::exp(common + 22 * std::log(E1) + 2 * std::log((B2 + qm) * (1 + B1 * qm)) -
                              12 * std::log(qp)) *
                     (1.0 + (D - 1.0) * om * om);
  const double p11 =
      std::exp(common + 26 * std::log(E1) - 14 * std::log(qp)) * (1.0 - (D - 1.0) * (D - 1.0) * om * om);
  return {p10, p11};
}

namespace {

std::string phi2_hypothesis(const SpinModel& m) {
  const double sd = std::sqrt(static_cast<double>(m.d()));
  if (std::sqrt(m.b1 * m.b2) >= (sd - 1.0) / (sd + 1.0)) return "soft_interaction";
  if (m.ising_no_field() && m.delta == 3) return "ising_delta3";
  if (m.hard_core() && m.delta >= 3 && m.delta <= 5) return "hardcore_delta_3_to_5";
  return "none";
}

struct Phi2Eval {
  double value = kNegInf;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  bool ok = false;
};

Phi2Eval eval_phi2(const SpinModel& m, double a, double b, double g, double dl, double tol) {
  Phi2Eval e;
  ScalingOptions opt;
  opt.tol = tol;
  opt.relative = true;
  const SecondMomentPoint p = phi2(m, a, b, g, dl, opt);
  if (!p.feasible) return e;
  e.value = p.phi2;
  e.grad = phi2_gradient(m, p);
  e.ok = std::isfinite(e.value) && e.grad.allFinite();
  return e;
}

}  // namespace

Phi2MaxReport verify_phi2_maximum(const SpinModel& m, const Phi2SearchOptions& opt) {
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("verify_phi2_maximum: model is not in non-uniqueness " + describe(m));
  Phi2MaxReport r;
  r.hypothesis = phi2_hypothesis(m);
  const double a = t.p_plus, b = t.p_minus;
  r.alpha = a;
  r.beta = b;
  r.target_gamma = a * a;
  r.target_delta = b * b;
  const auto [gl, gh] = overlap_range(a);
  const auto [dlo, dhi] = overlap_range(b);

  // Coarse grid over cell centres.
  struct Cell {
    double v, g, d;
  };
  std::vector<Cell> cells;
  const int G = opt.grid;
  ScalingOptions gopt;
  gopt.tol = opt.grid_tol;
  gopt.relative = true;
  for (int i = 0; i < G; ++i) {
    const double g = gl + (i + 0.5) * (gh - gl) / G;
    Eigen::Vector4d warm = Eigen::Vector4d::Ones();
    bool have_warm = false;
    for (int j = 0; j < G; ++j) {
      const double dl = dlo + (j + 0.5) * (dhi - dlo) / G;
      const SecondMomentPoint p = phi2(m, a, b, g, dl, gopt, have_warm ? &warm : nullptr);
      ++r.grid_evaluations;
      if (!p.feasible) continue;
      warm = p.C;
      have_warm = warm.minCoeff() > 0.0;
      cells.push_back({p.phi2, g, dl});
    }
  }
  if (cells.empty()) throw std::runtime_error("verify_phi2_maximum: no feasible grid cell");
  std::sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) { return x.v > y.v; });

  // Newton polish with a finite-difference Hessian of the analytic gradient.
  auto polish = [&](double g, double dl) {
    const double tol = 1e-14;
    Phi2Eval cur = eval_phi2(m, a, b, g, dl, tol);
    for (int it = 0; it < 200 && cur.ok; ++it) {
      const double hg = 1e-5 * std::min(g - gl, gh - g), hd = 1e-5 * std::min(dl - dlo, dhi - dl);
      Eigen::Matrix2d H;
      const Phi2Eval gp = eval_phi2(m, a, b, g + hg, dl, tol), gm = eval_phi2(m, a, b, g - hg, dl, tol);
      const Phi2Eval dp = eval_phi2(m, a, b, g, dl + hd, tol), dm = eval_phi2(m, a, b, g, dl - hd, tol);
      if (!(gp.ok && gm.ok && dp.ok && dm.ok)) break;
      H.col(0) = (gp.grad - gm.grad) / (2 * hg);
      H.col(1) = (dp.grad - dm.grad) / (2 * hd);
      H = 0.5 * (H + H.transpose()).eval();
      Eigen::Vector2d step;
      if (H(0, 0) < 0 && H.determinant() > 0) {
        step = -H.ldlt().solve(cur.grad);
      } else {
        // Not locally concave: scaled ascent.
        step = Eigen::Vector2d(cur.grad[0] * (g - gl) * (gh - g), cur.grad[1] * (dl - dlo) * (dhi - dl)) * 1e-2;
      }
      // Keep the iterate strictly inside the region.
      double s = 1.0;
      auto inside = [&](double x, double lo, double hi) { return x > lo && x < hi; };
      while (s > 1e-20 && !(inside(g + s * step[0], gl, gh) && inside(dl + s * step[1], dlo, dhi))) s *= 0.5;
      Phi2Eval next;
      double ng = g, nd = dl;
      for (; s > 1e-20; s *= 0.5) {
        ng = g + s * step[0];
        nd = dl + s * step[1];
        next = eval_phi2(m, a, b, ng, nd, tol);
        if (next.ok && (next.value >= cur.value - 1e-15 * std::abs(cur.value) ||
                        next.grad.norm() < cur.grad.norm()))
          break;
      }
      if (!next.ok || s <= 1e-20) break;
      const double moved = std::max(std::abs(ng - g), std::abs(nd - dl));
      g = ng;
      dl = nd;
      cur = next;
      if (moved < 1e-15 * std::max(1.0, std::abs(g)) || moved == 0.0) break;
    }
    return std::make_tuple(g, dl, cur.value);
  };

  const Phi2Eval at_target = eval_phi2(m, a, b, r.target_gamma, r.target_delta, 1e-14);
  double best_v = kNegInf;
  const int starts = std::min<int>(opt.polish_starts, static_cast<int>(cells.size()));
  for (int s = 0; s < starts; ++s) {
    const auto [g, dl, v] = polish(cells[s].g, cells[s].d);
    const double dist = std::max(std::abs(g - r.target_gamma), std::abs(dl - r.target_delta));
    if (v > best_v) {
      best_v = v;
      r.found_gamma = g;
      r.found_delta = dl;
    }
    if (dist > 1e-5 && v > at_target.value + 1e-12 * std::max(1.0, std::abs(at_target.value))) {
      if (!r.competing || v > r.witness_phi2) {
        r.competing = true;
        r.witness_gamma = g;
        r.witness_delta = dl;
        r.witness_phi2 = v;
      }
    }
  }
  // The grid itself can expose a competitor the polish did not revisit.
  for (const Cell& c : cells) {
    if (c.v > at_target.value + 1e-12 * std::max(1.0, std::abs(at_target.value)) &&
        std::max(std::abs(c.g - r.target_gamma), std::abs(c.d - r.target_delta)) > 1e-5) {
      if (!r.competing || c.v > r.witness_phi2) {
        r.competing = true;
        r.witness_gamma = c.g;
        r.witness_delta = c.d;
        r.witness_phi2 = c.v;
      }
    }
  }
  r.position_error = std::max(std::abs(r.found_gamma - r.target_gamma), std::abs(r.found_delta - r.target_delta));
  r.phi2_max = std::max(best_v, at_target.value);
  ScalingOptions fine;
  fine.tol = 1e-14;
  fine.relative = true;
  r.two_phi1 = 2.0 * phi1(m, a, b, fine).phi1;
  r.value_gap = at_target.value - r.two_phi1;

  bool minors_ok = true;
  if (m.b1 * m.b2 > 0.0) {
    r.has_minors = true;
    const SecondMomentPoint p = phi2(m, a, b, r.target_gamma, r.target_delta, fine);
    const Eigen::MatrixXd H = phi2_hessian(m, a, b, r.target_gamma, r.target_delta, p.Y);
    const Eigen::MatrixXd N = -H;
    r.numeric_minors = {N.bottomRightCorner(10, 10).determinant(), N.determinant()};
    r.closed_minors = second_moment_minors_closed(m, t);
    r.minors_rel_err = 0;
    for (int i = 0; i < 2; ++i)
      r.minors_rel_err = std::max(r.minors_rel_err,
                                  std::abs(r.numeric_minors[i] - r.closed_minors[i]) / std::abs(r.closed_minors[i]));
    minors_ok = r.minors_rel_err < 1e-6 && r.closed_minors[0] > 0 && r.closed_minors[1] > 0;
  }
  r.pass = !r.competing && r.position_error <= opt.position_tol && minors_ok &&
           std::abs(r.value_gap) <= 1e-10;
  return r;
}

// ---------------------------------------------------------------------------
// asymptotic constants

double ratio_limit_formula(double omega, int delta) {
  const double d = delta - 1.0;
  const double inner = 1.0 - d * d * omega * omega;
  if (!(inner > 0.0) || !(omega * omega < 1.0))
    throw std::invalid_argument("ratio_limit_formula: (Delta-1) omega must be < 1");
  return std::pow(1.0 - omega * omega, -d / 2.0) / std::sqrt(inner);
}

double moment_ratio_limit(const SpinModel& m) {
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("moment_ratio_limit: model is not in non-uniqueness " + describe(m));
  if (m.d() * m.d() * t.omega >= 1.0)
    throw std::runtime_error("moment_ratio_limit: (Delta-1)^2 omega >= 1, upstream fixed points are wrong");
  return ratio_limit_formula(t.omega, m.delta);
}

AsymptoticConstants asymptotic_prefactors(const SpinModel& m) {
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("asymptotic_prefactors: model is not in non-uniqueness " + describe(m));
  const double B1 = m.b1, B2 = m.b2, D = m.delta, qp = t.Q_plus, qm = t.Q_minus, om = t.omega;
  AsymptoticConstants c;
  c.E1 = B1 * qm * qp + qm + qp + B2;
  c.E2 = B1 * qm * qp + B1 * B2 * (qp + qm) + B2;
  c.E3 = (1 - B1 * B2) * (1 - B1 * B2) * qm * qp +
         (1 + B1 * (qp + qm) + B1 * B1 * qm * qp) * (B2 * B2 + B2 * (qm + qp) + qm * qp);
  const double a = t.p_plus, b = t.p_minus;
  const double ab = a * b * (1 - a) * (1 - b);
  const double pi = std::numbers::pi;
  c.first_prefactor = 1.0 / (2 * pi) * std::pow(ab, (D - 1) / 2) *
                      std::pow(qp * qm * c.E2 / std::pow(c.E1, 3), -D / 2);
  const double qq = qp * qm;
  c.second_prefactor = 1.0 / (4 * pi * pi) * std::pow(ab, 2 * (D - 1)) *
                       std::pow(std::pow(qq, 4) * std::pow(c.E2, 3) * c.E3 / std::pow(c.E1, 13), -D / 2) *
                       std::sqrt(qq * qq * c.E2 * c.E3 / std::pow(c.E1, 7)) /
                       std::sqrt(1 - (D - 1) * (D - 1) * om * om);
  c.ratio_limit = ratio_limit_formula(om, m.delta);
  const double den = (B2 + qm) * (B2 + qp) * (1 + B1 * qm) * (1 + B1 * qp);
  c.identity_lhs = c.E1 * c.E2 * c.E3 / (den * den);
  c.identity_rhs = 1 - om * om;
  c.quad_form_det = std::pow(c.E1, 7) / (qq * qq * c.E2 * c.E3) * (1 - (D - 1) * (D - 1) * om * om);
  return c;
}

double quad_form_det_numeric(const SpinModel& m) {
  if (!(m.b1 * m.b2 > 0.0)) throw std::invalid_argument("quad_form_det_numeric: needs b1*b2 > 0");
  const TreePhaseData t = solve_tree_fixed_points(m);
  const double a = t.p_plus, b = t.p_minus;
  ScalingOptions fine;
  fine.tol = 1e-14;
  fine.relative = true;
  const SecondMomentPoint p = phi2(m, a, b, a * a, b * b, fine);
  const Eigen::MatrixXd Hn = phi2_hessian(m, a, b, a * a, b * b, p.Y) / m.delta;
  const Eigen::MatrixXd Ayy = -Hn.bottomRightCorner(9, 9);
  const Eigen::MatrixXd Hc = Hn.bottomLeftCorner(9, 2);
  const Eigen::Matrix2d S = (m.delta / 2.0) * (Hc.transpose() * Ayy.ldlt().solve(Hc) + Hn.topLeftCorner(2, 2));
  return 4.0 * S.determinant();
}

// ---------------------------------------------------------------------------
// gadget ratios

void EtaCounts::validate() const {
  if (minus1 < 0 || plus1 < 0 || minus2 < 0 || plus2 < 0)
    throw std::invalid_argument("eta counts must be nonnegative");
  if (minus1 + plus1 != minus2 + plus2)
    throw std::invalid_argument("eta counts: both sides must have m' boundary vertices");
}

double gadget_x_star(const SpinModel& m, double a, double b) {
  const double k = m.b1 * m.b2;
  const double lo = std::max(0.0, a + b - 1.0), hi = std::min(a, b);
  // (k-1) x^2 - (k(a+b) + 1-a-b) x + k a b = 0
  const double A = k - 1.0, B = -(k * (a + b) + 1.0 - a - b), C = k * a * b;
  if (std::abs(A) < 1e-14) return std::clamp(-C / B, lo, hi);
  const double disc = std::max(0.0, B * B - 4 * A * C);
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  double best = lo, err = 1e300;
  for (double x : {q / A, q != 0.0 ? C / q : 0.0}) {
    const double dist = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
    if (dist < err) {
      err = dist;
      best = std::clamp(x, lo, hi);
    }
  }
  return best;
}

double gadget_c_star(const SpinModel& m, const TreePhaseData& t, int mp) {
  const double E1 = m.b2 + t.Q_plus + t.Q_minus + m.b1 * t.Q_plus * t.Q_minus;
  return std::pow((m.b2 + t.Q_plus) * (m.b2 + t.Q_minus) / E1, m.d() * mp);
}

GadgetFirstRatio gadget_first_moment_ratio(const SpinModel& m, double a, double b, const EtaCounts& eta) {
  m.validate(1);
  eta.validate();
  if (!(a > 0 && a < 1 && b > 0 && b < 1))
    throw std::invalid_argument("gadget_first_moment_ratio: alpha and beta must lie in (0, 1)");
  GadgetFirstRatio r;
  const double x = gadget_x_star(m, a, b);
  r.x_star = x;
  const double e1m = eta.minus1, e1p = eta.plus1, e2m = eta.minus2, e2p = eta.plus2;
  double inner = pw_log(e1m, safe_log(a)) + pw_log(e1p, safe_log(1 - a)) + pw_log(e2m, safe_log(b)) +
                 pw_log(e2p, safe_log(1 - b)) - pw_log(e1m, safe_log(a - x)) -
                 pw_log(e1p - e2m, safe_log(1 - a - b + x)) - pw_log(e2m, safe_log(b - x)) +
                 (e1p - e2m) * std::log(m.b2);
  r.ratio = std::exp(m.d() * inner + (e1m + e2m) * std::log(m.lambda));

  if (m.delta >= 3 && m.b1 * m.b2 <= 1.0) {
    const TreePhaseData t = solve_tree_fixed_points(m);
    if (t.regime == Regime::NonUniqueness && std::abs(a - t.p_plus) < 1e-12 && std::abs(b - t.p_minus) < 1e-12) {
      r.has_product_form = true;
      const int mp = eta.m_prime();
      r.product_form = gadget_c_star(m, t, mp) * std::pow(1 - t.q_plus, -mp) * std::pow(1 - t.q_minus, -mp) *
                       std::pow(t.q_plus, e1m) * std::pow(1 - t.q_plus, e1p) * std::pow(t.q_minus, e2m) *
                       std::pow(1 - t.q_minus, e2p);
      if (std::abs(r.product_form - r.ratio) > 1e-10 * std::abs(r.ratio)) {
        std::ostringstream os;
        os.precision(17);
        os << "gadget ratio forms disagree: " << r.ratio << " vs product form " << r.product_form;
        throw std::runtime_error(os.str());
      }
    }
  }
  return r;
}

double gadget_second_moment_ratio(const SpinModel& m, const EtaCounts& eta) {
  eta.validate();
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("gadget_second_moment_ratio: model is not in non-uniqueness");
  const double f1 = m.lambda * std::pow((1 + m.b1 * t.Q_minus) / (m.b2 + t.Q_minus), m.d());
  const double f2 = m.lambda * std::pow((1 + m.b1 * t.Q_plus) / (m.b2 + t.Q_plus), m.d());
  if (std::abs(f1 - t.Q_plus) > 1e-9 * t.Q_plus || std::abs(f2 - t.Q_minus) > 1e-9 * t.Q_minus) {
    std::ostringstream os;
    os.precision(17);
    os << "gadget second moment: fixed-point identity fails (" << f1 << " vs " << t.Q_plus << ", " << f2
       << " vs " << t.Q_minus << ")";
    throw std::runtime_error(os.str());
  }
  const double cs = gadget_c_star(m, t, eta.m_prime());
  return cs * cs * std::pow(f1, 2.0 * eta.minus1) * std::pow(f2, 2.0 * eta.minus2);
}

double gadget_first_moment_ratio_exact(const SpinModel& m, int n, int a, int b, const EtaCounts& eta) {
  m.validate(1);
  eta.validate();
  const int mp = eta.m_prime();
  const double lr = (eta.minus1 + eta.minus2) * std::log(m.lambda) +
                    m.d() * (matching_weight_log(m, n + mp, a + eta.minus1, b + eta.minus2) -
                             matching_weight_log(m, n, a, b));
  return std::exp(lr);
}

MultinomialRatio multinomial_ratio_approx(const std::vector<long>& b, const std::vector<long>& y) {
  if (b.size() != y.size()) throw std::invalid_argument("multinomial_ratio_approx: size mismatch");
  long A = 0, X = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] < 0 || y[i] < 0) throw std::invalid_argument("multinomial_ratio_approx: negative entry");
    if (y[i] * y[i] > b[i]) throw std::invalid_argument("multinomial_ratio_approx: needs y_i^2 <= b_i");
    A += b[i];
    X += y[i];
  }
  MultinomialRatio r;
  double la = log_factorial(A + X) - log_factorial(A), lp = X > 0 ? X * std::log(static_cast<double>(A)) : 0.0;
  double bound = 0, rig = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (y[i] == 0) continue;
    la -= log_factorial(b[i] + y[i]) - log_factorial(b[i]);
    lp -= y[i] * std::log(static_cast<double>(b[i]));
    bound += static_cast<double>(y[i]) * y[i] / b[i];
    rig += static_cast<double>(y[i]) * (y[i] + 1) / (2.0 * b[i]);
  }
  r.exact = std::exp(la);
  r.approx = std::exp(lp);
  r.rel_error = std::expm1(la - lp);
  r.bound = bound;
  r.rigorous_bound = std::expm1(rig);
  return r;
}

}  // namespace phasecrit
