#include "phasecrit/tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phasecrit {

namespace {

void validate_tree_model(const SpinModel& m) {
  m.validate(3);
  // The fixed-point structure below assumes f is non-increasing.
  if (m.b1 * m.b2 > 1.0)
    throw std::invalid_argument("tree recursion: ferromagnetic models (b1*b2 > 1) are not supported " +
                                describe(m));
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Uniqueness: return "Uniqueness";
    case Regime::NonUniqueness: return "NonUniqueness";
    case Regime::Boundary: return "Boundary";
  }
  return "?";
}

double tree_map(const SpinModel& m, double x) {
  return m.lambda * std::pow((m.b1 * x + 1.0) / (x + m.b2), m.d());
}

double tree_map_derivative(const SpinModel& m, double x) {
  const double r = (m.b1 * x + 1.0) / (x + m.b2);
  return m.lambda * m.d() * std::pow(r, m.d() - 1) * (m.b1 * m.b2 - 1.0) /
         ((x + m.b2) * (x + m.b2));
}

double solve_symmetric_fixed_point(const SpinModel& m) {
  validate_tree_model(m);
  // f is non-increasing, so f(x) - x changes sign exactly once on [0, f(0)].
  double lo = 0.0, hi = tree_map(m, 0.0);
  for (int it = 0; it < 4000 && hi - lo > 1e-17 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (tree_map(m, mid) > mid)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double omega_value(const SpinModel& m, double qp, double qm) {
  const double k = 1.0 - m.b1 * m.b2;
  return k * k * qp * qm /
         ((m.b2 + qp) * (m.b2 + qm) * (1.0 + m.b1 * qm) * (1.0 + m.b1 * qp));
}

double uniqueness_criterion(const SpinModel& m) {
  const double qs = solve_symmetric_fixed_point(m);
  return m.d() * m.d() * omega_value(m, qs, qs);
}

double fixed_point_residual(const SpinModel& m, double x, double y) {
  return std::max(rel_gap(x, tree_map(m, y)), rel_gap(y, tree_map(m, x)));
}

Marginals tree_marginals(const SpinModel& m, double qp, double qm, double qs) {
  Marginals r{};
  r.q_plus = qp / (1.0 + qp);
  r.q_minus = qm / (1.0 + qm);
  r.q_star = qs / (1.0 + qs);
  const double e1 = m.b2 + qp + qm + m.b1 * qp * qm;
  r.p_plus = qp * (1.0 + m.b1 * qm) / e1;
  r.p_minus = qm * (1.0 + m.b1 * qp) / e1;
  r.p_star = qs * (1.0 + m.b1 * qs) / (m.b2 + 2.0 * qs + m.b1 * qs * qs);
  return r;
}

namespace {

// Smallest fixed point of the two-step map g = f o f, approached monotonically from 0.
double lower_two_step_fixed_point(const SpinModel& m, double qs, int max_it) {
  auto g = [&](double x) { return tree_map(m, tree_map(m, x)); };
  double x = 0.0;
  for (int it = 0; it < max_it; ++it) {
    const double gx = g(x);
    if (std::abs(gx - x) <= 1e-16 * gx) return gx;
    x = gx;
    // Linear convergence can be slow near the boundary; try Newton every so often.
    if (it % 64 == 63) {
      double y = x;
      bool ok = true;
      for (int k = 0; k < 60; ++k) {
        const double fy = tree_map(m, y);
        const double slope = tree_map_derivative(m, fy) * tree_map_derivative(m, y) - 1.0;
        const double phi = g(y) - y;
        if (!(slope < 0.0)) {
          ok = false;
          break;
        }
        const double step = phi / slope;
        y -= step;
        if (!(y > 0.0) || y >= qs) {
          ok = false;
          break;
        }
        if (std::abs(step) <= 1e-16 * y) break;
      }
      if (ok && rel_gap(g(y), y) <= 1e-14 && y < qs * (1.0 - 1e-12)) return y;
    }
  }
  std::ostringstream os;
  os << "two-step fixed-point iteration did not converge for " << describe(m)
     << "; last iterate " << x << ", residual " << rel_gap(g(x), x);
  throw std::runtime_error(os.str());
}

}  // namespace

TreePhaseData solve_tree_fixed_points(const SpinModel& m, const TreeOptions& opt) {
  validate_tree_model(m);
  TreePhaseData t;
  const double qs = solve_symmetric_fixed_point(m);
  t.Q_star = qs;
  t.omega_star = omega_value(m, qs, qs);
  const double crit = m.d() * m.d() * t.omega_star;

  if (std::abs(crit - 1.0) < opt.boundary_tol) {
    t.regime = Regime::Boundary;
  } else if (crit < 1.0) {
    t.regime = Regime::Uniqueness;
  } else {
    t.regime = Regime::NonUniqueness;
  }

  if (t.regime == Regime::NonUniqueness) {
    t.Q_minus = lower_two_step_fixed_point(m, qs, opt.max_iterations);
    t.Q_plus = tree_map(m, t.Q_minus);
    if (!(t.Q_minus < qs && qs < t.Q_plus)) {
      std::ostringstream os;
      os << "fixed points out of order for " << describe(m) << ": Q-=" << t.Q_minus
         << " Q*=" << qs << " Q+=" << t.Q_plus;
      throw std::runtime_error(os.str());
    }
  } else {
    // At the boundary the two candidates coincide with Q* to within the tolerance.
    t.Q_minus = t.Q_plus = qs;
  }

  t.residual = std::max(fixed_point_residual(m, t.Q_plus, t.Q_minus),
                        fixed_point_residual(m, qs, qs));
  if (t.regime != Regime::Boundary && t.residual > 1e-12) {
    std::ostringstream os;
    os << "fixed-point residual " << t.residual << " exceeds 1e-12 for " << describe(m);
    throw std::runtime_error(os.str());
  }

  const Marginals mg = tree_marginals(m, t.Q_plus, t.Q_minus, qs);
  t.q_plus = mg.q_plus;
  t.q_minus = mg.q_minus;
  t.q_star = mg.q_star;
  t.p_plus = mg.p_plus;
  t.p_minus = mg.p_minus;
  t.p_star = mg.p_star;
  t.omega = omega_value(m, t.Q_plus, t.Q_minus);
  return t;
}

UniquenessReport classify_uniqueness(const SpinModel& m, const TreeOptions& opt) {
  validate_tree_model(m);
  UniquenessReport r;
  r.criterion = uniqueness_criterion(m);
  if (std::abs(r.criterion - 1.0) < opt.boundary_tol)
    r.regime = Regime::Boundary;
  else
    r.regime = r.criterion < 1.0 ? Regime::Uniqueness : Regime::NonUniqueness;
  if (m.hard_core()) {
    r.has_closed_form = true;
    r.threshold_name = "lambda_c";
    r.threshold = hardcore_lambda_c(m.delta);
    r.signed_distance = m.lambda - r.threshold;
  } else if (m.ising_no_field()) {
    r.has_closed_form = true;
    r.threshold_name = "B_c";
    r.threshold = ising_b_c(m.delta);
    r.signed_distance = m.b1 - r.threshold;
  }
  return r;
}

NonuniquenessReport check_nonuniqueness_inequality(const SpinModel& m) {
  const TreePhaseData t = solve_tree_fixed_points(m);
  NonuniquenessReport r;
  const double dd = m.d() * m.d();
  r.lhs = dd * t.omega;
  r.rhs = dd * t.omega_star;
  const double x = t.Q_plus, y = t.Q_minus;
  r.strong_lhs = m.b1 * x * y + m.b1 * m.b2 * (x + y) + m.b2;
  r.strong_rhs = (m.d() - 1) * (1.0 - m.b1 * m.b2) * std::sqrt(x * y);
  if (t.regime == Regime::Boundary) {
    r.boundary = true;
    r.pass = std::abs(r.rhs - 1.0) < 1e-8;
    return r;
  }
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("check_nonuniqueness_inequality: model is in uniqueness " +
                                describe(m));
  const double tol = 1e-9;
  const bool first = r.lhs < 1.0 * (1.0 - tol) && r.rhs > 1.0 * (1.0 + tol);
  // For d = 2 only the k = 2 term survives and the bound is attained exactly; it is strict
  // only for d >= 3.
  const bool strong = m.d() == 2 ? std::abs(r.strong_lhs - r.strong_rhs) <= tol * std::max(1.0, r.strong_lhs)
                                 : r.strong_lhs > r.strong_rhs * (1.0 + tol);
  r.pass = first && strong;
  if (!r.pass) {
    std::ostringstream os;
    os.precision(17);
    os << "non-uniqueness inequality violated for " << describe(m) << ": (d)^2 omega=" << r.lhs
       << " (d)^2 omega*=" << r.rhs << " strong lhs=" << r.strong_lhs
       << " strong rhs=" << r.strong_rhs;
    throw std::runtime_error(os.str());
  }
  return r;
}

FerroCheck ferro_monotonicity_check(double bp, int d, int points) {
  if (d < 2) throw std::invalid_argument("ferro_monotonicity_check: d must be >= 2");
  if (bp > (d + 1.0) / (d - 1.0) * (1.0 + 1e-15))
    throw std::invalid_argument("ferro_monotonicity_check: b' exceeds (d+1)/(d-1)");
  FerroCheck r;
  for (int side = 0; side < 2; ++side) {
    for (int i = 1; i <= points; ++i) {
      // z in (1, 1e6] on the upper side, [1e-6, 1) on the lower side
      const double e = 6.0 * i / points;
      const double z = side == 0 ? std::pow(10.0, e) : std::pow(10.0, -e);
      const double lhs = std::pow(z, 1.0 / d);
      const double rhs = (bp * z + 1.0) / (z + bp);
      const bool ok = side == 0 ? lhs > rhs : lhs < rhs;
      ++r.points;
      if (!ok && r.pass) {
        r.pass = false;
        r.witness_z = z;
      }
    }
  }
  return r;
}

}  // namespace phasecrit
