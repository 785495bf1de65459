#include "phasecrit/bias.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "phasecrit/model.hpp"
#include "phasecrit/moments.hpp"
#include "phasecrit/scaling.hpp"
#include "phasecrit/tree.hpp"

namespace phasecrit {

namespace {

// Relative slack of (B s1 + B^2 + 1 + B s4)^2 > (1-B^2)^2 (s1 s4 - 1)/(sqrt(s1 s4) - 1).
double margin(double B, double s1, double s4) {
  const double p = s1 * s4;
  const double lhs = std::pow(B * s1 + B * B + 1 + B * s4, 2);
  const double rhs = std::abs(p - 1) < 1e-12 ? 2 * std::pow(1 - B * B, 2)
                                             : std::pow(1 - B * B, 2) * (p - 1) / (std::sqrt(p) - 1);
  return (lhs - rhs) / lhs;
}

}  // namespace

IsingBiasReport ising_bias_check(double b, int grid) {
  if (!(b > 0) || b >= 3 - 2 * std::sqrt(2.0)) throw std::invalid_argument("ising_bias_check: B must lie in (0, 3 - 2 sqrt 2)");
  if (grid < 1) throw std::invalid_argument("ising_bias_check: grid must be >= 1");
  const SpinModel m = SpinModel::ising(3, b);
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (t.regime != Regime::NonUniqueness) throw std::runtime_error("ising_bias_check: expected non-uniqueness");
  IsingBiasReport r;
  r.b = b;
  r.alpha = t.p_plus;
  r.beta = t.p_minus;
  r.odds = r.alpha / (1 - r.alpha);
  r.odds_mirror = (1 - r.beta) / r.beta;
  r.odds_bound = 4.0 / 9.0 / (b * b * b);
  r.odds_ok = r.odds > r.odds_bound && r.odds_mirror > r.odds_bound;
  r.weak_bound = 1.0 / 3.0 / (b * b);
  r.strong_bound = 4.0 / 9.0 / (b * b);

  const Eigen::Matrix4d M = pair_interaction_matrix(m);
  const double inf = std::numeric_limits<double>::infinity();
  r.min_r1 = r.min_c4 = r.min_r1_above = r.min_c4_above = r.min_margin = inf;
  const auto [glo, ghi] = overlap_range(r.alpha);
  const auto [dlo, dhi] = overlap_range(r.beta);
  ScalingOptions opt;
  opt.relative = true;
  opt.tol = 1e-12;
  for (int i = 1; i <= grid; ++i)
    for (int j = 1; j <= grid; ++j) {
      const double g = glo + (ghi - glo) * i / (grid + 1.0);
      const double dl = dlo + (dhi - dlo) * j / (grid + 1.0);
      MarginalSpec marg;
      marg.rows = Eigen::Vector4d(g, r.alpha - g, r.alpha - g, 1 - 2 * r.alpha + g);
      marg.cols = Eigen::Vector4d(dl, r.beta - dl, r.beta - dl, 1 - 2 * r.beta + dl);
      const ScalingSolution s = maximize_entropy(M, marg, opt);
      const double r1 = s.R[0] / s.R[1], r4 = s.R[3] / s.R[1];
      const double c1 = s.C[0] / s.C[1], c4 = s.C[3] / s.C[1];
      ++r.points;
      r.min_r1 = std::min(r.min_r1, r1);
      r.min_c4 = std::min(r.min_c4, c4);
      if (r1 * r4 > 1 && c1 * c4 > 1) {
        ++r.points_above;
        r.min_r1_above = std::min(r.min_r1_above, r1);
        r.min_c4_above = std::min(r.min_c4_above, c4);
      }
      r.min_margin = std::min({r.min_margin, margin(b, r1, r4), margin(b, c4, c1)});
    }
  r.weak_ok = r.min_r1 > r.weak_bound && r.min_c4 > r.weak_bound;
  r.strong_ok = r.points_above == 0 || (r.min_r1_above > r.strong_bound && r.min_c4_above > r.strong_bound);
  if (r.points_above == 0) r.min_r1_above = r.min_c4_above = 0;
  r.margin_ok = r.min_margin > 0;
  r.pass = r.odds_ok && r.weak_ok && r.strong_ok && r.margin_ok;
  return r;
}

std::vector<IsingBiasReport> ising_bias_sweep(double b_min, double b_max, int count, int grid) {
  if (count < 1 || !(b_min <= b_max)) throw std::invalid_argument("ising_bias_sweep: bad range");
  std::vector<IsingBiasReport> out;
  for (int k = 0; k < count; ++k) {
    const double b = count == 1 ? b_min : b_min + (b_max - b_min) * k / (count - 1.0);
    out.push_back(ising_bias_check(b, grid));
  }
  return out;
}

}  // namespace phasecrit
