#include "phasecrit/smallgraph.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "phasecrit/graphs.hpp"
#include "phasecrit/moments.hpp"
#include "phasecrit/numeric.hpp"
#include "phasecrit/oracle.hpp"
#include "phasecrit/tree.hpp"

namespace phasecrit {

ConditioningData conditioning_data(const SpinModel& m, int max_len) {
  if (max_len < 2) throw std::invalid_argument("conditioning_data: max_len must be >= 2");
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("conditioning_data: model is not in non-uniqueness " + describe(m));
  const double D = m.d(), om = t.omega;
  if (D * om >= 1.0) throw std::invalid_argument("conditioning_data: (Delta-1) omega >= 1");

  ConditioningData c;
  c.max_len = max_len;
  c.omega = om;
  // Base of delta_i, written from the walk-matrix eigenvalue rather than from omega.
  const double B1 = m.b1, B2 = m.b2, qp = t.Q_plus, qm = t.Q_minus;
  const double base = (1 - B1 * B2) * std::sqrt(qp * qm) /
                      std::sqrt((1 + B1 * qp) * (1 + B1 * qm) * (B2 + qp) * (B2 + qm));
  double s = 0.0;
  for (int i = 2; i <= max_len; i += 2) {
    const double li = expected_cycle_rate(m.delta, i);
    const double di = std::pow(base, i);
    const double dw = std::pow(om, i / 2.0);
    c.lengths.push_back(i);
    c.lambdas.push_back(li);
    c.deltas.push_back(di);
    c.deltas_from_omega.push_back(dw);
    c.max_delta_gap = std::max(c.max_delta_gap, std::abs(di - dw));
    s += li * di * di;
    c.partial_sums.push_back(std::exp(s));
  }
  c.sum_closed_form = ratio_limit_formula(om, m.delta);
  // Tail of sum over even i > K of ((D^i + D) / i) omega^i, bounded by geometric series.
  const int K = c.lengths.back() + 2;
  const double x = D * om;
  const double tail = (std::pow(x, K) / (1 - x * x) + D * std::pow(om, K) / (1 - om * om)) / K;
  c.tail_bound = c.partial_sums.back() * std::expm1(tail);
  return c;
}

double exact_conditioned_double_edge_ratio(const SpinModel& m, int n, int a, int b) {
  m.validate(1);
  if (m.delta < 2) throw std::invalid_argument("double edge ratio: needs delta >= 2");
  if (n < 1 || a < 0 || b < 0 || a > n || b > n) throw std::invalid_argument("double edge ratio: bad counts");
  const double l1 = m.b1 > 0 ? std::log(m.b1) : kNegInf, l2 = std::log(m.b2);
  // E[W(pi) 1{pi(i) = j}] = M(s,t) S(a - [s-], b - [t-]; n - 1) / n; the 1/n^2 cancels the i, j sum.
  LogSum sum;
  for (int s = 0; s < 2; ++s)      // s = 1: left endpoint at -1
    for (int tt = 0; tt < 2; ++tt) {  // tt = 1: right endpoint at -1
      if (a - s < 0 || b - tt < 0 || a - s > n - 1 || b - tt > n - 1) continue;
      const double lm = s && tt ? l1 : (!s && !tt ? l2 : 0.0);
      if (lm == kNegInf) continue;
      const double w = matching_weight_log(m, n - 1, a - s, b - tt);
      sum.add(log_choose(n - 1, a - s) + log_choose(n - 1, b - tt) + 2 * (lm + w));
    }
  const double num = std::log(m.delta * (m.delta - 1) / 2.0) + (m.delta - 2) * matching_weight_log(m, n, a, b) +
                     sum.value();
  const double den = log_choose(n, a) + log_choose(n, b) + m.delta * matching_weight_log(m, n, a, b);
  return std::exp(num - den);
}

ConditionedMoment conditioned_cycle_moment_mc(const SpinModel& m, int n, int i, long trials, std::uint64_t seed,
                                              int a, int b) {
  m.validate(1);
  if (n < 1 || n > 12) throw std::invalid_argument("conditioned_cycle_moment_mc: n must be in [1, 12]");
  if (i < 2 || i > 12) throw std::invalid_argument("conditioned_cycle_moment_mc: cycle length must be in [2, 12]");
  if (trials < 2) throw std::invalid_argument("conditioned_cycle_moment_mc: trials must be >= 2");
  ConditionedMoment r;
  r.n = n;
  r.i = i;
  r.trials = trials;
  const TreePhaseData t = solve_tree_fixed_points(m);
  if (a < 0 || b < 0) {
    const bool nu = t.regime == Regime::NonUniqueness;
    const LatticePoint lp = round_to_lattice(n, nu ? t.p_plus : t.p_star, nu ? t.p_minus : t.p_star);
    a = lp.a;
    b = lp.b;
  }
  if (a > n || b > n) throw std::invalid_argument("conditioned_cycle_moment_mc: counts exceed n");
  r.a = a;
  r.b = b;
  const double om = t.omega;
  r.limit = expected_cycle_rate(m.delta, i) * (1 + (i % 2 == 0 ? std::pow(om, i / 2.0) : 0.0));
  r.exact = i == 2 ? exact_conditioned_double_edge_ratio(m, n, a, b) : std::numeric_limits<double>::quiet_NaN();
  if (i % 2 == 1) {
    // Bipartite graphs have no odd cycles.
    r.limit = 0.0;
    r.exact = 0.0;
    return r;
  }

  const double ref = exact_first_moment_log(m, n, a, b);
  std::vector<double> logz(trials), xs(trials);
#pragma omp parallel for schedule(dynamic, 16)
  for (long k = 0; k < trials; ++k) {
    const BipartiteMultigraph g = sample_bipartite_regular(n, m.delta, split_seed(seed, k));
    const GibbsSummary s = z_alpha_beta_table(g, m);
    logz[k] = s.log_table[a][b] - ref;
    xs[k] = static_cast<double>(count_cycles(g, i)[i]);
  }
  double sw = 0, swx = 0, sx = 0;
  for (long k = 0; k < trials; ++k) {
    const double w = std::exp(logz[k]);
    sw += w;
    swx += w * xs[k];
    sx += xs[k];
  }
  if (!(sw > 0)) throw std::runtime_error("conditioned_cycle_moment_mc: all sampled weights vanish");
  r.estimate = swx / sw;
  double v = 0;
  for (long k = 0; k < trials; ++k) {
    const double e = std::exp(logz[k]) * (xs[k] - r.estimate);
    v += e * e;
  }
  r.stderr_ = std::sqrt(v) / sw;
  r.mean_cycles = sx / trials;
  return r;
}

FactorialMomentCheck poisson_factorial_moment(double mu, int r, long samples, std::uint64_t seed) {
  if (!(mu > 0) || r < 1 || samples < 2) throw std::invalid_argument("poisson_factorial_moment: bad arguments");
  Rng rng(seed);
  std::poisson_distribution<long> pois(mu);
  double s = 0, s2 = 0;
  for (long k = 0; k < samples; ++k) {
    const long x = pois(rng);
    double f = 1.0;
    for (int j = 0; j < r; ++j) f *= static_cast<double>(x - j);
    s += f;
    s2 += f * f;
  }
  FactorialMomentCheck c;
  c.estimate = s / samples;
  c.stderr_ = std::sqrt(std::max(0.0, s2 / samples - c.estimate * c.estimate) / (samples - 1));
  c.target = std::pow(mu, r);
  return c;
}

}  // namespace phasecrit
