#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "phasecrit/moments.hpp"
#include "phasecrit/numeric.hpp"
#include "test_support.hpp"

using namespace phasecrit;
using testsupport::binom;

namespace {

double H(double p) { return -xlogx(p) - xlogx(1 - p); }

}  // namespace

TEST_CASE("trivial model: first moment exponent is the sum of binary entropies") {
  const SpinModel triv{1, 1, 1, 3};
  for (double a : {0.1, 0.3, 0.5})
    for (double b : {0.2, 0.5, 0.8}) CHECK(phi1(triv, a, b).phi1 == doctest::Approx(H(a) + H(b)).epsilon(1e-12));
  // and the exact moment collapses to binomials
  CHECK(std::exp(exact_first_moment_log(triv, 10, 3, 6)) == doctest::Approx(binom(10, 3) * binom(10, 6)).epsilon(1e-12));
}

TEST_CASE("exact first moment: small cases") {
  const SpinModel m{0.3, 0.6, 1.7, 1};
  CHECK(std::exp(exact_first_moment_log(m, 1, 1, 1)) == doctest::Approx(1.7 * 1.7 * 0.3).epsilon(1e-14));
  const SpinModel hc = SpinModel::hardcore(1, 1.0);
  CHECK(std::exp(exact_first_moment_log(hc, 2, 1, 1)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(exact_first_moment_log(SpinModel::hardcore(2, 1.0), 3, 3, 1) == kNegInf);
  CHECK_THROWS_AS(exact_first_moment_log(m, 10, 0.33, 0.5), std::invalid_argument);
}

TEST_CASE("exact first moment equals the average over every graph") {
  for (const SpinModel& m : {SpinModel{0.3, 0.6, 1.7, 2}, SpinModel::hardcore(2, 2.0), SpinModel{0.5, 0.5, 1.0, 3}}) {
    const int n = 3;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        CAPTURE(a);
        CAPTURE(b);
        const double brute = testsupport::brute_first_moment(m, n, m.delta, a, b);
        const double ex = std::exp(exact_first_moment_log(m, n, a, b));
        CHECK(ex == doctest::Approx(brute).epsilon(1e-12));
      }
  }
}

TEST_CASE("exact second moment equals the average over every graph") {
  const SpinModel m{0.4, 0.7, 1.3, 2};
  const int n = 3;
  for (int a : {1, 2})
    for (int b : {1, 2})
      for (int g = std::max(0, 2 * a - n); g <= a; ++g)
        for (int dl = std::max(0, 2 * b - n); dl <= b; ++dl) {
          const double brute = testsupport::brute_second_moment(m, n, 2, a, b, g, dl);
          CHECK(std::exp(exact_second_moment_log(m, n, a, b, g, dl)) == doctest::Approx(brute).epsilon(1e-11));
        }
  // trivial model: product of multinomials
  const SpinModel triv{1, 1, 1, 3};
  const double side = binom(6, 3) * binom(3, 2) * binom(3, 1);
  const double count = side * side;
  CHECK(std::exp(exact_second_moment_log(triv, 6, 3, 3, 2, 2)) == doctest::Approx(count).epsilon(1e-12));
  // full overlap collapses to a sum over single configurations of w^2
  const SpinModel sq{0.4 * 0.4, 0.7 * 0.7, 1.3 * 1.3, 2};
  CHECK(exact_second_moment_log(m, n, 2, 1, 2, 1) == doctest::Approx(exact_first_moment_log(sq, n, 2, 1)).epsilon(1e-12));
  CHECK_THROWS_AS(exact_second_moment_log(m, 41, 1, 1, 0, 0), std::invalid_argument);
}

TEST_CASE("optimizers at (p+, p-) match the closed forms and their tensor square") {
  for (const SpinModel& m : {SpinModel::ising(3, 0.2), SpinModel{0.15, 0.25, 3.0, 3}, SpinModel{0.3, 0.4, 6.0, 4}}) {
    CAPTURE(describe(m));
    const TreePhaseData t = solve_tree_fixed_points(m);
    REQUIRE(t.regime == Regime::NonUniqueness);
    const FirstMomentPoint p = phi1(m, t.p_plus, t.p_minus);
    const double E1 = m.b2 + t.Q_plus + t.Q_minus + m.b1 * t.Q_plus * t.Q_minus;
    Eigen::Matrix2d X;
    X << m.b1 * t.Q_plus * t.Q_minus, t.Q_plus, t.Q_minus, m.b2;
    X /= E1;
    CHECK((p.X - X).cwiseAbs().maxCoeff() < 1e-10);
    const double a = t.p_plus, b = t.p_minus;
    const SecondMomentPoint s = phi2(m, a, b, a * a, b * b);
    Eigen::Matrix4d Y;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) Y(i, j) = X(i / 2, j / 2) * X(i % 2, j % 2);
    CHECK((s.Y - Y).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s.phi2 == doctest::Approx(2 * p.phi1).epsilon(1e-10));
  }
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.1, 0.9);
  const SpinModel m{0.3, 0.5, 2.0, 3};
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const double a = U(rng), b = U(rng);
    const FirstMomentPoint p = phi1(m, a, b);
    const Eigen::Vector2d g = phi1_gradient(m, p);
    CHECK(g[0] == doctest::Approx((phi1(m, a + h, b).phi1 - phi1(m, a - h, b).phi1) / (2 * h)).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx((phi1(m, a, b + h).phi1 - phi1(m, a, b - h).phi1) / (2 * h)).epsilon(1e-6));

    const auto [gl, gh] = overlap_range(a);
    const auto [dl, dh] = overlap_range(b);
    const double gm = gl + (gh - gl) * (0.2 + 0.6 * U(rng)), dm = dl + (dh - dl) * (0.2 + 0.6 * U(rng));
    const SecondMomentPoint s = phi2(m, a, b, gm, dm);
    const Eigen::Vector2d g2 = phi2_gradient(m, s);
    const double hg = 1e-5 * (gh - gl), hd = 1e-5 * (dh - dl);
    CHECK(std::abs(g2[0] - (phi2(m, a, b, gm + hg, dm).phi2 - phi2(m, a, b, gm - hg, dm).phi2) / (2 * hg)) < 1e-6);
    CHECK(std::abs(g2[1] - (phi2(m, a, b, gm, dm + hd).phi2 - phi2(m, a, b, gm, dm - hd).phi2) / (2 * hd)) < 1e-6);
  }
}

TEST_CASE("boundary repulsion of the first moment exponent") {
  const SpinModel m = SpinModel::ising(3, 0.2);
  const double b = 0.4;
  const Eigen::Vector2d lo = phi1_gradient(m, phi1(m, 1e-9, b));
  const Eigen::Vector2d hi = phi1_gradient(m, phi1(m, 1 - 1e-9, b));
  CHECK(lo[0] > 10);
  CHECK(hi[0] < -10);
  // hard-core infeasible corner
  CHECK(phi1(SpinModel::hardcore(3, 8.0), 0.7, 0.6).phi1 == kNegInf);
  CHECK(std::isfinite(phi1(SpinModel::hardcore(3, 8.0), 0.0, 0.5).phi1));
}

TEST_CASE("critical points of the first moment exponent") {
  const auto is = find_phi1_critical_points(SpinModel::ising(3, 0.2));
  REQUIRE(is.size() == 3);
  CHECK(is[0].alpha == doctest::Approx(0.98112522432469).epsilon(1e-11));
  CHECK(is[0].beta == doctest::Approx(1 - 0.98112522432469).epsilon(1e-9));
  CHECK(is[1].alpha == doctest::Approx(is[0].beta));
  CHECK(is[2].alpha == doctest::Approx(0.5));
  for (const auto& c : is) CHECK(c.grad_norm < 1e-8);
  const auto un = find_phi1_critical_points(SpinModel::ising(3, 0.5));
  REQUIRE(un.size() == 1);
  CHECK(un[0].alpha == doctest::Approx(0.5));
  const auto hc = find_phi1_critical_points(SpinModel::hardcore(3, 8.0));
  REQUIRE(hc.size() == 3);
  for (const auto& c : hc) CHECK(c.grad_norm < 1e-8);
  CHECK(hc[0].alpha != doctest::Approx(hc[0].beta));
}

TEST_CASE("Hessian classification agrees with the closed-form minors") {
  const auto cls = classify_phi1_critical_points(SpinModel::ising(3, 0.2));
  REQUIRE(cls.size() == 3);
  CHECK(cls[0].kind == "local_max");
  CHECK(cls[1].kind == "local_max");
  CHECK(cls[2].kind == "saddle");
  for (const auto& c : cls) {
    REQUIRE(c.closed_minors.size() == c.numeric_minors.size());
    for (std::size_t k = 0; k < c.closed_minors.size(); ++k)
      CHECK(c.numeric_minors[k] == doctest::Approx(c.closed_minors[k]).epsilon(1e-6));
  }
  CHECK(cls[0].closed_minors[2] > 0);
  CHECK(cls[2].closed_minors[2] < 0);
  // P1 = Delta E1 E2 / (B1 B2 Q- Q+) at (p+, p-)
  CHECK(cls[0].closed_minors[0] == doctest::Approx(3 * 14.4 * 0.96 / 0.04).epsilon(1e-12));
  // hard-core: numeric Hessian only
  for (const auto& c : classify_phi1_critical_points(SpinModel::hardcore(3, 8.0))) CHECK(c.closed_minors.empty());
}

TEST_CASE("second moment maximum sits at the uncorrelated overlap") {
  const Phi2MaxReport r = verify_phi2_maximum(SpinModel::ising(3, 0.2));
  CHECK(r.pass);
  CHECK_FALSE(r.competing);
  CHECK(r.target_gamma == doctest::Approx(0.962606705806).epsilon(1e-10));
  CHECK(r.target_delta == doctest::Approx(0.000356257156793).epsilon(1e-9));
  CHECK(std::abs(r.found_gamma - r.target_gamma) < 1e-7);
  CHECK(std::abs(r.value_gap) < 1e-10);
  CHECK(r.has_minors);
  CHECK(r.closed_minors[0] > 0);
  CHECK(r.closed_minors[1] > 0);
  CHECK(r.minors_rel_err < 1e-6);
  const Phi2MaxReport h = verify_phi2_maximum(SpinModel::hardcore(4, 1.1 * 27.0 / 16.0));
  CHECK(h.pass);
}

TEST_CASE("moment ratio limit and asymptotic constants at Ising B = 0.2") {
  const SpinModel m = SpinModel::ising(3, 0.2);
  // omega = 1/16: (1 - w^2)^{-1} (1 - 4 w^2)^{-1/2} = (256/255) (64/63)^{1/2}
  const double oracle = 256.0 / 255.0 * std::sqrt(64.0 / 63.0);
  CHECK(moment_ratio_limit(m) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(moment_ratio_limit(m) == doctest::Approx(1.0118578310103).epsilon(1e-12));
  CHECK(ratio_limit_formula(0.0, 3) == 1.0);
  CHECK(ratio_limit_formula(1e-9, 5) == doctest::Approx(1.0).epsilon(1e-12));
  const AsymptoticConstants c = asymptotic_prefactors(m);
  CHECK(c.E1 == doctest::Approx(14.4).epsilon(1e-12));
  CHECK(c.E2 == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(c.identity_lhs == doctest::Approx(c.identity_rhs).epsilon(1e-10));
  CHECK(c.identity_rhs == doctest::Approx(1 - 1.0 / 256).epsilon(1e-12));
  CHECK(c.ratio_limit == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(c.quad_form_det > 0);
  CHECK(quad_form_det_numeric(m) == doctest::Approx(c.quad_form_det).epsilon(1e-5));
  // hard-core uses the same formula
  const SpinModel hc = SpinModel::hardcore(3, 8.0);
  CHECK(moment_ratio_limit(hc) == doctest::Approx(ratio_limit_formula(solve_tree_fixed_points(hc).omega, 3)));
  CHECK_THROWS(moment_ratio_limit(SpinModel::ising(3, 0.5)));
}

TEST_CASE("Laplace trend of the exact first moment") {
  const SpinModel m = SpinModel::ising(3, 0.2);
  const TreePhaseData t = solve_tree_fixed_points(m);
  const AsymptoticConstants c = asymptotic_prefactors(m);
  const double phi = phi1(m, t.p_plus, t.p_minus).phi1;
  double prev = 1e300;
  for (int n : {100, 1000, 10000}) {
    // the lattice point nearest the optimizer; the exponent is evaluated there too
    const LatticePoint lp = round_to_lattice(n, t.p_plus, t.p_minus);
    const double phi_n = phi1(m, lp.alpha, lp.beta).phi1;
    const double scaled = std::exp(exact_first_moment_log(m, n, lp.a, lp.b) + std::log(n) - n * phi_n);
    const double err = std::abs(scaled / c.first_prefactor - 1);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01);
  CHECK(phi < 1.0);
}

TEST_CASE("gadget first moment ratio") {
  // independent spins
  CHECK(gadget_x_star({1, 1, 1, 3}, 0.3, 0.6) == doctest::Approx(0.18).epsilon(1e-14));
  // hard-core
  CHECK(gadget_x_star(SpinModel::hardcore(3, 8), 0.3, 0.4) == 0.0);
  // Ising: root of B^2 (a - x)(b - x) = x (1 - a - b + x)
  const SpinModel m = SpinModel::ising(3, 0.2);
  const TreePhaseData t = solve_tree_fixed_points(m);
  const double a = t.p_plus, b = t.p_minus, k = 0.04;
  const double A = k - 1, B = -(k * (a + b) + 1 - a - b), C = k * a * b;
  const double x = (-B - std::sqrt(B * B - 4 * A * C)) / (2 * A);
  CHECK(gadget_x_star(m, a, b) == doctest::Approx(x).epsilon(1e-12));

  const EtaCounts eta{0, 2, 0, 2};
  const GadgetFirstRatio r = gadget_first_moment_ratio(m, a, b, eta);
  const double direct = std::pow((1 - a) * (1 - a) * (1 - b) * (1 - b) / std::pow(1 - a - b + x, 2) * 0.04, 2);
  CHECK(r.ratio == doctest::Approx(direct).epsilon(1e-12));
  CHECK(r.has_product_form);
  CHECK(r.product_form == doctest::Approx(r.ratio).epsilon(1e-10));

  // the finite-n ratio approaches the asymptotic value
  for (EtaCounts e : {EtaCounts{1, 0, 0, 1}, EtaCounts{0, 1, 1, 0}, EtaCounts{1, 0, 1, 0}}) {
    const LatticePoint lp = round_to_lattice(1000000, a, b);
    const double asym = gadget_first_moment_ratio(m, lp.alpha, lp.beta, e).ratio;
    CHECK(gadget_first_moment_ratio_exact(m, 1000000, lp.a, lp.b, e) == doctest::Approx(asym).epsilon(1e-4));
  }
  CHECK_THROWS_AS(gadget_first_moment_ratio(m, 1.0, 0.0, eta), std::invalid_argument);
  CHECK_THROWS_AS(gadget_first_moment_ratio(m, a, b, EtaCounts{1, 1, 0, 1}), std::invalid_argument);
}

TEST_CASE("gadget finite-n ratio equals the average over every gadget graph") {
  // n = 2 with one boundary vertex per side, no trees: 2 matchings on 3 + 3 vertices and
  // one matching on W.
  const SpinModel m{0.3, 0.6, 1.4, 3};
  const int n = 2, side = 3;
  const auto perms3 = testsupport::all_permutations(side);
  const auto perms2 = testsupport::all_permutations(n);
  for (EtaCounts eta : {EtaCounts{1, 0, 0, 1}, EtaCounts{0, 1, 1, 0}, EtaCounts{1, 0, 1, 0}, EtaCounts{0, 1, 0, 1}})
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        double total = 0;
        long graphs = 0;
        for (const auto& p1 : perms3)
          for (const auto& p2 : perms3)
            for (const auto& pw : perms2) {
              ++graphs;
              for (unsigned L = 0; L < 4; ++L) {
                if (__builtin_popcount(L) != a) continue;
                for (unsigned R = 0; R < 4; ++R) {
                  if (__builtin_popcount(R) != b) continue;
                  const unsigned LL = L | (eta.minus1 ? 4u : 0u), RR = R | (eta.minus2 ? 4u : 0u);
                  double w = testsupport::config_weight(m, {p1, p2}, LL, RR);
                  w *= testsupport::config_weight(SpinModel{m.b1, m.b2, 1.0, 1}, {pw}, L, R);
                  total += w;
                }
              }
            }
        const double num = total / graphs;
        const double den = testsupport::brute_first_moment(m, n, 3, a, b);
        CHECK(gadget_first_moment_ratio_exact(m, n, a, b, eta) == doctest::Approx(num / den).epsilon(1e-12));
      }
}

TEST_CASE("gadget second moment ratio") {
  const SpinModel m = SpinModel::ising(3, 0.2);
  const TreePhaseData t = solve_tree_fixed_points(m);
  const double cs = gadget_c_star(m, t, 1);
  CHECK(gadget_second_moment_ratio(m, {0, 1, 0, 1}) == doctest::Approx(cs * cs).epsilon(1e-12));
  CHECK(gadget_second_moment_ratio(m, {1, 0, 0, 1}) == doctest::Approx(cs * cs * t.Q_plus * t.Q_plus).epsilon(1e-9));
  // the ratio to the squared first-moment ratio does not depend on eta
  std::mt19937_64 rng(9);
  double ref = 0;
  for (int k = 0; k < 10; ++k) {
    const int mp = 3;
    const int e1 = static_cast<int>(rng() % (mp + 1)), e2 = static_cast<int>(rng() % (mp + 1));
    const EtaCounts eta{e1, mp - e1, e2, mp - e2};
    const double f = gadget_first_moment_ratio(m, t.p_plus, t.p_minus, eta).ratio;
    const double q = gadget_second_moment_ratio(m, eta) / (f * f);
    if (k == 0) ref = q;
    CHECK(q == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("multinomial ratio approximation") {
  const MultinomialRatio z = multinomial_ratio_approx({5, 7}, {0, 0});
  CHECK(z.exact == 1.0);
  CHECK(z.approx == 1.0);
  const MultinomialRatio r = multinomial_ratio_approx({100, 100}, {1, 1});
  CHECK(r.exact == doctest::Approx(202.0 * 201.0 / (101.0 * 101.0)).epsilon(1e-12));
  CHECK(r.approx == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(r.rel_error) <= r.bound);
  const MultinomialRatio big = multinomial_ratio_approx({10000, 10000}, {3, 3});
  CHECK(std::abs(big.rel_error) <= 1.8e-3);
  CHECK(std::abs(big.rel_error) <= big.rigorous_bound);
  CHECK_THROWS_AS(multinomial_ratio_approx({3}, {2}), std::invalid_argument);
}
