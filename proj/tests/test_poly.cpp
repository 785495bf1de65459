#include <doctest.h>

#include <cmath>
#include <random>

#include "phasecrit/appendix.hpp"
#include "phasecrit/bias.hpp"
#include "phasecrit/poly.hpp"

using namespace phasecrit;
using P = MultiPoly;

namespace {

const P x = P::variable(P::X), y = P::variable(P::Y), t = P::variable(P::T);
const P qa = P::variable(P::QA), qb = P::variable(P::QB);

double eval(const P& p, double xv, double yv, double tv = 0) { return p.evaluate({xv, yv, tv, 0, 0, 0, 0}); }

}  // namespace

TEST_CASE("polynomial arithmetic") {
  const P one(1);
  CHECK((x + one).pow(2) == x * x + P(2) * x + one);
  CHECK((x + one).pow(2).to_string() == "x^2 + 2*x + 1");
  CHECK((x - y) * (x + y) == x.pow(2) - y.pow(2));
  CHECK((x - x).is_zero());
  CHECK((P(3) * x * y - qa).to_string() == "3*x*y - qa");
  CHECK((x.pow(3) * y + y).degree(P::X) == 3);
  CHECK((x.pow(3) * y + x * y).min_degree(P::X) == 1);
  const P p = x.pow(2) * y + P(5) * x * t + P(7);
  P::Exps e{};
  e[P::X] = 1;
  e[P::T] = 1;
  CHECK(p.coefficient_of(e) == 5);
  CHECK(p.coefficient(P::X, 2) == y);
  CHECK(p.substitute(P::X, t + one) == (t + one).pow(2) * y + P(5) * (t + one) * t + P(7));
  CHECK(p.shift_var(P::Y, 1) == p * y);
  CHECK_THROWS(p.shift_var(P::Y, -1));
  CHECK((P(6) * x + P(4)).content() == 2);
  CHECK((P(-6) * x - P(4)).content() == -2);
  CHECK((x + y).coefficient_sign() == 1);
  CHECK((-x - y).coefficient_sign() == -1);
  CHECK((x - y).coefficient_sign() == 0);
  CHECK(eval(p, 2.0, 3.0, 0.5) == doctest::Approx(12 + 5 + 7));
  CHECK(P::from_terms({{P::pack(e), 2}, {P::pack(e), -2}, {P::pack({}), 1}}) == one);
  // products with big coefficients stay exact
  CHECK((P(1) + x).pow(60).coefficient(P::X, 30).terms()[0].coef == mpz_class("118264581564861424"));
}

TEST_CASE("exact division") {
  CHECK(*try_divide(x.pow(2) - y.pow(2), x - y) == x + y);
  CHECK(*try_divide((x + y).pow(5) * (t - qa), (x + y).pow(2)) == (x + y).pow(3) * (t - qa));
  CHECK_FALSE(try_divide(x.pow(2) + P(1), x + P(1)).has_value());
  CHECK_FALSE(try_divide(P(3) * x, P(2)).has_value());
  CHECK_THROWS_AS(exact_divide(x.pow(2) + P(1), x + P(1)), DivisionError);
  try {
    exact_divide(x.pow(2) + P(1), x + P(1));
  } catch (const DivisionError& err) {
    CHECK_FALSE(err.remainder_witness.is_zero());
  }
}

TEST_CASE("radical reduction and coefficient extraction") {
  const P one(1);
  for (int d : {2, 3}) {
    const P r = reduce_radicals(qa.pow(3) * qb.pow(2), d);
    CHECK(r.degree(P::QA) == 1);
    CHECK(r.degree(P::QB) == 0);
    // qa^2 = (y-1)(x^d-1), qb^2 = (x-1)(y^d-1)
    const P expect = (y - one) * (x.pow(d) - one) * qa * (x - one) * (y.pow(d) - one);
    CHECK(r == expect);
  }
  const CCoefficients c = extract_c_coefficients(one + qa * qb);
  CHECK(c.c00 == one);
  CHECK(c.c11 == one);
  CHECK(c.c01.is_zero());
  CHECK(c.c10.is_zero());
  const P u = x * qa + y * qb + x * y, v = P(3) * qa * qb - x;
  const CCoefficients cu = extract_c_coefficients(u), cv = extract_c_coefficients(v),
                      cs = extract_c_coefficients(u + v);
  CHECK(cs.c00 == cu.c00 + cv.c00);
  CHECK(cs.c10 == cu.c10 + cv.c10);
  CHECK(cs.c01 == cu.c01 + cv.c01);
  CHECK(cs.c11 == cu.c11 + cv.c11);
  CHECK(cu.c10 == x);
  CHECK(cu.c01 == y);

  int clear = 0;
  CHECK(reparameterize(x, 2, &clear) == t * y + y.pow(2));
  CHECK(clear == 1);
}

TEST_CASE("case polynomial construction") {
  const CasePolynomial cp = build_case_polynomial(2);
  CHECK(cp.H.degree(P::QA) <= 1);
  CHECK(cp.H.degree(P::QB) <= 1);
  CHECK(cp.H.degree(P::A) == 0);
  CHECK(cp.H.degree(P::B) == 0);
  CHECK(cp.F == cp.D * cp.G);
  CHECK(cp.D == case_linear_factor());
  CHECK(cp.F == case_numerator(2));
  // rebuilding gives the identical canonical form
  CHECK(build_case_polynomial(2).H.content_hash() == cp.H.content_hash());
}

TEST_CASE("sign certificates for d = 2, 3, 4") {
  for (int d : {2, 3, 4}) {
    CAPTURE(d);
    const HardcoreCaseReport r = verify_hardcore_case(d);
    CHECK(r.pass);
    CHECK(r.failed_stage.empty());
    CHECK(r.certificate.case1);
    CHECK(r.certificate.case2);
    // powers of y - 1: 4d - 2 for c00, 4d - 3 for the mixed terms, 4d - 4 for c11
    const int y1[4] = {4 * d - 2, 4 * d - 3, 4 * d - 3, 4 * d - 4};
    for (int k = 0; k < 4; ++k) {
      const CoefficientCertificate& c = r.certificate.coeffs[k];
      CAPTURE(c.name);
      CHECK(c.y_power == 2 * (d - 1));
      CHECK(c.y_minus_1_power == y1[k]);
      CHECK(c.overall_sign == 1);
      CHECK(c.parity_ok);
      CHECK(c.reconstruction_ok);
      CHECK(c.offending.empty());
      CHECK(c.residual.coefficient_sign() == 1);
      CHECK(c.residual_terms == c.residual.size());
      CHECK(c.residual_hash == c.residual.content_hash());
    }
  }
  // leading pure-t coefficients of the c00 residual at d = 2, frozen after the certificate run
  const HardcoreCaseReport r2 = verify_hardcore_case(2);
  P::Exps e{};
  const int expect[4] = {0, 4, 28, 84};
  for (int k = 0; k < 4; ++k) {
    e[P::T] = k;
    CHECK(r2.certificate.coeffs[0].residual.coefficient_of(e) == expect[k]);
  }
  CHECK(verify_hardcore_case(2).h_hash == r2.h_hash);
}

TEST_CASE("extracted coefficients agree with the balance equation at random points") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ly(-1.5, 1.5), lt(-3.0, 2.5);
  for (int d : {2, 3}) {
    const CCoefficients c = extract_c_coefficients(build_case_polynomial(d).H);
    for (int k = 0; k < 50; ++k) {
      double yv = std::exp(ly(rng));
      if (std::abs(yv - 1) < 1e-3) yv = 1.5;
      const double tv = std::exp(lt(rng));
      CAPTURE(yv);
      CAPTURE(tv);
      CHECK(cross_check_point(c, d, yv, tv) < 1e-6);
    }
  }
}

TEST_CASE("Ising bias inequalities") {
  const IsingBiasReport r = ising_bias_check(0.1);
  CHECK(r.pass);
  CHECK(r.odds == doctest::Approx(r.odds_mirror).epsilon(1e-9));
  CHECK(r.odds_bound == doctest::Approx(4.0 / 9.0 * 1000.0).epsilon(1e-12));
  CHECK(r.weak_bound == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
  CHECK(r.strong_bound == doctest::Approx(400.0 / 9.0).epsilon(1e-12));
  CHECK(r.min_margin > 0);
  CHECK(ising_bias_sweep(0.05, 0.15, 3).size() == 3u);
}
