#include "phasecrit/appendix.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

namespace phasecrit {

namespace {

using V = MultiPoly;

MultiPoly var(MultiPoly::Var v, int e = 1) { return MultiPoly::variable(v, e); }

void check_d(int d) {
  if (d < 2 || d > 4) throw std::invalid_argument("hard-core case analysis: d must be 2, 3 or 4");
}

MultiPoly radical_a(int d) { return MultiPoly(1) - var(V::X, d) - var(V::Y) + var(V::X, d) * var(V::Y); }
MultiPoly radical_b(int d) { return MultiPoly(1) - var(V::Y, d) - var(V::X) + var(V::Y, d) * var(V::X); }

// 1 + y + ... + y^k, optionally plus t.
MultiPoly geometric(int k, bool with_t) {
  MultiPoly p(0);
  for (int i = 0; i <= k; ++i) p += var(V::Y, i);
  if (with_t) p += var(V::T);
  return p;
}

}  // namespace

MultiPoly case_numerator(int d) {
  check_d(d);
  const MultiPoly one(1), a = var(V::A), b = var(V::B), x = var(V::X), y = var(V::Y);
  const MultiPoly u = y * (one + a).pow(2) - one - a + a * b;
  const MultiPoly v = x * (one + b).pow(2) - one - b + a * b;
  return u * (x * (one + b).pow(2) + a * b + a).pow(d) - v * (y * (one + a).pow(2) + a * b + b).pow(d);
}

MultiPoly case_linear_factor() {
  const MultiPoly one(1), a = var(V::A), b = var(V::B);
  return var(V::X) * (b + one).pow(2) - var(V::Y) * (a + one).pow(2) + a - b;
}

MultiPoly reduce_radicals(const MultiPoly& p, int d) {
  check_d(d);
  const int da = std::max(0, p.degree(V::QA)), db = std::max(0, p.degree(V::QB));
  std::vector<MultiPoly> ra{MultiPoly(1)}, rb{MultiPoly(1)};
  for (int i = 1; i <= da / 2; ++i) ra.push_back(ra.back() * radical_a(d));
  for (int j = 1; j <= db / 2; ++j) rb.push_back(rb.back() * radical_b(d));
  MultiPoly out;
  for (int i = 0; i <= da; ++i) {
    const MultiPoly ci = p.coefficient(V::QA, i);
    if (ci.is_zero()) continue;
    for (int j = 0; j <= db; ++j) {
      const MultiPoly cij = ci.coefficient(V::QB, j);
      if (cij.is_zero()) continue;
      out += cij * ra[i / 2] * rb[j / 2] * var(V::QA, i % 2) * var(V::QB, j % 2);
    }
  }
  return out;
}

CasePolynomial build_case_polynomial(int d) {
  check_d(d);
  CasePolynomial c;
  c.d = d;
  c.F = case_numerator(d);
  c.D = case_linear_factor();
  c.G = exact_divide(c.F, c.D);
  ++c.exact_divisions;
  const int top = 2 * d - 1;
  const int ga = c.G.degree(V::A), gb = c.G.degree(V::B);
  if (ga > top || gb > top)
    throw std::runtime_error("build_case_polynomial: quotient degree in a or b exceeds 2d - 1");

  const MultiPoly one(1), x = var(V::X), y = var(V::Y);
  const MultiPoly den_a = var(V::X, d) - y, den_b = var(V::Y, d) - x;
  const MultiPoly num_a = y - one + var(V::QA), num_b = x - one + var(V::QB);
  // wa[i] = num_a^i den_a^{top - i}, radicals reduced; likewise wb.
  std::vector<MultiPoly> pa{one}, pb{one}, da_pow{one}, db_pow{one};
  for (int i = 1; i <= top; ++i) {
    pa.push_back(reduce_radicals(pa.back() * num_a, d));
    pb.push_back(reduce_radicals(pb.back() * num_b, d));
    da_pow.push_back(da_pow.back() * den_a);
    db_pow.push_back(db_pow.back() * den_b);
  }
  std::vector<MultiPoly> wb(top + 1);
  for (int j = 0; j <= top; ++j) wb[j] = pb[j] * db_pow[top - j];
  MultiPoly H;
  for (int i = 0; i <= ga; ++i) {
    const MultiPoly gi = c.G.coefficient(V::A, i);
    if (gi.is_zero()) continue;
    MultiPoly inner;
    for (int j = 0; j <= gb; ++j) {
      const MultiPoly gij = gi.coefficient(V::B, j);
      if (!gij.is_zero()) inner += gij * wb[j];
    }
    H += reduce_radicals(pa[i] * da_pow[top - i] * inner, d);
  }
  c.H = std::move(H);
  if (c.H.degree(V::QA) > 1 || c.H.degree(V::QB) > 1)
    throw std::runtime_error("build_case_polynomial: radical reduction left degree > 1");
  return c;
}

CCoefficients extract_c_coefficients(const MultiPoly& H) {
  if (H.degree(V::QA) > 1 || H.degree(V::QB) > 1)
    throw std::invalid_argument("extract_c_coefficients: qa or qb degree exceeds 1; reduce first");
  if (H.degree(V::A) > 0 || H.degree(V::B) > 0 || H.degree(V::T) > 0)
    throw std::invalid_argument("extract_c_coefficients: expected a polynomial in x, y, qa, qb");
  CCoefficients c;
  const MultiPoly h0 = H.coefficient(V::QA, 0), h1 = H.coefficient(V::QA, 1);
  c.c00 = h0.coefficient(V::QB, 0);
  c.c01 = h0.coefficient(V::QB, 1);
  c.c10 = h1.coefficient(V::QB, 0);
  c.c11 = h1.coefficient(V::QB, 1);
  return c;
}

MultiPoly reparameterize(const MultiPoly& c, int d, int* clearing_power) {
  check_d(d);
  if (c.degree(V::T) > 0) throw std::invalid_argument("reparameterize: input already involves t");
  const int N = std::max(0, c.degree(V::X));
  if (clearing_power) *clearing_power = N;
  const MultiPoly one(1), num = var(V::T) * var(V::Y) + var(V::Y, d), den = one + var(V::T);
  std::vector<MultiPoly> np{one}, dp{one};
  for (int k = 1; k <= N; ++k) {
    np.push_back(np.back() * num);
    dp.push_back(dp.back() * den);
  }
  MultiPoly out;
  for (int k = 0; k <= N; ++k) {
    const MultiPoly ck = c.coefficient(V::X, k);
    if (!ck.is_zero()) out += ck * np[k] * dp[N - k];
  }
  return out;
}

CoefficientCertificate certify_coefficient(const MultiPoly& c, int d, const std::string& name) {
  check_d(d);
  CoefficientCertificate cert;
  cert.name = name;
  if (c.is_zero()) throw std::runtime_error("certify_coefficient: " + name + " vanishes identically");
  const MultiPoly u = reparameterize(c, d, &cert.clearing_power);
  MultiPoly r = u;
  MultiPoly rebuilt(1);

  cert.y_power = r.min_degree(V::Y);
  r = r.shift_var(V::Y, -cert.y_power);
  rebuilt = rebuilt * var(V::Y, cert.y_power);

  const MultiPoly one(1), ym1 = var(V::Y) - one, tp1 = var(V::T) + one;
  auto strip = [&](const MultiPoly& f, int& count) {
    while (auto q = try_divide(r, f)) {
      r = std::move(*q);
      rebuilt = rebuilt * f;
      ++count;
      ++cert.exact_divisions;
    }
  };
  strip(ym1, cert.y_minus_1_power);
  strip(tp1, cert.one_plus_t_power);
  for (int k = 1; k <= d; ++k)
    for (bool with_t : {true, false}) {
      const MultiPoly f = geometric(k, with_t);
      int count = 0;
      strip(f, count);
      if (count) cert.positive_factors.push_back({f.to_string(), count});
    }

  cert.overall_sign = r.coefficient_sign();
  rebuilt = rebuilt * r;
  cert.reconstruction_ok = rebuilt == u;
  const int lead = r.is_zero() ? 1 : sgn(r.terms().front().coef);
  if (cert.overall_sign == 0) {
    for (const auto& t : r.terms())
      if (sgn(t.coef) != lead && cert.offending.size() < 10)
        cert.offending.push_back(MultiPoly::from_terms({t}).to_string());
  }
  cert.residual = lead < 0 ? -r : r;
  cert.residual_terms = r.size();
  cert.residual_hash = cert.residual.content_hash();
  const bool even = cert.y_minus_1_power % 2 == 0;
  cert.parity_ok = (name == "c00" || name == "c11") ? even : !even;
  return cert;
}

SignCertificate verify_sign_pattern(const CCoefficients& c, int d) {
  SignCertificate s;
  s.d = d;
  s.coeffs[0] = certify_coefficient(c.c00, d, "c00");
  s.coeffs[1] = certify_coefficient(c.c01, d, "c01");
  s.coeffs[2] = certify_coefficient(c.c10, d, "c10");
  s.coeffs[3] = certify_coefficient(c.c11, d, "c11");
  bool ok = true;
  for (const auto& k : s.coeffs) ok = ok && k.overall_sign != 0 && k.reconstruction_ok;
  if (ok) {
    // Signs for y > 1 are the residual signs; for y < 1 each (y - 1)^k contributes (-1)^k.
    int above[4], below[4];
    for (int i = 0; i < 4; ++i) {
      above[i] = s.coeffs[i].overall_sign;
      below[i] = s.coeffs[i].y_minus_1_power % 2 ? -above[i] : above[i];
    }
    s.case1 = above[0] == above[1] && above[1] == above[2] && above[2] == above[3];
    s.case2 = below[0] == below[3] && below[1] == below[2] && below[1] == -below[0];
  }
  bool parity = true;
  for (const auto& k : s.coeffs) parity = parity && k.parity_ok;
  s.pass = ok && parity && s.case1 && s.case2;
  return s;
}

HardcoreCaseReport verify_hardcore_case(int d) {
  HardcoreCaseReport r;
  r.d = d;
  const auto t0 = std::chrono::steady_clock::now();
  std::string stage = "build_case_polynomial";
  try {
    const CasePolynomial cp = build_case_polynomial(d);
    r.f_terms = cp.F.size();
    r.g_terms = cp.G.size();
    r.h_terms = cp.H.size();
    r.h_hash = cp.H.content_hash();
    r.exact_divisions = cp.exact_divisions;
    stage = "extract_c_coefficients";
    const CCoefficients c = extract_c_coefficients(cp.H);
    stage = "verify_sign_pattern";
    r.certificate = verify_sign_pattern(c, d);
    for (const auto& k : r.certificate.coeffs) r.exact_divisions += k.exact_divisions;
    r.pass = r.certificate.pass;
    if (!r.pass) r.failed_stage = stage;
  } catch (const std::exception& e) {
    r.pass = false;
    r.failed_stage = stage;
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

double cross_check_point(const CCoefficients& c, int d, double y_in, double t_in) {
  check_d(d);
  const mp_bitcnt_t prec = 512;
  const mpf_class one(1, prec), y(y_in, prec), t(t_in, prec);
  auto pw = [&](const mpf_class& b, int e) {
    mpf_class r(1, prec);
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  const mpf_class x = (t * y + pw(y, d)) / (t + one);
  const int branch = y_in > 1 ? 1 : -1;
  mpf_class qa2 = (y - one) * (pw(x, d) - one), qb2 = (x - one) * (pw(y, d) - one);
  if (qa2 < 0 || qb2 < 0) throw std::invalid_argument("cross_check_point: radicands must be nonnegative");
  mpf_class qa(0, prec), qb(0, prec);
  qa = sqrt(qa2);
  qb = sqrt(qb2);
  if (branch < 0) {
    qa = -qa;
    qb = -qb;
  }
  const mpf_class a = (y - one + qa) / (pw(x, d) - y), b = (x - one + qb) / (pw(y, d) - x);
  const mpf_class u = y * pw(one + a, 2) - one - a + a * b;
  const mpf_class v = x * pw(one + b, 2) - one - b + a * b;
  const mpf_class F = u * pw(x * pw(one + b, 2) + a * b + a, d) - v * pw(y * pw(one + a, 2) + a * b + b, d);
  const mpf_class D = x * pw(b + one, 2) - y * pw(a + one, 2) + a - b;
  const mpf_class direct = F / D * pw(pw(x, d) - y, 2 * d - 1) * pw(pw(y, d) - x, 2 * d - 1);

  std::array<mpf_class, MultiPoly::kVars> at;
  for (auto& e : at) e = mpf_class(0, prec);
  at[V::X] = x;
  at[V::Y] = y;
  const mpf_class via = c.c00.evaluate(at, prec) + c.c10.evaluate(at, prec) * qa + c.c01.evaluate(at, prec) * qb +
                        c.c11.evaluate(at, prec) * qa * qb;
  mpf_class diff = abs(via - direct), scale = abs(direct);
  if (scale == 0) return diff.get_d();
  return mpf_class(diff / scale).get_d();
}

}  // namespace phasecrit
