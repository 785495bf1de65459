#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phasecrit/poly.hpp"

namespace phasecrit {

// Hard-core second-moment case analysis for d = Delta - 1 in {2, 3, 4}. With
// a = (y - 1 + qa)/(x^d - y), b = (x - 1 + qb)/(y^d - x), qa^2 = (y-1)(x^d-1) and
// qb^2 = (x-1)(y^d-1), the balance equation reduces to c00 + c10 qa + c01 qb + c11 qa qb = 0.

struct CasePolynomial {
  int d = 0;
  MultiPoly F;  // numerator before removing the linear factor
  MultiPoly D;  // x (b+1)^2 - y (a+1)^2 + a - b
  MultiPoly G;  // F / D, exact
  MultiPoly H;  // G with a, b substituted, times (x^d - y)^{2d-1} (y^d - x)^{2d-1}, radicals reduced
  int exact_divisions = 0;
};

MultiPoly case_numerator(int d);
MultiPoly case_linear_factor();
// qa^2 -> 1 - x^d - y + x^d y and qb^2 -> 1 - y^d - x + y^d x until both degrees are <= 1.
MultiPoly reduce_radicals(const MultiPoly& p, int d);
CasePolynomial build_case_polynomial(int d);

struct CCoefficients {
  MultiPoly c00, c01, c10, c11;  // c_ij multiplies qa^i qb^j
};
CCoefficients extract_c_coefficients(const MultiPoly& H);

// Substitutes x = (t y + y^d)/(t + 1) and multiplies by (1 + t)^{deg_x c}.
MultiPoly reparameterize(const MultiPoly& c, int d, int* clearing_power = nullptr);

struct CoefficientCertificate {
  std::string name;
  int clearing_power = 0;   // power of (1 + t) cleared
  int y_power = 0;
  int y_minus_1_power = 0;
  int one_plus_t_power = 0;
  std::vector<std::pair<std::string, int>> positive_factors;  // stripped factors with positive coefficients
  int overall_sign = 0;     // sign of the stripped residual's coefficients, 0 if mixed
  MultiPoly residual;       // stripped residual scaled to positive leading coefficient
  std::size_t residual_terms = 0;
  std::uint64_t residual_hash = 0;
  std::vector<std::string> offending;  // monomials of the minority sign when mixed
  bool parity_ok = false;   // even power of y - 1 for c00, c11 and odd for c01, c10
  bool reconstruction_ok = false;  // product of the stripped pieces gives back the input
  int exact_divisions = 0;
};

struct SignCertificate {
  int d = 0;
  std::array<CoefficientCertificate, 4> coeffs;  // c00, c01, c10, c11
  bool case1 = false;  // 1 < y: all four coefficients share one sign
  bool case2 = false;  // y < 1: c00, c11 share a sign and c01, c10 have the opposite sign
  bool pass = false;
};

SignCertificate verify_sign_pattern(const CCoefficients& c, int d);
CoefficientCertificate certify_coefficient(const MultiPoly& c, int d, const std::string& name);

struct HardcoreCaseReport {
  int d = 0;
  bool pass = false;
  std::string failed_stage;  // empty on success
  std::string error;
  std::size_t f_terms = 0, g_terms = 0, h_terms = 0;
  std::uint64_t h_hash = 0;
  int exact_divisions = 0;
  double seconds = 0;
  SignCertificate certificate;
};
HardcoreCaseReport verify_hardcore_case(int d);

// Relative difference between c00 + c10 qa + c01 qb + c11 qa qb and the balance
// expression evaluated directly from a and b at x = (t y + y^d)/(t + 1). The branch of
// qa, qb is positive for y > 1 and negative for y < 1.
double cross_check_point(const CCoefficients& c, int d, double y, double t);

}  // namespace phasecrit
