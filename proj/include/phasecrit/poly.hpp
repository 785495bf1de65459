#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace phasecrit {

// Sparse polynomial in x, y, t, a, b, qa, qb with integer coefficients. Exponents are
// packed 9 bits per variable into one word with x in the high bits, so comparing packed
// keys is lexicographic order x > y > t > a > b > qa > qb. Terms are kept sorted by
// descending key with no zero coefficients.
class MultiPoly {
 public:
  enum Var { X = 0, Y, T, A, B, QA, QB };
  static constexpr int kVars = 7;
  static constexpr int kBits = 9;
  static constexpr int kMaxExp = (1 << kBits) - 1;
  using Exps = std::array<int, kVars>;
  using Key = std::uint64_t;
  struct Term {
    Key key;
    mpz_class coef;
  };

  MultiPoly() = default;
  explicit MultiPoly(long c);
  explicit MultiPoly(const mpz_class& c);
  static MultiPoly variable(Var v, int power = 1);
  static MultiPoly monomial(const mpz_class& c, const Exps& e);
  // Terms may be unsorted, repeated or zero.
  static MultiPoly from_terms(std::vector<Term> terms);

  static Key pack(const Exps& e);
  static Exps unpack(Key k);
  static int exponent(Key k, Var v) { return static_cast<int>(k >> shift(v) & kMaxExp); }
  static int shift(Var v) { return kBits * (kVars - 1 - static_cast<int>(v)); }
  static const char* name(Var v);

  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<Term>& terms() const { return terms_; }
  int degree(Var v) const;
  int min_degree(Var v) const;
  mpz_class coefficient_of(const Exps& e) const;

  MultiPoly operator-() const;
  MultiPoly& operator+=(const MultiPoly& o);
  MultiPoly& operator-=(const MultiPoly& o);
  MultiPoly& operator*=(const MultiPoly& o) { return *this = *this * o; }
  friend MultiPoly operator+(MultiPoly p, const MultiPoly& q) { return p += q; }
  friend MultiPoly operator-(MultiPoly p, const MultiPoly& q) { return p -= q; }
  friend MultiPoly operator*(const MultiPoly& p, const MultiPoly& q);
  friend MultiPoly operator*(const mpz_class& c, const MultiPoly& p);
  bool operator==(const MultiPoly& o) const;

  MultiPoly pow(unsigned e) const;
  // Coefficient of v^k, as a polynomial free of v.
  MultiPoly coefficient(Var v, int k) const;
  // Multiplies by v^k (k >= 0) or divides by v^{-k} (exact; throws otherwise).
  MultiPoly shift_var(Var v, int k) const;
  // p(v = q); q must not involve v.
  MultiPoly substitute(Var v, const MultiPoly& q) const;

  mpz_class content() const;  // gcd of the coefficients, sign of the leading term
  // +1 or -1 when every coefficient has that sign, 0 when mixed or zero.
  int coefficient_sign() const;

  double evaluate(const std::array<double, kVars>& at) const;
  mpf_class evaluate(const std::array<mpf_class, kVars>& at, mp_bitcnt_t prec) const;

  // Canonical text: terms in descending lex order, e.g. "3*x^2*y - qa + 1".
  std::string to_string() const;
  std::uint64_t content_hash() const;  // FNV-1a over to_string()

 private:
  std::vector<Term> terms_;
  void normalize();
};

struct DivisionError : std::runtime_error {
  MultiPoly remainder_witness;  // the partial remainder at the failing step
  DivisionError(const std::string& what, MultiPoly r) : std::runtime_error(what), remainder_witness(std::move(r)) {}
};

// Quotient when q divides p exactly over the integers, nullopt otherwise.
std::optional<MultiPoly> try_divide(const MultiPoly& p, const MultiPoly& q);
// Like try_divide but throws DivisionError with the remainder witness.
MultiPoly exact_divide(const MultiPoly& p, const MultiPoly& q);

}  // namespace phasecrit
