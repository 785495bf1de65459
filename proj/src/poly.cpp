#include "phasecrit/poly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace phasecrit {

namespace {

constexpr MultiPoly::Key kFieldMask = MultiPoly::kMaxExp;

bool divides_key(MultiPoly::Key d, MultiPoly::Key n) {
  for (int v = 0; v < MultiPoly::kVars; ++v) {
    const int s = MultiPoly::kBits * v;
    if ((d >> s & kFieldMask) > (n >> s & kFieldMask)) return false;
  }
  return true;
}

}  // namespace

MultiPoly::MultiPoly(long c) {
  if (c != 0) terms_.push_back({0, mpz_class(c)});
}

MultiPoly::MultiPoly(const mpz_class& c) {
  if (c != 0) terms_.push_back({0, c});
}

MultiPoly MultiPoly::variable(Var v, int power) {
  Exps e{};
  e[v] = power;
  return monomial(1, e);
}

MultiPoly MultiPoly::monomial(const mpz_class& c, const Exps& e) {
  MultiPoly p;
  if (c != 0) p.terms_.push_back({pack(e), c});
  return p;
}

MultiPoly MultiPoly::from_terms(std::vector<Term> terms) {
  MultiPoly p;
  p.terms_ = std::move(terms);
  p.normalize();
  return p;
}

MultiPoly::Key MultiPoly::pack(const Exps& e) {
  Key k = 0;
  for (int v = 0; v < kVars; ++v) {
    if (e[v] < 0 || e[v] > kMaxExp) throw std::invalid_argument("MultiPoly: exponent out of range");
    k |= static_cast<Key>(e[v]) << shift(static_cast<Var>(v));
  }
  return k;
}

MultiPoly::Exps MultiPoly::unpack(Key k) {
  Exps e{};
  for (int v = 0; v < kVars; ++v) e[v] = exponent(k, static_cast<Var>(v));
  return e;
}

const char* MultiPoly::name(Var v) {
  static const char* names[kVars] = {"x", "y", "t", "a", "b", "qa", "qb"};
  return names[v];
}

void MultiPoly::normalize() {
  std::sort(terms_.begin(), terms_.end(), [](const Term& p, const Term& q) { return p.key > q.key; });
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (auto& t : terms_) {
    if (!out.empty() && out.back().key == t.key)
      out.back().coef += t.coef;
    else
      out.push_back(std::move(t));
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0; });
  terms_ = std::move(out);
}

int MultiPoly::degree(Var v) const {
  int d = -1;
  for (const auto& t : terms_) d = std::max(d, exponent(t.key, v));
  return d;
}

int MultiPoly::min_degree(Var v) const {
  if (terms_.empty()) return -1;
  int d = kMaxExp;
  for (const auto& t : terms_) d = std::min(d, exponent(t.key, v));
  return d;
}

mpz_class MultiPoly::coefficient_of(const Exps& e) const {
  const Key k = pack(e);
  for (const auto& t : terms_)
    if (t.key == k) return t.coef;
  return 0;
}

MultiPoly MultiPoly::operator-() const {
  MultiPoly p = *this;
  for (auto& t : p.terms_) t.coef = -t.coef;
  return p;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
  std::vector<Term> out;
  out.reserve(terms_.size() + o.terms_.size());
  std::size_t i = 0, j = 0;
  while (i < terms_.size() || j < o.terms_.size()) {
    if (j == o.terms_.size() || (i < terms_.size() && terms_[i].key > o.terms_[j].key)) {
      out.push_back(std::move(terms_[i++]));
    } else if (i == terms_.size() || o.terms_[j].key > terms_[i].key) {
      out.push_back(o.terms_[j++]);
    } else {
      mpz_class c = terms_[i].coef + o.terms_[j].coef;
      if (c != 0) out.push_back({terms_[i].key, std::move(c)});
      ++i;
      ++j;
    }
  }
  terms_ = std::move(out);
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o) { return *this += -o; }

MultiPoly operator*(const MultiPoly& p, const MultiPoly& q) {
  if (p.is_zero() || q.is_zero()) return {};
  for (int v = 0; v < MultiPoly::kVars; ++v) {
    const auto var = static_cast<MultiPoly::Var>(v);
    if (p.degree(var) + q.degree(var) > MultiPoly::kMaxExp)
      throw std::overflow_error("MultiPoly: product degree exceeds the packed exponent range");
  }
  if (p.size() == 1 || q.size() == 1) {
    const MultiPoly& one = p.size() == 1 ? p : q;
    const MultiPoly& other = p.size() == 1 ? q : p;
    MultiPoly r;
    r.terms_.reserve(other.size());
    for (const auto& t : other.terms_) r.terms_.push_back({t.key + one.terms_[0].key, t.coef * one.terms_[0].coef});
    return r;  // adding a fixed key keeps the order
  }
  std::unordered_map<MultiPoly::Key, mpz_class> acc;
  acc.reserve(std::min<std::size_t>(p.size() * q.size(), 1u << 22));
  for (const auto& a : p.terms_)
    for (const auto& b : q.terms_) {
      mpz_class& c = acc[a.key + b.key];
      mpz_addmul(c.get_mpz_t(), a.coef.get_mpz_t(), b.coef.get_mpz_t());
    }
  std::vector<MultiPoly::Term> terms;
  terms.reserve(acc.size());
  for (auto& [k, c] : acc)
    if (c != 0) terms.push_back({k, std::move(c)});
  return MultiPoly::from_terms(std::move(terms));
}

MultiPoly operator*(const mpz_class& c, const MultiPoly& p) {
  if (c == 0) return {};
  MultiPoly r = p;
  for (auto& t : r.terms_) t.coef *= c;
  return r;
}

bool MultiPoly::operator==(const MultiPoly& o) const {
  if (terms_.size() != o.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (terms_[i].key != o.terms_[i].key || terms_[i].coef != o.terms_[i].coef) return false;
  return true;
}

MultiPoly MultiPoly::pow(unsigned e) const {
  MultiPoly result(1), base = *this;
  while (e) {
    if (e & 1u) result = result * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return result;
}

MultiPoly MultiPoly::coefficient(Var v, int k) const {
  std::vector<Term> out;
  const Key clear = ~(kFieldMask << shift(v));
  for (const auto& t : terms_)
    if (exponent(t.key, v) == k) out.push_back({t.key & clear, t.coef});
  return from_terms(std::move(out));
}

MultiPoly MultiPoly::shift_var(Var v, int k) const {
  MultiPoly r = *this;
  for (auto& t : r.terms_) {
    const int e = exponent(t.key, v) + k;
    if (e < 0) throw DivisionError(std::string("MultiPoly: not divisible by ") + name(v), *this);
    if (e > kMaxExp) throw std::overflow_error("MultiPoly: exponent overflow");
    t.key = (t.key & ~(kFieldMask << shift(v))) | static_cast<Key>(e) << shift(v);
  }
  return r;
}

MultiPoly MultiPoly::substitute(Var v, const MultiPoly& q) const {
  if (q.degree(v) > 0) throw std::invalid_argument("substitute: replacement must not involve the variable");
  const int dv = degree(v);
  if (dv < 0) return {};
  std::vector<MultiPoly> powers{MultiPoly(1)};
  for (int e = 1; e <= dv; ++e) powers.push_back(powers.back() * q);
  MultiPoly r;
  for (int e = 0; e <= dv; ++e) {
    const MultiPoly c = coefficient(v, e);
    if (!c.is_zero()) r += c * powers[e];
  }
  return r;
}

mpz_class MultiPoly::content() const {
  mpz_class g = 0;
  for (const auto& t : terms_) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), t.coef.get_mpz_t());
  if (!terms_.empty() && terms_[0].coef < 0) g = -g;
  return g;
}

int MultiPoly::coefficient_sign() const {
  if (terms_.empty()) return 0;
  const int s = sgn(terms_[0].coef);
  for (const auto& t : terms_)
    if (sgn(t.coef) != s) return 0;
  return s;
}

double MultiPoly::evaluate(const std::array<double, kVars>& at) const {
  long double s = 0;
  for (const auto& t : terms_) {
    long double m = t.coef.get_d();
    for (int v = 0; v < kVars; ++v) {
      const int e = exponent(t.key, static_cast<Var>(v));
      if (e) m *= std::pow(static_cast<long double>(at[v]), e);
    }
    s += m;
  }
  return static_cast<double>(s);
}

mpf_class MultiPoly::evaluate(const std::array<mpf_class, kVars>& at, mp_bitcnt_t prec) const {
  std::array<std::vector<mpf_class>, kVars> pw;
  for (int v = 0; v < kVars; ++v) {
    const int dv = std::max(0, degree(static_cast<Var>(v)));
    pw[v].assign(dv + 1, mpf_class(1, prec));
    for (int e = 1; e <= dv; ++e) pw[v][e] = pw[v][e - 1] * mpf_class(at[v], prec);
  }
  mpf_class s(0, prec);
  for (const auto& t : terms_) {
    mpf_class m(t.coef, prec);
    for (int v = 0; v < kVars; ++v) {
      const int e = exponent(t.key, static_cast<Var>(v));
      if (e) m *= pw[v][e];
    }
    s += m;
  }
  return s;
}

std::string MultiPoly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms_) {
    mpz_class c = t.coef;
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    c = abs(c);
    bool wrote = false;
    if (c != 1 || t.key == 0) {
      os << c.get_str();
      wrote = true;
    }
    for (int v = 0; v < kVars; ++v) {
      const int e = exponent(t.key, static_cast<Var>(v));
      if (!e) continue;
      if (wrote) os << "*";
      os << name(static_cast<Var>(v));
      if (e > 1) os << "^" << e;
      wrote = true;
    }
    first = false;
  }
  return os.str();
}

std::uint64_t MultiPoly::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_string()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

// Division by leading terms in lex order. Returns the quotient, or the partial remainder
// whose leading term is not divisible.
bool divide_impl(const MultiPoly& p, const MultiPoly& q, MultiPoly& quot, MultiPoly& rem) {
  if (q.is_zero()) throw std::invalid_argument("exact_divide: division by zero");
  std::map<MultiPoly::Key, mpz_class, std::greater<>> r;
  for (const auto& t : p.terms()) r.emplace(t.key, t.coef);
  const auto& lt = q.terms().front();
  std::vector<MultiPoly::Term> qt;
  while (!r.empty()) {
    const auto it = r.begin();
    if (!divides_key(lt.key, it->first) || !mpz_divisible_p(it->second.get_mpz_t(), lt.coef.get_mpz_t())) {
      std::vector<MultiPoly::Term> rt;
      for (auto& [k, c] : r) rt.push_back({k, c});
      rem = MultiPoly::from_terms(std::move(rt));
      return false;
    }
    const MultiPoly::Key mk = it->first - lt.key;
    mpz_class mc;
    mpz_divexact(mc.get_mpz_t(), it->second.get_mpz_t(), lt.coef.get_mpz_t());
    for (const auto& t : q.terms()) {
      const MultiPoly::Key k = t.key + mk;
      auto [pos, inserted] = r.try_emplace(k, 0);
      mpz_submul(pos->second.get_mpz_t(), mc.get_mpz_t(), t.coef.get_mpz_t());
      if (pos->second == 0) r.erase(pos);
    }
    qt.push_back({mk, std::move(mc)});
  }
  quot = MultiPoly::from_terms(std::move(qt));
  return true;
}

}  // namespace

std::optional<MultiPoly> try_divide(const MultiPoly& p, const MultiPoly& q) {
  MultiPoly quot, rem;
  if (!divide_impl(p, q, quot, rem)) return std::nullopt;
  return quot;
}

MultiPoly exact_divide(const MultiPoly& p, const MultiPoly& q) {
  MultiPoly quot, rem;
  if (!divide_impl(p, q, quot, rem))
    throw DivisionError("exact_divide: " + q.to_string() + " does not divide the dividend; remainder has " +
                            std::to_string(rem.size()) + " terms",
                        rem);
  return quot;
}

}  // namespace phasecrit
