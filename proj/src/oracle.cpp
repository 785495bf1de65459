#include "phasecrit/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "phasecrit/numeric.hpp"

namespace phasecrit {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

// ---------------------------------------------------------------------------
// instances

void EnumerationInstance::validate() const {
  if (left < 1 || right < 1) throw std::invalid_argument("instance: both sides need vertices");
  if (static_cast<int>(left_adj.size()) != left || static_cast<int>(left_clamp.size()) != left ||
      static_cast<int>(right_clamp.size()) != right)
    throw std::invalid_argument("instance: inconsistent sizes");
  for (const auto& nb : left_adj)
    for (int v : nb)
      if (v < 0 || v >= right) throw std::invalid_argument("instance: neighbour index out of range");
  for (int c : left_clamp)
    if (c < -1 || c > 1) throw std::invalid_argument("instance: clamp must be -1, 0 or +1");
  for (int c : right_clamp)
    if (c < -1 || c > 1) throw std::invalid_argument("instance: clamp must be -1, 0 or +1");
}

int EnumerationInstance::free_left() const {
  return static_cast<int>(std::count(left_clamp.begin(), left_clamp.end(), 0));
}
int EnumerationInstance::free_right() const {
  return static_cast<int>(std::count(right_clamp.begin(), right_clamp.end(), 0));
}

EnumerationInstance instance_from_graph(const BipartiteMultigraph& g) {
  g.validate();
  EnumerationInstance in;
  in.left = in.right = g.n;
  in.left_adj.assign(g.n, {});
  for (const auto& p : g.matchings)
    for (int i = 0; i < g.n; ++i) in.left_adj[i].push_back(p[i]);
  in.left_clamp.assign(g.n, 0);
  in.right_clamp.assign(g.n, 0);
  return in;
}

EnumerationInstance instance_from_gadget(const GadgetGraph& g, const std::vector<int>& eta) {
  const int mp = g.params.m_prime;
  if (static_cast<int>(eta.size()) != 2 * mp)
    throw std::invalid_argument("gadget: eta must assign a spin to each of the 2m' boundary vertices");
  for (int s : eta)
    if (s != 1 && s != -1) throw std::invalid_argument("gadget: eta spins must be +1 or -1");
  EnumerationInstance in;
  in.left = in.right = g.side;
  in.left_adj.assign(g.side, {});
  for (const auto& p : g.matchings)
    for (int i = 0; i < g.side; ++i) in.left_adj[i].push_back(p[i]);
  for (int i = 0; i < g.n; ++i) in.left_adj[i].push_back(g.w_matching[i]);
  in.left_clamp.assign(g.side, 0);
  in.right_clamp.assign(g.side, 0);
  for (int i = 0; i < mp; ++i) {
    in.left_clamp[g.n + i] = eta[i];
    in.right_clamp[g.n + i] = eta[mp + i];
  }
  return in;
}

std::vector<int> eta_from_counts(int mp, int minus1, int minus2) {
  if (minus1 < 0 || minus2 < 0 || minus1 > mp || minus2 > mp)
    throw std::invalid_argument("eta_from_counts: counts out of range");
  std::vector<int> eta(2 * mp, 1);
  for (int i = 0; i < minus1; ++i) eta[i] = -1;
  for (int i = 0; i < minus2; ++i) eta[mp + i] = -1;
  return eta;
}

int configure_threads_from_env() {
  if (const char* s = std::getenv("PHASECRIT_THREADS")) {
    const int t = std::atoi(s);
    if (t >= 1) omp_set_num_threads(t);
  }
  return omp_get_max_threads();
}

// ---------------------------------------------------------------------------
// summaries

double GibbsSummary::table_logsum() const {
  LogSum s;
  for (const auto& row : log_table)
    for (double v : row) s.add(v);
  return s.value();
}

double GibbsSummary::log_mu_balanced() const {
  if (n_left != n_right) throw std::invalid_argument("balanced mass needs equal free side sizes");
  LogSum s;
  for (int a = 0; a <= n_left; ++a) s.add(log_table[a][a]);
  return s.value() - logZ;
}

double GibbsSummary::log_mu_unbalanced(double rho) const {
  LogSum s;
  for (int a = 0; a <= n_left; ++a)
    for (int b = 0; b <= n_right; ++b)
      if (std::abs(a - b) >= rho * n_left - 1e-9) s.add(log_table[a][b]);
  return s.value() - logZ;
}

namespace {

void finish_summary(GibbsSummary& s) {
  double best = kNegInf;
  for (int a = 0; a <= s.n_left; ++a)
    for (int b = 0; b <= s.n_right; ++b)
      if (s.log_table[a][b] > best) {
        best = s.log_table[a][b];
        s.dominant_a = a;
        s.dominant_b = b;
      }
}

// Log coefficients of prod over factors of (u t + w)^h; lu or lw may be -inf.
void poly_mul_power(std::vector<double>& p, double lu, double lw, int h) {
  if (h == 0) return;
  std::vector<double> q(h + 1, kNegInf);
  for (int j = 0; j <= h; ++j) {
    const double tu = j == 0 ? 0.0 : (lu == kNegInf ? kNegInf : j * lu);
    const double tw = j == h ? 0.0 : (lw == kNegInf ? kNegInf : (h - j) * lw);
    q[j] = log_choose(h, j) + tu + tw;
  }
  std::vector<double> r(p.size() + h, kNegInf);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == kNegInf) continue;
    for (int j = 0; j <= h; ++j) {
      if (q[j] == kNegInf) continue;
      const double v = p[i] + q[j];
      double& t = r[i + j];
      if (t == kNegInf)
        t = v;
      else
        t = std::max(t, v) + std::log1p(std::exp(-std::abs(t - v)));
    }
  }
  p.swap(r);
}

struct ModelLogs {
  double ll, l1, l2;
};

// Serial reference: direct evaluation for every assignment of the free left vertices.
GibbsSummary enumerate_serial(const EnumerationInstance& in, const SpinModel& m, bool with_table) {
  const ModelLogs ml{std::log(m.lambda), safe_log(m.b1), std::log(m.b2)};
  std::vector<int> free_left, deg(in.right, 0);
  int clamped_minus_left = 0;
  for (int i = 0; i < in.left; ++i) {
    if (in.left_clamp[i] == 0) free_left.push_back(i);
    clamped_minus_left += in.left_clamp[i] == -1;
    for (int v : in.left_adj[i]) ++deg[v];
  }
  const int nf = static_cast<int>(free_left.size()), nr = in.free_right();
  GibbsSummary s;
  s.n_left = nf;
  s.n_right = nr;
  std::vector<LogSum> cells((nf + 1) * (nr + 1));
  LogSum total;
  std::vector<int> c(in.right);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nf); ++mask) {
    std::fill(c.begin(), c.end(), 0);
    int a = 0;
    for (int i = 0; i < in.left; ++i) {
      bool minus = in.left_clamp[i] == -1;
      if (in.left_clamp[i] == 0) {
        const int idx = static_cast<int>(std::find(free_left.begin(), free_left.end(), i) - free_left.begin());
        minus = mask >> idx & 1u;
        a += minus;
      }
      if (minus)
        for (int v : in.left_adj[i]) ++c[v];
    }
    const double base = (a + clamped_minus_left) * ml.ll;
    std::vector<double> poly{0.0};
    double scalar = 0.0;
    for (int v = 0; v < in.right; ++v) {
      const double lm = ml.ll + (c[v] == 0 ? 0.0 : c[v] * ml.l1);  // v at -1
      const double lp = (deg[v] - c[v]) == 0 ? 0.0 : (deg[v] - c[v]) * ml.l2;  // v at +1
      if (in.right_clamp[v] == -1) {
        scalar += lm;
      } else if (in.right_clamp[v] == 1) {
        scalar += lp;
      } else if (with_table) {
        poly_mul_power(poly, lm, lp, 1);
      } else {
        scalar += lm == kNegInf ? lp : std::max(lm, lp) + std::log1p(std::exp(-std::abs(lm - lp)));
      }
    }
    if (with_table) {
      for (int b = 0; b <= nr; ++b) {
        const double v = base + scalar + poly[b];
        cells[a * (nr + 1) + b].add(v);
        total.add(v);
      }
    } else {
      total.add(base + scalar);
    }
  }
  s.logZ = total.value();
  if (with_table) {
    s.log_table.assign(nf + 1, std::vector<double>(nr + 1, kNegInf));
    for (int a = 0; a <= nf; ++a)
      for (int b = 0; b <= nr; ++b) s.log_table[a][b] = cells[a * (nr + 1) + b].value();
    finish_summary(s);
  }
  return s;
}

// Right vertices are grouped into classes (degree, clamp). The state of a left assignment
// that matters is the histogram of minus-neighbour counts per class, plus the left minus
// count. The histogram is tracked as a mixed-radix key updated incrementally.
struct Layout {
  struct Type {
    int deg, clamp, count;
  };
  std::vector<Type> types;
  std::vector<int> type_of;
  std::vector<int> init_c;
  std::vector<std::size_t> w_off;  // per right vertex into w_flat
  std::vector<std::uint64_t> w_flat;
  struct Slot {
    int type, c;
    std::uint64_t radix;
  };
  std::vector<Slot> slots;  // in key order
  std::uint64_t hist_space = 1;
  std::vector<int> free_left;
  std::vector<std::vector<int>> adj;  // per free left index
  int clamped_minus_left = 0;
};

Layout make_layout(const EnumerationInstance& in) {
  Layout L;
  std::vector<int> deg(in.right, 0);
  L.init_c.assign(in.right, 0);
  for (int i = 0; i < in.left; ++i) {
    for (int v : in.left_adj[i]) {
      ++deg[v];
      if (in.left_clamp[i] == -1) ++L.init_c[v];
    }
    if (in.left_clamp[i] == 0) {
      L.free_left.push_back(i);
      L.adj.push_back(in.left_adj[i]);
    }
    L.clamped_minus_left += in.left_clamp[i] == -1;
  }
  L.type_of.assign(in.right, -1);
  for (int v = 0; v < in.right; ++v) {
    int t = 0;
    for (; t < static_cast<int>(L.types.size()); ++t)
      if (L.types[t].deg == deg[v] && L.types[t].clamp == in.right_clamp[v]) break;
    if (t == static_cast<int>(L.types.size())) L.types.push_back({deg[v], in.right_clamp[v], 0});
    ++L.types[t].count;
    L.type_of[v] = t;
  }
  // The last count (c = deg) of each class is implied by the class size and gets no slot.
  std::vector<std::vector<std::uint64_t>> mult(L.types.size());
  for (int t = 0; t < static_cast<int>(L.types.size()); ++t) {
    mult[t].assign(L.types[t].deg + 1, 0);
    for (int c = 0; c < L.types[t].deg; ++c) {
      const std::uint64_t radix = static_cast<std::uint64_t>(L.types[t].count) + 1;
      mult[t][c] = L.hist_space;
      L.slots.push_back({t, c, radix});
      if (L.hist_space > (std::uint64_t{1} << 62) / radix)
        throw std::invalid_argument("enumeration: histogram key space too large");
      L.hist_space *= radix;
    }
  }
  for (int v = 0; v < in.right; ++v) {
    L.w_off.push_back(L.w_flat.size());
    const auto& mt = mult[L.type_of[v]];
    L.w_flat.insert(L.w_flat.end(), mt.begin(), mt.end());
  }
  return L;
}

class CountStore {
 public:
  CountStore(std::uint64_t space, bool dense) : dense_(dense) {
    if (dense_) d_.assign(space, 0);
  }
  void add(std::uint64_t k, std::uint64_t c = 1) {
    if (dense_)
      d_[k] += c;
    else
      m_[k] += c;
  }
  void merge(const CountStore& o) {
    if (dense_)
      for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
    else
      for (const auto& [k, c] : o.m_) m_[k] += c;
  }
  template <class F>
  void for_each(F&& f) const {
    if (dense_) {
      for (std::size_t i = 0; i < d_.size(); ++i)
        if (d_[i]) f(static_cast<std::uint64_t>(i), d_[i]);
    } else {
      for (const auto& [k, c] : m_) f(k, c);
    }
  }

 private:
  bool dense_;
  std::vector<std::uint64_t> d_;
  std::unordered_map<std::uint64_t, std::uint64_t> m_;
};

GibbsSummary enumerate_parallel(const EnumerationInstance& in, const SpinModel& m, bool with_table) {
  const Layout L = make_layout(in);
  const int nf = static_cast<int>(L.free_left.size()), nr = in.free_right();
  const std::uint64_t A = static_cast<std::uint64_t>(nf) + 1;
  if (L.hist_space > (std::uint64_t{1} << 62) / A) throw std::invalid_argument("enumeration: key space too large");
  const std::uint64_t space = L.hist_space * A;
  const bool dense = space <= (std::uint64_t{1} << 22);
  const int prefix = std::min(nf, 8);
  const int low = nf - prefix;
  const std::int64_t blocks = std::int64_t{1} << prefix;

  CountStore total(space, dense);
#pragma omp parallel
  {
    CountStore local(space, dense);
    std::vector<int> c(in.right);
    std::vector<char> minus(nf);
#pragma omp for schedule(dynamic)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
      c = L.init_c;
      int a = 0;
      for (int i = 0; i < nf; ++i) {
        minus[i] = i >= low && (blk >> (i - low) & 1);
        if (minus[i]) {
          ++a;
          for (int v : L.adj[i]) ++c[v];
        }
      }
      std::uint64_t key = 0;
      for (int v = 0; v < in.right; ++v) key += L.w_flat[L.w_off[v] + c[v]];
      local.add(key * A + a);
      const std::uint64_t steps = std::uint64_t{1} << low;
      for (std::uint64_t s = 1; s < steps; ++s) {
        const int bit = std::countr_zero(s);
        minus[bit] ^= 1;
        const int dir = minus[bit] ? 1 : -1;
        for (int v : L.adj[bit]) {
          const std::uint64_t* w = &L.w_flat[L.w_off[v]];
          key += w[c[v] + dir] - w[c[v]];
          c[v] += dir;
        }
        a += dir;
        local.add(key * A + a);
      }
    }
#pragma omp critical
    total.merge(local);
  }

  // Evaluate the weight of every histogram once.
  const ModelLogs ml{std::log(m.lambda), safe_log(m.b1), std::log(m.b2)};
  GibbsSummary s;
  s.n_left = nf;
  s.n_right = nr;
  std::vector<LogSum> cells(with_table ? (nf + 1) * (nr + 1) : 0);
  LogSum logz;
  std::uint64_t cached_hist = ~std::uint64_t{0};
  std::vector<double> poly;
  double scalar = 0.0;
  std::vector<std::vector<int>> h(L.types.size());
  total.for_each([&](std::uint64_t key, std::uint64_t count) {
    const std::uint64_t hist = key / A;
    const int a = static_cast<int>(key % A);
    if (hist != cached_hist) {
      cached_hist = hist;
      for (std::size_t t = 0; t < L.types.size(); ++t) h[t].assign(L.types[t].deg + 1, 0);
      std::uint64_t rest = hist;
      for (const auto& sl : L.slots) {
        h[sl.type][sl.c] = static_cast<int>(rest % sl.radix);
        rest /= sl.radix;
      }
      for (std::size_t t = 0; t < L.types.size(); ++t) {
        int used = 0;
        for (int cc = 0; cc < L.types[t].deg; ++cc) used += h[t][cc];
        h[t][L.types[t].deg] = L.types[t].count - used;
      }
      poly.assign(1, 0.0);
      scalar = 0.0;
      for (std::size_t t = 0; t < L.types.size(); ++t) {
        const int dg = L.types[t].deg;
        for (int cc = 0; cc <= dg; ++cc) {
          const int k = h[t][cc];
          if (k == 0) continue;
          const double lm = ml.ll + (cc == 0 ? 0.0 : cc * ml.l1);
          const double lp = dg - cc == 0 ? 0.0 : (dg - cc) * ml.l2;
          if (L.types[t].clamp == -1) {
            scalar += k * lm;
          } else if (L.types[t].clamp == 1) {
            scalar += k * lp;
          } else if (with_table) {
            poly_mul_power(poly, lm, lp, k);
          } else {
            const double both = lm == kNegInf ? lp : std::max(lm, lp) + std::log1p(std::exp(-std::abs(lm - lp)));
            scalar += k * both;
          }
        }
      }
    }
    const double base = std::log(static_cast<double>(count)) + (a + L.clamped_minus_left) * ml.ll + scalar;
    if (with_table) {
      for (int b = 0; b <= nr; ++b) {
        const double v = base + poly[b];
        cells[a * (nr + 1) + b].add(v);
        logz.add(v);
      }
    } else {
      logz.add(base);
    }
  });
  s.logZ = logz.value();
  if (with_table) {
    s.log_table.assign(nf + 1, std::vector<double>(nr + 1, kNegInf));
    for (int a = 0; a <= nf; ++a)
      for (int b = 0; b <= nr; ++b) s.log_table[a][b] = cells[a * (nr + 1) + b].value();
    finish_summary(s);
  }
  return s;
}

}  // namespace

GibbsSummary enumerate_instance(const EnumerationInstance& in, const SpinModel& m, Engine engine, bool with_table) {
  m.validate(1);
  in.validate();
  if (in.free_left() > 30) throw std::invalid_argument("enumeration: more than 30 free left vertices");
  return engine == Engine::Serial ? enumerate_serial(in, m, with_table) : enumerate_parallel(in, m, with_table);
}

double partition_function(const BipartiteMultigraph& g, const SpinModel& m, Engine engine) {
  if (g.n > 24) throw std::invalid_argument("partition_function: n > 24 per side");
  return enumerate_instance(instance_from_graph(g), m, engine, false).logZ;
}

GibbsSummary z_alpha_beta_table(const BipartiteMultigraph& g, const SpinModel& m, Engine engine) {
  if (g.n > 20) throw std::invalid_argument("z_alpha_beta_table: n > 20 per side");
  return enumerate_instance(instance_from_graph(g), m, engine, true);
}

GibbsSummary gadget_conditional_Z(const GadgetGraph& g, const SpinModel& m, const std::vector<int>& eta,
                                  Engine engine) {
  if (g.side > 18) throw std::invalid_argument("gadget_conditional_Z: n + m' > 18 per side");
  return enumerate_instance(instance_from_gadget(g, eta), m, engine, true);
}

double brute_force_logZ(const EnumerationInstance& in, const SpinModel& m) {
  in.validate();
  const int V = in.left + in.right;
  if (V > 26) throw std::invalid_argument("brute_force_logZ: instance too large");
  LogSum s;
  const double ll = std::log(m.lambda), l1 = safe_log(m.b1), l2 = std::log(m.b2);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << V); ++mask) {
    auto spin_minus = [&](int v) { return (mask >> v & 1u) != 0; };
    bool ok = true;
    for (int i = 0; i < in.left && ok; ++i)
      if (in.left_clamp[i] != 0 && spin_minus(i) != (in.left_clamp[i] == -1)) ok = false;
    for (int j = 0; j < in.right && ok; ++j)
      if (in.right_clamp[j] != 0 && spin_minus(in.left + j) != (in.right_clamp[j] == -1)) ok = false;
    if (!ok) continue;
    double w = 0.0;
    for (int v = 0; v < V; ++v) w += spin_minus(v) ? ll : 0.0;
    for (int i = 0; i < in.left; ++i)
      for (int j : in.left_adj[i]) {
        const bool x = spin_minus(i), y = spin_minus(in.left + j);
        if (x && y) w += l1;
        if (!x && !y) w += l2;
      }
    s.add(w);
  }
  return s.value();
}

BimodalityReport bimodality_report(const GibbsSummary& s, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("bimodality_report: rho must lie in (0,1)");
  if (s.log_table.empty()) throw std::invalid_argument("bimodality_report: summary has no table");
  BimodalityReport r;
  r.rho = rho;
  r.log_mu_bal = s.log_mu_balanced();
  r.log_mu_rho = s.log_mu_unbalanced(rho);
  r.mu_bal = std::exp(r.log_mu_bal);
  r.mu_rho = std::exp(r.log_mu_rho);
  r.log_ratio = r.log_mu_bal - r.log_mu_rho;
  r.ratio = std::exp(r.log_ratio);
  return r;
}

// ---------------------------------------------------------------------------
// pair overlaps

PairOverlapTable pair_overlap_statistics(const BipartiteMultigraph& g, const SpinModel& m, int a, int b) {
  g.validate();
  m.validate(1);
  const int n = g.n;
  if (n > 10) throw std::invalid_argument("pair_overlap_statistics: n > 10 per side");
  if (a < 0 || a > n || b < 0 || b > n) throw std::invalid_argument("pair_overlap_statistics: bad counts");
  const int D = g.delta;
  // right vertex -> left neighbours with multiplicity
  std::vector<std::vector<int>> radj(n);
  for (const auto& p : g.matchings)
    for (int i = 0; i < n; ++i) radj[p[i]].push_back(i);
  // factor for a right vertex with k minus neighbours: spin - gives lambda b1^k, spin + gives b2^(D-k)
  std::vector<double> fm(D + 1), fp(D + 1);
  for (int k = 0; k <= D; ++k) {
    fm[k] = m.lambda * std::pow(m.b1, k);
    fp[k] = std::pow(m.b2, D - k);
  }
  std::vector<unsigned> subsets;
  for (unsigned s = 0; s < (1u << n); ++s)
    if (std::popcount(s) == a) subsets.push_back(s);

  const int B = b + 1;
  std::vector<double> acc((a + 1) * B, 0.0);
  std::vector<double> dp(B * B * B), nx(B * B * B);
  const double left_w = std::pow(m.lambda, 2 * a);
  for (unsigned s1 : subsets)
    for (unsigned s2 : subsets) {
      std::fill(dp.begin(), dp.end(), 0.0);
      dp[0] = 1.0;
      for (int v = 0; v < n; ++v) {
        int k1 = 0, k2 = 0;
        for (int u : radj[v]) {
          k1 += s1 >> u & 1u;
          k2 += s2 >> u & 1u;
        }
        const double f[2][2] = {{fm[k1] * fm[k2], fm[k1] * fp[k2]}, {fp[k1] * fm[k2], fp[k1] * fp[k2]}};
        std::fill(nx.begin(), nx.end(), 0.0);
        for (int c1 = 0; c1 < B; ++c1)
          for (int c2 = 0; c2 < B; ++c2)
            for (int c12 = 0; c12 <= std::min(c1, c2); ++c12) {
              const double w = dp[(c1 * B + c2) * B + c12];
              if (w == 0.0) continue;
              for (int t1 = 0; t1 < 2; ++t1)
                for (int t2 = 0; t2 < 2; ++t2) {
                  // t = 0 means spin -1
                  const int n1 = c1 + (t1 == 0), n2 = c2 + (t2 == 0), n12 = c12 + (t1 == 0 && t2 == 0);
                  if (n1 > b || n2 > b) continue;
                  nx[(n1 * B + n2) * B + n12] += w * f[t1][t2];
                }
            }
        dp.swap(nx);
      }
      const int gov = std::popcount(s1 & s2);
      for (int dl = 0; dl <= b; ++dl) acc[gov * B + dl] += left_w * dp[(b * B + b) * B + dl];
    }
  PairOverlapTable t;
  t.n = n;
  t.a = a;
  t.b = b;
  t.log_table.assign(a + 1, std::vector<double>(b + 1, kNegInf));
  for (int gov = 0; gov <= a; ++gov)
    for (int dl = 0; dl <= b; ++dl) t.log_table[gov][dl] = safe_log(acc[gov * B + dl]);
  return t;
}

PairOverlapTable pair_overlap_brute_force(const BipartiteMultigraph& g, const SpinModel& m, int a, int b) {
  g.validate();
  const int n = g.n;
  if (n > 8) throw std::invalid_argument("pair_overlap_brute_force: n > 8");
  struct Conf {
    unsigned l, r;
    double w;
  };
  std::vector<Conf> confs;
  for (unsigned l = 0; l < (1u << n); ++l) {
    if (std::popcount(l) != a) continue;
    for (unsigned r = 0; r < (1u << n); ++r) {
      if (std::popcount(r) != b) continue;
      double w = std::pow(m.lambda, a + b);
      for (const auto& p : g.matchings)
        for (int i = 0; i < n; ++i) {
          const bool x = l >> i & 1u, y = r >> p[i] & 1u;
          if (x && y) w *= m.b1;
          if (!x && !y) w *= m.b2;
        }
      confs.push_back({l, r, w});
    }
  }
  std::vector<std::vector<double>> acc(a + 1, std::vector<double>(b + 1, 0.0));
  for (const auto& x : confs)
    for (const auto& y : confs) acc[std::popcount(x.l & y.l)][std::popcount(x.r & y.r)] += x.w * y.w;
  PairOverlapTable t;
  t.n = n;
  t.a = a;
  t.b = b;
  t.log_table.assign(a + 1, std::vector<double>(b + 1, kNegInf));
  for (int i = 0; i <= a; ++i)
    for (int j = 0; j <= b; ++j) t.log_table[i][j] = safe_log(acc[i][j]);
  return t;
}

// ---------------------------------------------------------------------------
// Glauber dynamics

GlauberResult glauber_run(const BipartiteMultigraph& g, const SpinModel& m, long steps, std::uint64_t seed,
                          double rho, bool record_trace) {
  g.validate();
  m.validate(1);
  if (steps < 1) throw std::invalid_argument("glauber_run: steps must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("glauber_run: rho must lie in [0, 1)");
  const int n = g.n, V = 2 * n;
  // A phase is entered only once |m1 - m2| reaches thr, so jitter around balance is not a flip.
  const int thr = std::max(1, static_cast<int>(std::ceil(rho * n - 1e-9)));
  std::vector<std::vector<int>> adj(V);
  for (const auto& p : g.matchings)
    for (int i = 0; i < n; ++i) {
      adj[i].push_back(n + p[i]);
      adj[n + p[i]].push_back(i);
    }
  int maxdeg = 0;
  for (const auto& a : adj) maxdeg = std::max<int>(maxdeg, static_cast<int>(a.size()));
  // p_minus[deg][k]: heat-bath probability of spin -1 given k minus neighbours
  std::vector<std::vector<double>> pm(maxdeg + 1);
  for (int dg = 0; dg <= maxdeg; ++dg)
    for (int k = 0; k <= dg; ++k) {
      const double wm = m.lambda * std::pow(m.b1, k), wp = std::pow(m.b2, dg - k);
      pm[dg].push_back(wm / (wm + wp));
    }

  Rng rng(seed);
  std::vector<int> s(V);
  int m1 = 0, m2 = 0;
  for (int v = 0; v < V; ++v) {
    s[v] = uniform01(rng) < 0.5 ? -1 : 1;
    if (s[v] == -1) (v < n ? m1 : m2)++;
  }
  GlauberResult r;
  r.steps = steps;
  std::vector<long> last_change(V, 0);
  std::vector<double> minus_time(V, 0.0);
  auto sgn = [thr](int x) { return (x >= thr) - (x <= -thr); };
  int last_sign = sgn(m1 - m2);
  long last_flip = 0, balanced = 0;
  if (record_trace) r.sign_trace.reserve(steps);
  for (long t = 1; t <= steps; ++t) {
    const int v = static_cast<int>(uniform_below(rng, V));
    int k = 0;
    for (int u : adj[v]) k += s[u] == -1;
    const int ns = uniform01(rng) < pm[adj[v].size()][k] ? -1 : 1;
    if (ns != s[v]) {
      if (s[v] == -1) minus_time[v] += t - last_change[v];
      last_change[v] = t;
      const int d = ns == -1 ? 1 : -1;
      (v < n ? m1 : m2) += d;
      s[v] = ns;
    }
    const int cur = sgn(m1 - m2);
    if (cur != 0) {
      if (last_sign != 0 && cur != last_sign) {
        r.waiting_times.push_back(t - last_flip);
        last_flip = t;
        ++r.sign_changes;
      }
      last_sign = cur;
    }
    balanced += std::abs(m1 - m2) <= 1;
    if (record_trace) r.sign_trace.push_back(static_cast<std::int8_t>(cur));
  }
  r.minus_frequency.resize(V);
  for (int v = 0; v < V; ++v) {
    if (s[v] == -1) minus_time[v] += steps - last_change[v];
    r.minus_frequency[v] = minus_time[v] / static_cast<double>(steps);
  }
  r.balanced_fraction = static_cast<double>(balanced) / steps;
  r.final_state = s;
  if (r.waiting_times.empty()) {
    r.censored = true;
    r.median_wait = static_cast<double>(steps);
  } else {
    std::vector<long> w = r.waiting_times;
    std::sort(w.begin(), w.end());
    const std::size_t k = w.size();
    r.median_wait = k % 2 ? w[k / 2] : 0.5 * (w[k / 2 - 1] + w[k / 2]);
  }
  return r;
}

std::vector<double> exact_minus_marginals(const BipartiteMultigraph& g, const SpinModel& m) {
  g.validate();
  const int n = g.n, V = 2 * n;
  if (V > 20) throw std::invalid_argument("exact_minus_marginals: n > 10");
  const double ll = std::log(m.lambda), l1 = safe_log(m.b1), l2 = std::log(m.b2);
  std::vector<LogSum> per(V);
  LogSum total;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << V); ++mask) {
    double w = std::popcount(mask) * ll;
    for (const auto& p : g.matchings)
      for (int i = 0; i < n; ++i) {
        const bool x = mask >> i & 1u, y = mask >> (n + p[i]) & 1u;
        if (x && y) w += l1;
        if (!x && !y) w += l2;
      }
    total.add(w);
    for (int v = 0; v < V; ++v)
      if (mask >> v & 1u) per[v].add(w);
  }
  std::vector<double> out(V);
  for (int v = 0; v < V; ++v) out[v] = std::exp(per[v].value() - total.value());
  return out;
}

}  // namespace phasecrit
