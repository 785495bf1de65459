#include "phasecrit/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace phasecrit {

std::uint64_t uniform_below(Rng& rng, std::uint64_t k) {
  if (k == 0) throw std::invalid_argument("uniform_below: empty range");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % k;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % k;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<int> sample_permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[uniform_below(rng, static_cast<std::uint64_t>(i) + 1)]);
  return p;
}

void BipartiteMultigraph::validate() const {
  if (n < 1 || delta < 0) throw std::invalid_argument("graph: n must be >= 1");
  if (static_cast<int>(matchings.size()) != delta) throw std::invalid_argument("graph: wrong number of matchings");
  for (const auto& p : matchings) {
    if (static_cast<int>(p.size()) != n) throw std::invalid_argument("graph: matching has wrong size");
    std::vector<char> seen(n, 0);
    for (int v : p) {
      if (v < 0 || v >= n || seen[v]) throw std::invalid_argument("graph: matching is not a permutation");
      seen[v] = 1;
    }
  }
}

BipartiteMultigraph sample_bipartite_regular(int n, int delta, Rng& rng) {
  if (n < 1 || delta < 1) throw std::invalid_argument("sample_bipartite_regular: needs n >= 1, delta >= 1");
  BipartiteMultigraph g;
  g.n = n;
  g.delta = delta;
  for (int k = 0; k < delta; ++k) g.matchings.push_back(sample_permutation(n, rng));
  return g;
}

BipartiteMultigraph sample_bipartite_regular(int n, int delta, std::uint64_t seed) {
  Rng rng(seed);
  return sample_bipartite_regular(n, delta, rng);
}

std::vector<std::uint64_t> count_cycles(const BipartiteMultigraph& g, int max_len) {
  if (max_len > 12) throw std::invalid_argument("count_cycles: max_len is limited to 12");
  g.validate();
  std::vector<std::uint64_t> X(std::max(max_len, 0) + 1, 0);
  if (max_len < 2) return X;
  const int V = 2 * g.n;
  // adjacency: (neighbour, edge id)
  std::vector<std::vector<std::pair<int, int>>> adj(V);
  for (int k = 0; k < g.delta; ++k)
    for (int i = 0; i < g.n; ++i) {
      const int e = k * g.n + i, u = i, v = g.n + g.matchings[k][i];
      adj[u].push_back({v, e});
      adj[v].push_back({u, e});
    }
  // Each cycle is rooted at its smallest vertex and found once per orientation.
  std::vector<char> on_path(V, 0);
  std::vector<std::uint64_t> twice(max_len + 1, 0);
  int root = 0, first_edge = -1;
  auto dfs = [&](auto&& self, int v, int last_edge, int len) -> void {
    for (const auto& [w, e] : adj[v]) {
      if (e == last_edge) continue;
      if (w == root) {
        if (len >= 1 && e != first_edge) ++twice[len + 1];
        continue;
      }
      if (w < root || on_path[w] || len + 1 >= max_len) continue;
      on_path[w] = 1;
      if (len == 0) first_edge = e;
      self(self, w, e, len + 1);
      on_path[w] = 0;
    }
  };
  for (root = 0; root < V; ++root) {
    on_path[root] = 1;
    dfs(dfs, root, -1, 0);
    on_path[root] = 0;
  }
  for (int i = 2; i <= max_len; ++i) X[i] = twice[i] / 2;
  return X;
}

double expected_cycle_rate(int delta, int i) {
  if (i < 2) throw std::invalid_argument("expected_cycle_rate: i must be >= 2");
  const double r = std::pow(delta - 1.0, i) + (i % 2 == 0 ? 1.0 : -1.0) * (delta - 1.0);
  return r / i;
}

GadgetParams gadget_params(int n, int delta, double theta, double psi) {
  if (delta < 3) throw std::invalid_argument("gadget: delta must be >= 3");
  if (n < 1 || !(theta > 0) || !(psi > 0)) throw std::invalid_argument("gadget: needs n >= 1, theta, psi > 0");
  const double lg = std::log(static_cast<double>(n)) / std::log(delta - 1.0);
  GadgetParams p;
  const int ke = static_cast<int>(std::floor(theta * lg + 1e-12));
  p.k = static_cast<int>(std::lround(std::pow(delta - 1.0, ke)));
  p.ell = 2 * static_cast<int>(std::floor(psi / 2.0 * lg + 1e-12));
  p.m_prime = p.k * static_cast<int>(std::lround(std::pow(delta - 1.0, p.ell)));
  p.asymptotic_warning = p.m_prime >= std::pow(static_cast<double>(n), 0.25);
  return p;
}

int expected_internal_tree_vertices(int delta, int ell) {
  int total = 0, level = 1;
  for (int j = 0; j < ell; ++j) {
    total += level;
    level *= delta - 1;
  }
  return total;
}

GadgetGraph sample_gadget(int n, int delta, double theta, double psi, std::uint64_t seed) {
  GadgetGraph g;
  g.n = n;
  g.delta = delta;
  g.theta = theta;
  g.psi = psi;
  g.params = gadget_params(n, delta, theta, psi);
  g.side = n + g.params.m_prime;
  Rng rng(seed);
  for (int k = 0; k < delta - 1; ++k) g.matchings.push_back(sample_permutation(g.side, rng));
  g.w_matching = sample_permutation(n, rng);

  // Trees are grown from the leaves up; leaves are U in index order.
  int next = 2 * g.side;
  for (int s = 0; s < 2; ++s) {
    std::vector<int> level;
    const int u0 = s == 0 ? n : g.side + n;
    for (int i = 0; i < g.params.m_prime; ++i) level.push_back(u0 + i);
    for (int l = 0; l < g.params.ell; ++l) {
      std::vector<int> up;
      for (std::size_t i = 0; i < level.size(); i += delta - 1) {
        const int parent = next++;
        up.push_back(parent);
        for (int c = 0; c < delta - 1; ++c) g.tree_edges.push_back({parent, level[i + c]});
      }
      level = std::move(up);
    }
    (s == 0 ? g.roots_plus : g.roots_minus) = level;
  }
  g.num_vertices = next;
  return g;
}

std::vector<int> gadget_degrees(const GadgetGraph& g) {
  std::vector<int> deg(g.num_vertices, 0);
  for (const auto& p : g.matchings)
    for (int i = 0; i < g.side; ++i) {
      ++deg[i];
      ++deg[g.side + p[i]];
    }
  for (int i = 0; i < g.n; ++i) {
    ++deg[i];
    ++deg[g.side + g.w_matching[i]];
  }
  for (const auto& [a, b] : g.tree_edges) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

int phase_from_counts(int wp, int wm) { return wp > wm ? +1 : -1; }

int phase(const std::vector<int>& sigma, const GadgetGraph& g) {
  if (static_cast<int>(sigma.size()) != g.num_vertices)
    throw std::invalid_argument("phase: configuration size does not match the gadget");
  int wp = 0, wm = 0;
  for (int i = 0; i < g.n; ++i) {
    wp += sigma[i] == -1;
    wm += sigma[g.side + i] == -1;
  }
  return phase_from_counts(wp, wm);
}

SpectrumReport transition_matrix_spectrum(const SpinModel& m, const TreePhaseData& t) {
  if (t.regime != Regime::NonUniqueness)
    throw std::invalid_argument("transition_matrix_spectrum: needs non-uniqueness fixed points");
  if (!(m.b1 > 0.0)) throw std::invalid_argument("transition_matrix_spectrum: needs b1 > 0");
  const double B1 = m.b1, B2 = m.b2, qp = t.Q_plus, qm = t.Q_minus;
  SpectrumReport r;
  r.x = 1.0 / (B1 * std::sqrt((B2 + qm) * (B2 + qp)));
  const double y = B1 * B1 * qp * (B2 + qm) / (1 + B1 * qm);
  const double z = B1 * B1 * qm * (B2 + qp) / (1 + B1 * qp);
  const double w = B1 * B2;
  r.A << 0, y, 0, y, z, 0, z, 0, 0, 1, 0, w, 1, 0, w, 0;
  Eigen::EigenSolver<Eigen::Matrix4d> es(r.A);
  const Eigen::Vector4cd ev = es.eigenvalues();
  double max_imag = 0;
  for (int i = 0; i < 4; ++i) {
    r.eigenvalues[i] = ev[i].real();
    max_imag = std::max(max_imag, std::abs(ev[i].imag()));
  }
  std::sort(r.eigenvalues.data(), r.eigenvalues.data() + 4);
  r.e1 = B1 * (1 - B1 * B2) * std::sqrt(qp * qm / ((1 + B1 * qp) * (1 + B1 * qm)));
  r.e3 = B1 * std::sqrt((B2 + qp) * (B2 + qm));
  double closed[4] = {-r.e3, -r.e1, r.e1, r.e3};
  std::sort(closed, closed + 4);
  r.max_abs_error = max_imag;
  for (int i = 0; i < 4; ++i) r.max_abs_error = std::max(r.max_abs_error, std::abs(r.eigenvalues[i] - closed[i]));
  r.x_e1 = r.x * r.e1;
  if (r.max_abs_error > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "transition matrix spectrum differs from closed forms by " << r.max_abs_error;
    throw std::runtime_error(os.str());
  }
  return r;
}

}  // namespace phasecrit
