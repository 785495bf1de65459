#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "phasecrit/model.hpp"
#include "phasecrit/tree.hpp"

namespace phasecrit {

using Rng = std::mt19937_64;
inline constexpr const char* kRngName = "mt19937_64-v1";

// Uniform integer in [0, k) by rejection, so streams are identical on every platform.
std::uint64_t uniform_below(Rng& rng, std::uint64_t k);
// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Rng& rng);
// Seed for task `index` derived from a base seed (splitmix64 finalizer).
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);
// Fisher-Yates shuffle of the identity.
std::vector<int> sample_permutation(int n, Rng& rng);

struct BipartiteMultigraph {
  int n = 0;
  int delta = 0;
  std::vector<std::vector<int>> matchings;  // matching k joins left i to right matchings[k][i]
  void validate() const;
};

BipartiteMultigraph sample_bipartite_regular(int n, int delta, std::uint64_t seed);
BipartiteMultigraph sample_bipartite_regular(int n, int delta, Rng& rng);

// X_i for i = 0..max_len; odd entries and entries below 2 are zero.
std::vector<std::uint64_t> count_cycles(const BipartiteMultigraph& g, int max_len);
double expected_cycle_rate(int delta, int i);

struct GadgetParams {
  int k = 0, ell = 0, m_prime = 0;
  bool asymptotic_warning = false;  // m' >= n^{1/4}
};
GadgetParams gadget_params(int n, int delta, double theta, double psi);

// Vertex layout of H: left side [0, side) = W+ then U+, right side [side, 2 side) = W- then
// U-, tree internal vertices from 2 side on. side = n + m'.
struct GadgetGraph {
  int n = 0, delta = 0;
  double theta = 0, psi = 0;
  GadgetParams params;
  int side = 0;
  std::vector<std::vector<int>> matchings;  // delta-1 permutations of [0, side)
  std::vector<int> w_matching;              // permutation of [0, n): W+ i to W- w_matching[i]
  int num_vertices = 0;
  std::vector<std::pair<int, int>> tree_edges;  // (parent, child)
  std::vector<int> roots_plus, roots_minus;

  bool in_w_plus(int v) const { return v < n; }
  bool in_u_plus(int v) const { return v >= n && v < side; }
  bool in_w_minus(int v) const { return v >= side && v < side + n; }
  bool in_u_minus(int v) const { return v >= side + n && v < 2 * side; }
};

GadgetGraph sample_gadget(int n, int delta, double theta, double psi, std::uint64_t seed);
std::vector<int> gadget_degrees(const GadgetGraph& g);
int expected_internal_tree_vertices(int delta, int ell);  // per tree

// +1 iff W+ carries strictly more minus spins than W-; ties go to -1.
int phase(const std::vector<int>& sigma, const GadgetGraph& g);
int phase_from_counts(int minus_in_w_plus, int minus_in_w_minus);

struct SpectrumReport {
  Eigen::Matrix4d A;
  double x = 0;
  Eigen::Vector4d eigenvalues;  // ascending
  double e1 = 0, e3 = 0;        // closed forms; spectrum is {-e3, -e1, e1, e3}
  double max_abs_error = 0;
  double x_e1 = 0;              // equals sqrt(omega)
};
SpectrumReport transition_matrix_spectrum(const SpinModel& m, const TreePhaseData& t);

}  // namespace phasecrit
