#pragma once

#include <cstdint>
#include <vector>

#include "phasecrit/graphs.hpp"
#include "phasecrit/model.hpp"

namespace phasecrit {

// Bipartite instance for the enumeration engine. Clamped vertices have a fixed spin and
// are excluded from the (a, b) minus counts, but still carry their vertex weight.
struct EnumerationInstance {
  int left = 0, right = 0;
  std::vector<std::vector<int>> left_adj;  // right neighbours, with multiplicity
  std::vector<int> left_clamp, right_clamp;  // 0 free, -1 fixed minus, +1 fixed plus
  void validate() const;
  int free_left() const;
  int free_right() const;
};

EnumerationInstance instance_from_graph(const BipartiteMultigraph& g);
// eta: spins on U+ (first m') then U- (next m'), each +1 or -1.
EnumerationInstance instance_from_gadget(const GadgetGraph& g, const std::vector<int>& eta);
// Boundary assignment with the first `minus1` U+ and first `minus2` U- vertices at -1.
std::vector<int> eta_from_counts(int m_prime, int minus1, int minus2);

enum class Engine { Serial, Parallel };

struct GibbsSummary {
  int n_left = 0, n_right = 0;  // free vertices per side
  double logZ = 0;
  std::vector<std::vector<double>> log_table;  // [a][b] = log Z^{a,b}; -inf when empty
  int dominant_a = 0, dominant_b = 0;
  double table_logsum() const;  // log of the sum over the table
  double log_mu_balanced() const;
  double log_mu_unbalanced(double rho) const;  // |a - b| >= rho * n
};

// Caps OpenMP threads from PHASECRIT_THREADS when set; returns the cap in effect.
int configure_threads_from_env();

GibbsSummary enumerate_instance(const EnumerationInstance& inst, const SpinModel& m,
                                Engine engine = Engine::Parallel, bool with_table = true);
double partition_function(const BipartiteMultigraph& g, const SpinModel& m, Engine engine = Engine::Parallel);
GibbsSummary z_alpha_beta_table(const BipartiteMultigraph& g, const SpinModel& m,
                                Engine engine = Engine::Parallel);
GibbsSummary gadget_conditional_Z(const GadgetGraph& g, const SpinModel& m, const std::vector<int>& eta,
                                  Engine engine = Engine::Parallel);

// Direct sum over all 2^(left+right) configurations; only for tiny test instances.
double brute_force_logZ(const EnumerationInstance& inst, const SpinModel& m);

struct BimodalityReport {
  double rho = 0;
  double log_mu_bal = 0, log_mu_rho = 0;
  double mu_bal = 0, mu_rho = 0;
  double log_ratio = 0;  // log(mu_bal / mu_rho)
  double ratio = 0;      // exp(log_ratio), may be inf
};
BimodalityReport bimodality_report(const GibbsSummary& s, double rho);

// Sum of w(s1) w(s2) over ordered pairs with a (resp. b) minus spins on the left (right),
// binned by the overlap counts (g, dl). log_table[g][dl], -inf when empty.
struct PairOverlapTable {
  int n = 0, a = 0, b = 0;
  std::vector<std::vector<double>> log_table;
};
PairOverlapTable pair_overlap_statistics(const BipartiteMultigraph& g, const SpinModel& m, int a, int b);
// Independent double loop over all configuration pairs, for testing.
PairOverlapTable pair_overlap_brute_force(const BipartiteMultigraph& g, const SpinModel& m, int a, int b);

struct GlauberResult {
  long steps = 0;
  long sign_changes = 0;
  std::vector<long> waiting_times;  // steps between successive phase changes
  double median_wait = 0;           // censored at `steps` when no change happened
  bool censored = false;
  double balanced_fraction = 0;     // fraction of steps with |m1 - m2| <= 1
  std::vector<double> minus_frequency;  // time average of [sigma_v = -1], left then right
  std::vector<int> final_state;
  std::vector<std::int8_t> sign_trace;  // per step, only when requested
};
// Single-site heat-bath dynamics from a uniformly random start. The phase is the sign of
// m1 - m2 (minus counts per side); it switches only when |m1 - m2| >= max(1, ceil(rho n)).
GlauberResult glauber_run(const BipartiteMultigraph& g, const SpinModel& m, long steps, std::uint64_t seed,
                          double rho = 0.0, bool record_trace = false);

// Exact probability that each vertex has spin -1 (left then right); tiny graphs only.
std::vector<double> exact_minus_marginals(const BipartiteMultigraph& g, const SpinModel& m);

}  // namespace phasecrit
