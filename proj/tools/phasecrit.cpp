#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasecrit/appendix.hpp"
#include "phasecrit/bias.hpp"
#include "phasecrit/graphs.hpp"
#include "phasecrit/model.hpp"
#include "phasecrit/moments.hpp"
#include "phasecrit/oracle.hpp"
#include "phasecrit/smallgraph.hpp"
#include "phasecrit/tree.hpp"

using json = nlohmann::json;
using namespace phasecrit;

namespace {

constexpr const char* kSchema = "phasecrit/1";
constexpr const char* kVersion = "1.0.0";

// Every non-finite number becomes an explicit string sentinel.
json sanitize(const json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return j;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(sanitize(e));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = sanitize(it.value());
    return out;
  }
  return j;
}

struct ModelArgs {
  int delta = 3;
  double b1 = 1, b2 = 1, lambda = 1;
  SpinModel model() const { return {b1, b2, lambda, delta}; }
};

void add_model_options(CLI::App* c, ModelArgs& m, bool required = true) {
  auto* d = c->add_option("--delta", m.delta, "degree Delta");
  auto* b1 = c->add_option("--b1", m.b1, "edge activity of (-,-) edges");
  c->add_option("--b2", m.b2, "edge activity of (+,+) edges");
  c->add_option("--lambda", m.lambda, "vertex activity of spin -1");
  if (required) {
    d->required();
    b1->required();
  }
}

json model_json(const SpinModel& m) {
  return {{"b1", m.b1}, {"b2", m.b2}, {"lambda", m.lambda}, {"delta", m.delta}};
}

json tree_json(const TreePhaseData& t) {
  return {{"q_plus", t.q_plus},   {"q_minus", t.q_minus}, {"q_star", t.q_star},   {"p_plus", t.p_plus},
          {"p_minus", t.p_minus}, {"p_star", t.p_star},   {"Q_plus", t.Q_plus},   {"Q_minus", t.Q_minus},
          {"Q_star", t.Q_star},   {"omega", t.omega},     {"omega_star", t.omega_star},
          {"regime", to_string(t.regime)}, {"residual", t.residual}};
}

json bipartite_json(const BipartiteMultigraph& g, std::uint64_t seed) {
  return {{"kind", "bipartite_regular"},
          {"n", g.n},
          {"delta", g.delta},
          {"matchings", g.matchings},
          {"labels", {{"V1", {0, g.n}}, {"V2", {g.n, 2 * g.n}}}},
          {"seed", seed},
          {"rng", kRngName}};
}

json gadget_json(const GadgetGraph& g, std::uint64_t seed) {
  const int n = g.n, s = g.side;
  json edges = json::array();
  for (const auto& [p, c] : g.tree_edges) edges.push_back({p, c});
  return {{"kind", "gadget"},
          {"n", n},
          {"delta", g.delta},
          {"side", s},
          {"matchings", g.matchings},
          {"w_matching", g.w_matching},
          {"labels", {{"W+", {0, n}}, {"U+", {n, s}}, {"W-", {s, s + n}}, {"U-", {s + n, 2 * s}}}},
          {"tree_edges", edges},
          {"roots_plus", g.roots_plus},
          {"roots_minus", g.roots_minus},
          {"num_vertices", g.num_vertices},
          {"params",
           {{"theta", g.theta},
            {"psi", g.psi},
            {"k", g.params.k},
            {"ell", g.params.ell},
            {"m_prime", g.params.m_prime},
            {"asymptotic_warning", g.params.asymptotic_warning}}},
          {"seed", seed},
          {"rng", kRngName}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
}

BipartiteMultigraph bipartite_from_json(const json& j) {
  BipartiteMultigraph g;
  g.n = j.at("n").get<int>();
  g.delta = j.at("delta").get<int>();
  g.matchings = j.at("matchings").get<std::vector<std::vector<int>>>();
  g.validate();
  return g;
}

GadgetGraph gadget_from_json(const json& j) {
  GadgetGraph g;
  g.n = j.at("n").get<int>();
  g.delta = j.at("delta").get<int>();
  g.side = j.at("side").get<int>();
  g.matchings = j.at("matchings").get<std::vector<std::vector<int>>>();
  g.w_matching = j.at("w_matching").get<std::vector<int>>();
  const auto& p = j.at("params");
  g.theta = p.at("theta").get<double>();
  g.psi = p.at("psi").get<double>();
  g.params.k = p.at("k").get<int>();
  g.params.ell = p.at("ell").get<int>();
  g.params.m_prime = p.at("m_prime").get<int>();
  g.params.asymptotic_warning = p.at("asymptotic_warning").get<bool>();
  for (const auto& e : j.at("tree_edges")) g.tree_edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  g.roots_plus = j.at("roots_plus").get<std::vector<int>>();
  g.roots_minus = j.at("roots_minus").get<std::vector<int>>();
  g.num_vertices = j.at("num_vertices").get<int>();
  if (g.side != g.n + g.params.m_prime || static_cast<int>(g.matchings.size()) != g.delta - 1)
    throw std::invalid_argument("gadget file: inconsistent sizes");
  return g;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

// "lo:hi:step" inclusive of hi up to rounding.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("grid must look like lo:hi:step, got " + spec);
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0])
    throw std::invalid_argument("grid must look like lo:hi:step with step > 0 and lo <= hi");
  std::vector<double> g;
  const long count = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
  for (long k = 0; k < count; ++k) g.push_back(parts[0] + k * parts[2]);
  return g;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---- subcommands ----

json run_tree(const ModelArgs& a) {
  const SpinModel m = a.model();
  m.validate();
  const TreePhaseData t = solve_tree_fixed_points(m);
  json r = tree_json(t);
  const UniquenessReport u = classify_uniqueness(m);
  r["criterion"] = u.criterion;
  if (u.has_closed_form) {
    r["threshold_name"] = u.threshold_name;
    r["threshold"] = u.threshold;
    r["signed_distance"] = u.signed_distance;
  }
  if (t.regime == Regime::NonUniqueness) {
    const NonuniquenessReport nu = check_nonuniqueness_inequality(m);
    r["lemma_inequality"] = {{"lhs", nu.lhs}, {"rhs", nu.rhs}, {"pass", nu.pass}};
  }
  return r;
}

struct MomentsArgs {
  ModelArgs model;
  int n = 0;
  bool exact = false, asymptotic = false, ratio = false, verify_phi2 = false;
};

json run_moments(const MomentsArgs& a) {
  const SpinModel m = a.model.model();
  m.validate(1);
  const bool all = !a.exact && !a.asymptotic && !a.ratio;
  json r;
  const TreePhaseData t = solve_tree_fixed_points(m);
  r["regime"] = to_string(t.regime);
  json cps = json::array();
  for (const auto& c : classify_phi1_critical_points(m)) {
    const FirstMomentPoint p = phi1(m, c.point.alpha, c.point.beta);
    cps.push_back({{"alpha", c.point.alpha},
                   {"beta", c.point.beta},
                   {"kind", c.point.kind},
                   {"grad_norm", c.point.grad_norm},
                   {"phi1", p.phi1},
                   {"classification", c.kind},
                   {"minors", c.numeric_minors},
                   {"closed_minors", c.closed_minors}});
  }
  r["phi1_critical_points"] = cps;
  if (t.regime == Regime::NonUniqueness) {
    const FirstMomentPoint p = phi1(m, t.p_plus, t.p_minus);
    r["phi1_max"] = p.phi1;
    r["optimizer"] = {{"alpha", t.p_plus}, {"beta", t.p_minus}};
    if (all || a.asymptotic || a.ratio) {
      const AsymptoticConstants c = asymptotic_prefactors(m);
      if (all || a.asymptotic)
        r["asymptotic"] = {{"E1", c.E1},
                           {"E2", c.E2},
                           {"E3", c.E3},
                           {"first_prefactor", c.first_prefactor},
                           {"second_prefactor", c.second_prefactor},
                           {"identity_lhs", c.identity_lhs},
                           {"identity_rhs", c.identity_rhs},
                           {"quad_form_det", c.quad_form_det}};
      r["ratio_limit"] = c.ratio_limit;
    }
    if (a.exact) {
      if (a.n < 1) throw std::invalid_argument("--exact needs --n >= 1");
      const LatticePoint lp = round_to_lattice(a.n, t.p_plus, t.p_minus);
      const double logE = exact_first_moment_log(m, a.n, lp.a, lp.b);
      const double scaled = std::exp(logE + std::log(static_cast<double>(a.n)) - a.n * p.phi1);
      r["exact"] = {{"n", a.n}, {"a", lp.a}, {"b", lp.b}, {"log_first_moment", logE}, {"scaled", scaled}};
    }
    if (a.verify_phi2) {
      const Phi2MaxReport v = verify_phi2_maximum(m);
      r["phi2_maximum"] = {{"hypothesis", v.hypothesis},      {"target_gamma", v.target_gamma},
                           {"target_delta", v.target_delta},  {"found_gamma", v.found_gamma},
                           {"found_delta", v.found_delta},    {"phi2_max", v.phi2_max},
                           {"two_phi1", v.two_phi1},          {"value_gap", v.value_gap},
                           {"competing", v.competing},        {"pass", v.pass}};
    }
  } else if (a.exact) {
    if (a.n < 1) throw std::invalid_argument("--exact needs --n >= 1");
    const LatticePoint lp = round_to_lattice(a.n, t.p_star, t.p_star);
    r["exact"] = {{"n", a.n}, {"a", lp.a}, {"b", lp.b}, {"log_first_moment", exact_first_moment_log(m, a.n, lp.a, lp.b)}};
  }
  return r;
}

json run_sample(int n, int delta, std::uint64_t seed, const std::string& out) {
  const BipartiteMultigraph g = sample_bipartite_regular(n, delta, seed);
  json gj = bipartite_json(g, seed);
  json r;
  if (!out.empty()) {
    write_text(out, gj.dump() + "\n");
    r["written"] = out;
  } else {
    r["graph"] = gj;
  }
  const auto X = count_cycles(g, 4);
  r["cycles"] = {{"X2", X[2]}, {"X4", X[4]}};
  return r;
}

json run_gadget(int n, int delta, double theta, double psi, std::uint64_t seed, const std::string& out) {
  const GadgetGraph g = sample_gadget(n, delta, theta, psi, seed);
  json gj = gadget_json(g, seed);
  json r = {{"k", g.params.k},
            {"ell", g.params.ell},
            {"m_prime", g.params.m_prime},
            {"asymptotic_warning", g.params.asymptotic_warning},
            {"num_vertices", g.num_vertices}};
  if (!out.empty()) {
    write_text(out, gj.dump() + "\n");
    r["written"] = out;
  } else {
    r["graph"] = gj;
  }
  return r;
}

struct OracleArgs {
  ModelArgs model;
  std::string graph, csv, engine = "parallel";
  bool table = false, bimodality = false, glauber = false;
  double rho = 0;
  long steps = 100000;
  std::uint64_t seed = 1;
  int eta_minus1 = 0, eta_minus2 = 0;
};

json table_json(const GibbsSummary& s) {
  json rows = json::array();
  for (const auto& row : s.log_table) rows.push_back(row);
  return rows;
}

json run_oracle(const OracleArgs& a) {
  const SpinModel m = a.model.model();
  m.validate(1);
  const json gj = read_json_file(a.graph);
  const std::string kind = gj.value("kind", "");
  const Engine engine = a.engine == "serial" ? Engine::Serial : Engine::Parallel;
  json r;
  GibbsSummary s;
  if (kind == "bipartite_regular") {
    const BipartiteMultigraph g = bipartite_from_json(gj);
    if (g.delta != m.delta) throw std::invalid_argument("graph degree differs from --delta");
    if (a.glauber) {
      double rho = a.rho;
      if (rho <= 0) {
        const TreePhaseData t = solve_tree_fixed_points(m);
        rho = t.regime == Regime::NonUniqueness ? std::abs(t.p_plus - t.p_minus) / 2 : 0.0;
      }
      const GlauberResult gr = glauber_run(g, m, a.steps, a.seed, rho);
      r["glauber"] = {{"steps", gr.steps},
                      {"seed", a.seed},
                      {"rho", rho},
                      {"sign_changes", gr.sign_changes},
                      {"median_wait", gr.median_wait},
                      {"censored", gr.censored},
                      {"balanced_fraction", gr.balanced_fraction}};
      return r;
    }
    if (a.table || a.bimodality || !a.csv.empty()) {
      s = z_alpha_beta_table(g, m, engine);
    } else {
      s.n_left = s.n_right = g.n;
      s.logZ = partition_function(g, m, engine);
    }
  } else if (kind == "gadget") {
    const GadgetGraph g = gadget_from_json(gj);
    if (a.glauber) throw std::invalid_argument("--glauber needs a bipartite_regular graph");
    const auto eta = eta_from_counts(g.params.m_prime, a.eta_minus1, a.eta_minus2);
    s = gadget_conditional_Z(g, m, eta, engine);
    r["eta"] = eta;
  } else {
    throw std::invalid_argument("graph file: unknown kind '" + kind + "'");
  }
  r["logZ"] = s.logZ;
  if (!s.log_table.empty()) {
    r["dominant_cell"] = {{"a", s.dominant_a}, {"b", s.dominant_b}};
    r["table_logsum"] = s.table_logsum();
    if (a.table) r["log_z_table"] = table_json(s);
    if (!a.csv.empty()) {
      std::ostringstream os;
      os << "a,b,alpha,beta,log_z\n";
      for (int i = 0; i <= s.n_left; ++i)
        for (int j = 0; j <= s.n_right; ++j)
          os << i << "," << j << "," << fmt(static_cast<double>(i) / s.n_left) << ","
             << fmt(static_cast<double>(j) / s.n_right) << "," << fmt(s.log_table[i][j]) << "\n";
      write_text(a.csv, os.str());
      r["csv"] = a.csv;
    }
  }
  if (a.bimodality) {
    double rho = a.rho;
    if (rho <= 0) {
      const TreePhaseData t = solve_tree_fixed_points(m);
      if (t.regime != Regime::NonUniqueness)
        throw std::invalid_argument("default rho needs non-uniqueness; pass --rho");
      rho = std::abs(t.p_plus - t.p_minus) / 2;
    }
    const BimodalityReport b = bimodality_report(s, rho);
    r["bimodality"] = {{"rho", b.rho},       {"mu_bal", b.mu_bal},     {"mu_rho", b.mu_rho},
                       {"log_mu_bal", b.log_mu_bal}, {"log_mu_rho", b.log_mu_rho}, {"log_ratio", b.log_ratio},
                       {"ratio", b.ratio}};
  }
  return r;
}

struct SmallgraphArgs {
  ModelArgs model;
  int max_len = 20;
  bool mc = false;
  int n = 12, cycle_len = 2;
  long trials = 10000;
  std::uint64_t seed = 1;
};

json run_smallgraph(const SmallgraphArgs& a) {
  const SpinModel m = a.model.model();
  m.validate();
  const ConditioningData c = conditioning_data(m, a.max_len);
  json r = {{"omega", c.omega},
            {"lengths", c.lengths},
            {"lambdas", c.lambdas},
            {"deltas", c.deltas},
            {"deltas_from_omega", c.deltas_from_omega},
            {"max_delta_gap", c.max_delta_gap},
            {"partial_sums", c.partial_sums},
            {"sum_closed_form", c.sum_closed_form},
            {"tail_bound", c.tail_bound}};
  if (a.mc) {
    const ConditionedMoment mc = conditioned_cycle_moment_mc(m, a.n, a.cycle_len, a.trials, a.seed);
    r["mc"] = {{"n", mc.n},         {"i", mc.i},         {"a", mc.a},         {"b", mc.b},
               {"trials", mc.trials}, {"seed", a.seed},  {"estimate", mc.estimate}, {"stderr", mc.stderr_},
               {"limit", mc.limit}, {"exact", mc.exact}, {"mean_cycles", mc.mean_cycles}};
  }
  return r;
}

json certificate_json(const HardcoreCaseReport& h) {
  json coeffs = json::array();
  for (const auto& c : h.certificate.coeffs) {
    json pf = json::array();
    for (const auto& [f, k] : c.positive_factors) pf.push_back({{"factor", f}, {"power", k}});
    std::ostringstream hash;
    hash << std::hex << c.residual_hash;
    coeffs.push_back({{"name", c.name},
                      {"clearing_power_1_plus_t", c.clearing_power},
                      {"y_power", c.y_power},
                      {"y_minus_1_power", c.y_minus_1_power},
                      {"one_plus_t_power", c.one_plus_t_power},
                      {"positive_factors", pf},
                      {"overall_sign", c.overall_sign},
                      {"residual_terms", c.residual_terms},
                      {"residual_hash", hash.str()},
                      {"parity_ok", c.parity_ok},
                      {"reconstruction_ok", c.reconstruction_ok},
                      {"offending", c.offending}});
  }
  std::ostringstream hh;
  hh << std::hex << h.h_hash;
  return {{"d", h.d},
          {"pass", h.pass},
          {"failed_stage", h.failed_stage},
          {"error", h.error},
          {"terms", {{"F", h.f_terms}, {"G", h.g_terms}, {"H", h.h_terms}}},
          {"H_hash", hh.str()},
          {"exact_divisions", h.exact_divisions},
          {"case1", h.certificate.case1},
          {"case2", h.certificate.case2},
          {"coefficients", coeffs}};
}

json run_sweep(const std::string& preset, const std::string& grid_spec) {
  static const std::regex re("(ising|hardcore)-delta([0-9]+)");
  std::smatch mt;
  if (!std::regex_match(preset, mt, re)) throw std::invalid_argument("unknown preset " + preset);
  const bool ising = mt[1] == "ising";
  const int delta = std::stoi(mt[2]);
  const std::vector<double> grid = parse_grid(grid_spec);
  std::vector<std::string> rows(grid.size());
  std::vector<std::string> errors(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < grid.size(); ++k) {
    try {
      const SpinModel m = ising ? SpinModel::ising(delta, grid[k]) : SpinModel::hardcore(delta, grid[k]);
      m.validate();
      const TreePhaseData t = solve_tree_fixed_points(m);
      const double dd = m.d() * m.d();
      std::ostringstream os;
      os.precision(12);
      os << grid[k] << "," << fmt(t.omega) << "," << fmt(t.omega_star) << "," << fmt(dd * t.omega) << ","
         << fmt(dd * t.omega_star) << "," << to_string(t.regime) << "," << fmt(t.Q_plus) << "," << fmt(t.Q_minus)
         << "," << fmt(t.Q_star);
      rows[k] = os.str();
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  std::ostringstream csv;
  csv << (ising ? "B" : "lambda") << ",omega,omega_star,d2_omega,d2_omega_star,regime,Q_plus,Q_minus,Q_star\n";
  for (const auto& r : rows) csv << r << "\n";
  return csv.str();
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"phasecrit: tree recursions, moment analysis and exact oracles for 2-spin systems"};
  app.require_subcommand(1);
  bool as_json = true;
  std::string out_path;

  ModelArgs tree_args;
  auto* tree = app.add_subcommand("tree", "tree fixed points and uniqueness regime");
  add_model_options(tree, tree_args);
  tree->add_flag("--json", as_json, "emit JSON (default)");

  MomentsArgs mom;
  auto* moments = app.add_subcommand("moments", "first and second moment exponents and constants");
  add_model_options(moments, mom.model);
  moments->add_option("--n", mom.n, "graph size for --exact");
  moments->add_flag("--exact", mom.exact, "exact finite-n first moment at the lattice point");
  moments->add_flag("--asymptotic", mom.asymptotic, "asymptotic constants");
  moments->add_flag("--ratio", mom.ratio, "second/first^2 ratio limit");
  moments->add_flag("--verify-phi2", mom.verify_phi2, "global maximum search for the second moment exponent");
  moments->add_flag("--json", as_json, "emit JSON (default)");

  int s_n = 0, s_delta = 0;
  std::uint64_t s_seed = 1;
  std::string s_out;
  auto* sample = app.add_subcommand("sample", "sample a union of random perfect matchings");
  sample->add_option("--n", s_n, "vertices per side")->required();
  sample->add_option("--delta", s_delta, "number of matchings")->required();
  sample->add_option("--seed", s_seed, "64-bit seed");
  sample->add_option("--out", s_out, "graph JSON path");
  sample->add_flag("--json", as_json, "emit JSON (default)");

  int g_n = 0, g_delta = 3;
  double g_theta = 0.1, g_psi = 0.1;
  std::uint64_t g_seed = 1;
  std::string g_out;
  auto* gadget = app.add_subcommand("gadget", "sample a gadget graph");
  gadget->add_option("--n", g_n, "size of W on each side")->required();
  gadget->add_option("--delta", g_delta, "degree");
  gadget->add_option("--theta", g_theta, "tree count exponent");
  gadget->add_option("--psi", g_psi, "tree depth exponent");
  gadget->add_option("--seed", g_seed, "64-bit seed");
  gadget->add_option("--out", g_out, "graph JSON path");
  gadget->add_flag("--json", as_json, "emit JSON (default)");

  OracleArgs orc;
  auto* oracle = app.add_subcommand("oracle", "exact enumeration on a stored graph");
  add_model_options(oracle, orc.model);
  oracle->add_option("--graph", orc.graph, "graph JSON from sample or gadget")->required();
  oracle->add_flag("--table", orc.table, "include the log Z^{a,b} table");
  oracle->add_flag("--bimodality", orc.bimodality, "balanced vs unbalanced mass");
  oracle->add_option("--rho", orc.rho, "imbalance threshold; default |p+ - p-|/2");
  oracle->add_flag("--glauber", orc.glauber, "run heat-bath Glauber dynamics");
  oracle->add_option("--steps", orc.steps, "Glauber steps");
  oracle->add_option("--seed", orc.seed, "Glauber seed");
  oracle->add_option("--csv", orc.csv, "write the table as CSV");
  oracle->add_option("--engine", orc.engine, "parallel or serial")->check(CLI::IsMember({"parallel", "serial"}));
  oracle->add_option("--eta-minus1", orc.eta_minus1, "gadget: number of U+ vertices clamped to -1");
  oracle->add_option("--eta-minus2", orc.eta_minus2, "gadget: number of U- vertices clamped to -1");
  oracle->add_flag("--json", as_json, "emit JSON (default)");

  SmallgraphArgs sg;
  auto* small = app.add_subcommand("smallgraph", "cycle rates, perturbations and conditioned moments");
  add_model_options(small, sg.model);
  small->add_option("--max-len", sg.max_len, "largest even cycle length");
  small->add_flag("--mc", sg.mc, "Monte Carlo conditioned cycle moment");
  small->add_option("--n", sg.n, "graph size for --mc");
  small->add_option("--trials", sg.trials, "graphs for --mc");
  small->add_option("--cycle-len", sg.cycle_len, "cycle length for --mc");
  small->add_option("--seed", sg.seed, "seed for --mc");
  small->add_flag("--json", as_json, "emit JSON (default)");

  std::vector<int> ds;
  std::string cert_path;
  bool ising_bias = false;
  auto* appendix = app.add_subcommand("appendix-verify", "exact sign certificates for the hard-core case analysis");
  appendix->add_option("--d", ds, "Delta - 1, any of 2 3 4")->check(CLI::IsMember({2, 3, 4}));
  appendix->add_option("--dump-certificate", cert_path, "write the certificate JSON");
  appendix->add_flag("--ising-bias", ising_bias, "also check the Ising d = 2 bias bounds on a B grid");
  appendix->add_flag("--json", as_json, "emit JSON (default)");

  std::string preset, b_grid, l_grid;
  auto* sweep = app.add_subcommand("sweep", "regime sweep as CSV");
  sweep->add_option("--preset", preset, "ising-deltaD or hardcore-deltaD")->required();
  sweep->add_option("--b-grid", b_grid, "lo:hi:step for Ising B");
  sweep->add_option("--lambda-grid", l_grid, "lo:hi:step for hard-core lambda");
  sweep->add_option("--out", out_path, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  json report = {{"schema", kSchema}, {"tool", "phasecrit"}, {"version", kVersion}, {"rng", kRngName}};
  try {
    json result, config;
    if (*tree) {
      report["command"] = "tree";
      config = model_json(tree_args.model());
      result = run_tree(tree_args);
    } else if (*moments) {
      report["command"] = "moments";
      config = {{"model", model_json(mom.model.model())},
                {"n", mom.n},
                {"exact", mom.exact},
                {"asymptotic", mom.asymptotic},
                {"ratio", mom.ratio},
                {"verify_phi2", mom.verify_phi2}};
      result = run_moments(mom);
    } else if (*sample) {
      report["command"] = "sample";
      config = {{"n", s_n}, {"delta", s_delta}, {"seed", s_seed}, {"out", s_out}};
      result = run_sample(s_n, s_delta, s_seed, s_out);
    } else if (*gadget) {
      report["command"] = "gadget";
      config = {{"n", g_n}, {"delta", g_delta}, {"theta", g_theta}, {"psi", g_psi}, {"seed", g_seed}, {"out", g_out}};
      result = run_gadget(g_n, g_delta, g_theta, g_psi, g_seed, g_out);
    } else if (*oracle) {
      report["command"] = "oracle";
      config = {{"model", model_json(orc.model.model())},
                {"graph", orc.graph},
                {"table", orc.table},
                {"bimodality", orc.bimodality},
                {"rho", orc.rho},
                {"glauber", orc.glauber},
                {"steps", orc.steps},
                {"seed", orc.seed},
                {"engine", orc.engine},
                {"eta_minus1", orc.eta_minus1},
                {"eta_minus2", orc.eta_minus2}};
      result = run_oracle(orc);
    } else if (*small) {
      report["command"] = "smallgraph";
      config = {{"model", model_json(sg.model.model())},
                {"max_len", sg.max_len},
                {"mc", sg.mc},
                {"n", sg.n},
                {"trials", sg.trials},
                {"cycle_len", sg.cycle_len},
                {"seed", sg.seed}};
      result = run_smallgraph(sg);
    } else if (*appendix) {
      report["command"] = "appendix-verify";
      if (ds.empty() && !ising_bias) ds = {2, 3, 4};
      config = {{"d", ds}, {"ising_bias", ising_bias}};
      json certs = json::array();
      bool pass = true;
      for (int d : ds) {
        const HardcoreCaseReport h = verify_hardcore_case(d);
        certs.push_back(certificate_json(h));
        pass = pass && h.pass;
      }
      result["certificates"] = certs;
      if (ising_bias) {
        json rows = json::array();
        for (const auto& b : ising_bias_sweep(0.01, 0.17, 17)) {
          rows.push_back({{"B", b.b},
                          {"odds", b.odds},
                          {"odds_bound", b.odds_bound},
                          {"min_r1", b.min_r1},
                          {"min_c4", b.min_c4},
                          {"weak_bound", b.weak_bound},
                          {"points_above", b.points_above},
                          {"strong_bound", b.strong_bound},
                          {"min_margin", b.min_margin},
                          {"pass", b.pass}});
          pass = pass && b.pass;
        }
        result["ising_bias"] = rows;
      }
      result["pass"] = pass;
      if (!cert_path.empty()) write_text(cert_path, sanitize(certs).dump(2) + "\n");
      if (!pass) {
        report["config"] = config;
        report["result"] = result;
        report["error"] = {{"type", "certificate_failed"}, {"message", "at least one certificate failed"}};
        std::cout << sanitize(report).dump(2) << "\n";
        return 1;
      }
    } else if (*sweep) {
      const bool is_ising = preset.rfind("ising", 0) == 0;
      const std::string grid = is_ising ? b_grid : l_grid;
      if (grid.empty()) throw std::invalid_argument(is_ising ? "--b-grid is required" : "--lambda-grid is required");
      const std::string csv = run_sweep(preset, grid).get<std::string>();
      if (out_path.empty())
        std::cout << csv;
      else
        write_text(out_path, csv);
      return 0;
    }
    report["config"] = config;
    report["result"] = result;
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << sanitize(report).dump(2) << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    report["error"] = {{"type", "usage"}, {"message", e.what()}};
    std::cout << sanitize(report).dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    report["error"] = {{"type", "computation"}, {"message", e.what()}};
    std::cout << sanitize(report).dump(2) << "\n";
    return 1;
  }
}
