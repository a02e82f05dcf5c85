#pragma once

// JSON and CSV formats: graph files, scenario and sweep configs (unknown keys
// rejected), outcome objects, JSONL run records and tabular outputs.

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bqc/experiments.hpp"

namespace bqc {

using json = nlohmann::json;

/// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& msg)
      : std::invalid_argument(field + ": " + msg), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Shortest decimal text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(join(path, it.key()), "unknown field");
}

inline double get_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  return v.get<double>();
}

inline std::int64_t get_int(const json& j, const std::string& key, const std::string& path, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<std::int64_t>();
}

inline std::uint64_t get_seed(const json& j, const std::string& key, const std::string& path, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(join(path, key), "expected a non-negative integer");
}

inline std::string get_string(const json& j, const std::string& key, const std::string& path,
                              const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  return v.get<std::string>();
}

inline bool get_bool(const json& j, const std::string& key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v.get<bool>();
}

}  // namespace detail

inline GraphFamily parse_family(const std::string& s, const std::string& path) {
  if (s == "star") return GraphFamily::Star;
  if (s == "complete") return GraphFamily::Complete;
  if (s == "random_connected") return GraphFamily::RandomConnected;
  if (s == "intermediate") return GraphFamily::Intermediate;
  throw ConfigError(path, "unknown graph family '" + s + "' (star, complete, random_connected, intermediate)");
}

inline json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  return {{"n", g.n()}, {"edges", edges}};
}

/// {"n": int, "edges": [[i, j], ...]}.
inline Graph graph_from_json(const json& j, const std::string& path = "") {
  detail::require_object(j, path);
  detail::reject_unknown(j, path, {"n", "edges"});
  if (!j.contains("n")) throw ConfigError(detail::join(path, "n"), "missing");
  if (!j.contains("edges") || !j.at("edges").is_array()) throw ConfigError(detail::join(path, "edges"), "expected an array");
  const auto n = detail::get_int(j, "n", path, 0);
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(detail::join(path, "edges"), "each edge must be a pair of integers");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  try {
    return build_graph(static_cast<int>(n), std::move(edges));
  } catch (const GraphError& err) {
    throw ConfigError(detail::join(path, err.kind() == GraphErrorKind::TooFewNodes ? "n" : "edges"), err.what());
  }
}

inline DataSpec parse_data(const json& j, const std::string& path) {
  detail::require_object(j, path);
  detail::reject_unknown(j, path, {"mean", "std", "shift_std", "offset"});
  DataSpec d;
  d.mean = detail::get_number(j, "mean", path, d.mean);
  d.std = detail::get_number(j, "std", path, d.std);
  d.shift_std = detail::get_number(j, "shift_std", path, d.shift_std);
  d.offset = detail::get_number(j, "offset", path, d.offset);
  if (d.std < 0.0) throw ConfigError(detail::join(path, "std"), "must be non-negative");
  if (d.shift_std < 0.0) throw ConfigError(detail::join(path, "shift_std"), "must be non-negative");
  return d;
}

/// {"rho0", "factor", "block", "floor"}; a missing rho0 means n/m.
inline RhoSchedule parse_schedule(const json& j, const std::string& path, bool* rho0_heuristic = nullptr) {
  detail::require_object(j, path);
  detail::reject_unknown(j, path, {"rho0", "factor", "block", "floor"});
  RhoSchedule s;
  if (rho0_heuristic) *rho0_heuristic = !j.contains("rho0");
  s.rho0 = detail::get_number(j, "rho0", path, 1.0);
  s.factor = detail::get_int(j, "factor", path, s.factor);
  s.block = detail::get_int(j, "block", path, s.block);
  s.floor = detail::get_number(j, "floor", path, s.floor);
  if (!(s.rho0 > 0.0)) throw ConfigError(detail::join(path, "rho0"), "must be positive");
  if (s.factor < 2) throw ConfigError(detail::join(path, "factor"), "must be an integer >= 2");
  if (s.block < 1) throw ConfigError(detail::join(path, "block"), "must be >= 1");
  if (!(s.floor > 0.0)) throw ConfigError(detail::join(path, "floor"), "must be positive");
  return s;
}

inline json schedule_to_json(const RhoSchedule& s) {
  return {{"rho0", s.rho0}, {"factor", s.factor}, {"block", s.block}, {"floor", s.floor}};
}

inline QuantizerSpec parse_quantizer(const json& j, double delta, double range_l) {
  delta = detail::get_number(j, "delta", "", delta);
  range_l = detail::get_number(j, "range_l", "", range_l);
  if (!(delta > 0.0)) throw ConfigError("delta", "must be positive");
  if (!(range_l > 0.0)) throw ConfigError("range_l", "must be positive");
  try {
    return QuantizerSpec(delta, range_l);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("range_l", e.what());
  }
}

/// Scenario file. See docs/scenario.schema.json for the layout.
inline ScenarioConfig parse_scenario(const json& j) {
  detail::require_object(j, "");
  detail::reject_unknown(j, "", {"name", "graph", "data", "delta", "range_l", "rho", "algorithm", "runs", "seed",
                                 "max_iter", "inner_budget", "enforce_gamma0", "cadmm_tol", "parallel"});
  ScenarioConfig c;
  c.name = detail::get_string(j, "name", "", c.name);

  if (!j.contains("graph")) throw ConfigError("graph", "missing");
  const auto& g = j.at("graph");
  detail::require_object(g, "graph");
  if (g.contains("edges")) {
    c.fixed_graph = graph_from_json(g, "graph");
    c.graph = {GraphFamily::RandomConnected, c.fixed_graph->n(), c.fixed_graph->m()};
  } else {
    detail::reject_unknown(g, "graph", {"family", "n", "m"});
    if (!g.contains("family")) throw ConfigError("graph.family", "missing");
    c.graph.family = parse_family(detail::get_string(g, "family", "graph", ""), "graph.family");
    const auto n = detail::get_int(g, "n", "graph", -1);
    if (n < 2) throw ConfigError("graph.n", "must be an integer >= 2");
    if (n > 100000) throw ConfigError("graph.n", "too large");
    c.graph.n = static_cast<int>(n);
    if (c.graph.family == GraphFamily::RandomConnected) {
      if (!g.contains("m")) throw ConfigError("graph.m", "required for random_connected");
      const auto m = detail::get_int(g, "m", "graph", 0);
      if (m < n - 1 || m > max_edge_count(c.graph.n))
        throw ConfigError("graph.m", "must lie in [n-1, n(n-1)/2] = [" + std::to_string(n - 1) + ", " +
                                         std::to_string(max_edge_count(c.graph.n)) + "], got " + std::to_string(m));
      c.graph.m = static_cast<int>(m);
    } else if (g.contains("m")) {
      throw ConfigError("graph.m", "only random_connected takes an edge count");
    }
  }

  if (j.contains("data")) c.data = parse_data(j.at("data"), "data");
  c.spec = parse_quantizer(j, 1.0, 30.0);

  if (j.contains("rho")) {
    const auto& r = j.at("rho");
    if (r.is_number()) {
      c.rho.kind = RhoKind::Fixed;
      c.rho.value = r.get<double>();
    } else {
      detail::require_object(r, "rho");
      const std::string policy = detail::get_string(r, "policy", "rho", "heuristic");
      if (policy == "fixed") {
        detail::reject_unknown(r, "rho", {"policy", "value"});
        if (!r.contains("value")) throw ConfigError("rho.value", "missing");
        c.rho.kind = RhoKind::Fixed;
        c.rho.value = detail::get_number(r, "value", "rho", 1.0);
      } else if (policy == "heuristic") {
        detail::reject_unknown(r, "rho", {"policy", "multiplier"});
        c.rho.kind = RhoKind::Heuristic;
        c.rho.value = detail::get_number(r, "multiplier", "rho", 1.0);
      } else if (policy == "schedule") {
        detail::reject_unknown(r, "rho", {"policy", "schedule"});
        c.rho.kind = RhoKind::Schedule;
        c.rho.schedule = parse_schedule(r.contains("schedule") ? r.at("schedule") : json::object(), "rho.schedule",
                                        &c.rho.schedule_rho0_heuristic);
      } else {
        throw ConfigError("rho.policy", "expected fixed, heuristic or schedule");
      }
    }
    if (c.rho.kind != RhoKind::Schedule && !(c.rho.value > 0.0))
      throw ConfigError(c.rho.kind == RhoKind::Fixed ? "rho.value" : "rho.multiplier", "must be positive");
  }

  const std::string alg = detail::get_string(j, "algorithm", "", "bq");
  if (alg == "bq") c.algorithm = Algorithm::Bq;
  else if (alg == "ebq") c.algorithm = Algorithm::Ebq;
  else if (alg == "cadmm") c.algorithm = Algorithm::Cadmm;
  else throw ConfigError("algorithm", "expected cadmm, bq or ebq");

  const auto runs = detail::get_int(j, "runs", "", 1);
  if (runs < 1 || runs > 100'000'000) throw ConfigError("runs", "must be at least 1");
  c.runs = static_cast<int>(runs);
  c.seed = detail::get_seed(j, "seed", "", 0);
  c.max_iter = detail::get_int(j, "max_iter", "", c.max_iter);
  if (c.max_iter < 1) throw ConfigError("max_iter", "must be at least 1");
  if (j.contains("inner_budget")) {
    c.inner_budget = detail::get_int(j, "inner_budget", "", 50);
    if (*c.inner_budget < 1) throw ConfigError("inner_budget", "must be at least 1");
  }
  c.enforce_gamma0 = detail::get_bool(j, "enforce_gamma0", "", true);
  c.cadmm_tol = detail::get_number(j, "cadmm_tol", "", c.cadmm_tol);
  if (!(c.cadmm_tol > 0.0)) throw ConfigError("cadmm_tol", "must be positive");
  const auto par = detail::get_int(j, "parallel", "", 1);
  if (par < 1 || par > 4096) throw ConfigError("parallel", "must be in [1, 4096]");
  c.parallel = static_cast<int>(par);
  if (c.rho.kind == RhoKind::Schedule && c.algorithm != Algorithm::Bq)
    throw ConfigError("rho.policy", "schedules apply to the bq algorithm only");
  return c;
}

inline SweepConfig parse_sweep(const json& j) {
  detail::require_object(j, "");
  detail::reject_unknown(j, "", {"family", "n", "multipliers", "runs", "seed", "max_iter", "data", "delta", "range_l",
                                 "parallel"});
  SweepConfig c;
  if (!j.contains("family")) throw ConfigError("family", "missing");
  c.family = parse_family(detail::get_string(j, "family", "", ""), "family");
  if (c.family == GraphFamily::RandomConnected) throw ConfigError("family", "sweeps use star, intermediate or complete");
  if (j.contains("n")) {
    if (!j.at("n").is_array() || j.at("n").empty()) throw ConfigError("n", "expected a non-empty array of integers");
    c.n_list.clear();
    for (const auto& v : j.at("n")) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 2 || v.get<std::int64_t>() > 100000)
        throw ConfigError("n", "every entry must be an integer >= 2");
      c.n_list.push_back(v.get<int>());
    }
  }
  if (j.contains("multipliers")) {
    if (!j.at("multipliers").is_array() || j.at("multipliers").empty())
      throw ConfigError("multipliers", "expected a non-empty array of numbers");
    c.multipliers.clear();
    for (const auto& v : j.at("multipliers")) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("multipliers", "entries must be positive");
      c.multipliers.push_back(v.get<double>());
    }
  }
  const auto runs = detail::get_int(j, "runs", "", c.runs);
  if (runs < 1 || runs > 100'000'000) throw ConfigError("runs", "must be at least 1");
  c.runs = static_cast<int>(runs);
  c.seed = detail::get_seed(j, "seed", "", 0);
  c.max_iter = detail::get_int(j, "max_iter", "", c.max_iter);
  if (c.max_iter < 1) throw ConfigError("max_iter", "must be at least 1");
  if (j.contains("data")) c.data = parse_data(j.at("data"), "data");
  c.spec = parse_quantizer(j, 1.0, 30.0);
  const auto par = detail::get_int(j, "parallel", "", 1);
  if (par < 1 || par > 4096) throw ConfigError("parallel", "must be in [1, 4096]");
  c.parallel = static_cast<int>(par);
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Outcome objects.

inline json bounds_json(const BoundSet& b) {
  return {{"gamma0", b.gamma0},
          {"bound_convergent", b.bound_convergent},
          {"bound_cyclic", b.bound_cyclic},
          {"state_count_b", b.state_count_b},
          {"bound_cyclic_two_level", b.bound_cyclic_two_level}};
}

inline json outcome_json(const RunOutcome& o) {
  json j;
  j["kind"] = to_string(o.kind);
  j["k0"] = o.k0;
  j["period"] = o.period;
  if (o.kind == OutcomeKind::Converged) j["q_star"] = o.value;
  if (o.kind == OutcomeKind::Cyclic) j["xbar_q"] = o.value;
  j["rbar"] = o.rbar;
  j["error"] = o.error;
  j["radius"] = o.radius;
  j["bounds"] = bounds_json(o.bounds);
  j["iterations"] = o.iterations;
  j["diagnostics"] = {{"dual_bound_violations", o.diagnostics.dual_bound_violations},
                      {"dual_bound_worst_ratio", o.diagnostics.dual_bound_worst_ratio},
                      {"error_bound_holds", o.diagnostics.error_bound_holds},
                      {"cyclic_x_range_holds", o.diagnostics.cyclic_x_range_holds},
                      {"two_level_cycle", o.diagnostics.two_level_cycle},
                      {"used_brent", o.diagnostics.used_brent}};
  return j;
}

inline json ebq_outcome_json(const EbqOutcome& o) {
  json j;
  j["kind"] = to_string(o.kind);
  j["t_star"] = o.t_star;
  j["x_bq"] = o.x_bq;
  j["consensus"] = o.consensus_value();
  j["rbar"] = o.rbar;
  j["error"] = o.error;
  j["radius"] = o.radius;
  j["call_bound"] = o.call_bound;
  j["iterations"] = o.total_iterations;
  j["calls"] = json::array();
  for (const auto& c : o.calls) j["calls"].push_back(outcome_json(c));
  j["warnings"] = o.warnings;
  return j;
}

inline json record_json(const RunRecord& r) {
  json j{{"run", r.run},
         {"n", r.n},
         {"m", r.m},
         {"rho", r.rho},
         {"kind", to_string(r.kind)},
         {"k0", r.k0},
         {"period", r.period},
         {"value", r.value},
         {"rbar", r.rbar},
         {"error", r.error},
         {"radius", r.radius},
         {"bound_holds", r.bound_holds},
         {"iterations", r.iterations},
         {"convergence_time", r.convergence_time},
         {"calls", r.calls},
         {"t_star", r.t_star},
         {"dual_bound_violations", r.dual_bound_violations}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

inline void write_jsonl(std::ostream& out, const std::vector<RunRecord>& recs) {
  for (const auto& r : recs) out << record_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------
// CSV.

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "family,n,m,rho,metric,value,runs,seed\n";
  for (const auto& r : rows)
    out << r.family << ',' << r.n << ',' << r.m << ',' << fmt(r.rho) << ',' << r.metric << ',' << fmt(r.value) << ','
        << r.runs << ',' << r.seed << '\n';
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "k,node,x,q_level,alpha\n";
  for (const auto& t : trace)
    out << t.k << ',' << t.node << ',' << fmt(t.x) << ',' << fmt(t.q_level) << ',' << fmt(t.alpha) << '\n';
}

/// Extended-run trajectory: k counts steps across calls, and `offset` is the
/// accumulated t in force during the call.
inline void write_ebq_trace_csv(std::ostream& out, const EbqOutcome& o) {
  out << "k,call,node,x,q_level,alpha,offset\n";
  double t = 0.0;
  std::int64_t base = 0;
  for (std::size_t c = 0; c < o.calls.size(); ++c) {
    for (const auto& row : o.calls[c].trace) {
      if (c > 0 && row.k == 0) continue;
      out << base + row.k << ',' << c << ',' << row.node << ',' << fmt(row.x) << ',' << fmt(row.q_level) << ','
          << fmt(row.alpha) << ',' << fmt(t) << '\n';
    }
    base += o.calls[c].iterations;
    t += o.calls[c].value;
  }
}

inline void write_cadmm_trajectory_csv(std::ostream& out, const Graph& g, std::span<const double> r, double rho,
                                       std::int64_t iters) {
  out << "k,node,x,alpha\n";
  auto s = CadmmState::zeros(g.n());
  for (std::int64_t k = 0; k <= iters; ++k) {
    for (int i = 0; i < g.n(); ++i) out << s.k << ',' << i << ',' << fmt(s.x[i]) << ',' << fmt(s.alpha[i]) << '\n';
    if (k < iters) s = cadmm_step(s, g, rho, r);
  }
}

}  // namespace bqc
