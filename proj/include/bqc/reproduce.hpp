#pragma once

// Fixed experiment setups for the reference trajectories, error curves,
// sweeps and schedule table. Each writer fills an output directory.

#include <filesystem>
#include <fstream>
#include <string>

#include "bqc/io.hpp"

namespace bqc::reproduce {

struct Options {
  std::uint64_t seed = 42;
  std::optional<int> runs;
  std::optional<std::int64_t> max_iter;
  int parallel = 1;
  std::filesystem::path out = ".";
};

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

/// Trajectory setup: n = 50, m = 100, L = 25, rho = 0.5, r_i ~ N(n, n^2),
/// 50 iterations per call. The step exceeds the gamma0 <= delta/2 ceiling, so
/// the precondition check is off here.
inline ScenarioConfig fig1_scenario(std::uint64_t seed) {
  ScenarioConfig c;
  c.name = "fig1";
  c.graph = {GraphFamily::RandomConnected, 50, 100};
  c.data = {50.0, 50.0, 0.0, 0.0};
  c.spec = QuantizerSpec(1.0, 25.0);
  c.rho.kind = RhoKind::Fixed;
  c.rho.value = 0.5;
  c.algorithm = Algorithm::Ebq;
  c.seed = seed;
  c.inner_budget = 50;
  c.enforce_gamma0 = false;
  return c;
}

/// Writes fig1_trajectory.csv and fig1_outcome.json for run 0, plus
/// fig1_runs.jsonl when more than one run is requested.
inline void fig1(const Options& opt) {
  auto sc = fig1_scenario(opt.seed);
  if (opt.max_iter) sc.max_iter = *opt.max_iter;
  sc.parallel = opt.parallel;
  const auto in = expand_run(sc, 0);
  BqConfig cfg{in.graph, in.r, sc.rho.value, sc.spec};
  cfg.fixed_budget = sc.inner_budget;
  cfg.record_trace = true;
  const auto o = run_ebq(cfg, {false});

  auto traj = open_out(opt.out / "fig1_trajectory.csv");
  write_ebq_trace_csv(traj, o);
  json j = ebq_outcome_json(o);
  j["graph"] = graph_to_json(in.graph);
  j["seed"] = opt.seed;
  auto oj = open_out(opt.out / "fig1_outcome.json");
  oj << j.dump(2) << '\n';

  if (opt.runs && *opt.runs > 1) {
    sc.runs = *opt.runs;
    auto f = open_out(opt.out / "fig1_runs.jsonl");
    write_jsonl(f, run_scenario(sc));
  }
}

/// Iterative errors on n = 75, m = 200, L = 30, rho = 0.5, r ~ N(0, n^2):
/// case "inside" uses r, case "outside" uses r + 2n. The plain rounding
/// quantizer is emulated with a range that never binds.
inline void fig2(const Options& opt) {
  const std::int64_t iters = opt.max_iter.value_or(300);
  Xoshiro256pp rng(derive_seed(opt.seed, 0));
  const Graph g = random_connected_graph(75, 200, rng);
  const Vec r = sample_data({0.0, 75.0, 0.0, 0.0}, 75, rng);
  Vec shifted = r;
  for (auto& v : shifted) v += 150.0;
  const QuantizerSpec spec(1.0, 30.0);
  const double rho = 0.5;

  auto csv = open_out(opt.out / "fig2_errors.csv");
  csv << "case,algorithm,k,error\n";
  auto emit = [&](const char* cs, const char* alg, const Vec& errs) {
    for (std::size_t k = 0; k < errs.size(); ++k) csv << cs << ',' << alg << ',' << k << ',' << fmt(errs[k]) << '\n';
  };

  json summary;
  summary["seed"] = opt.seed;
  summary["bounds"] = bounds_json(bounds(rho, g, spec));
  for (const auto& [name, data] : {std::pair<const char*, const Vec*>{"inside", &r}, {"outside", &shifted}}) {
    BqConfig cfg{g, *data, rho, spec};
    cfg.fixed_budget = 50;
    cfg.record_trace = true;
    emit(name, "cadmm", iterative_error_cadmm(g, *data, rho, iters));
    emit(name, "dq", iterative_error_bq(g, *data, rho, unbounded_spec(1.0), iters));
    json cj;
    cj["rbar"] = mean(*data);
    if (std::string(name) == "inside") {
      emit(name, "bq", iterative_error_bq(g, *data, rho, spec, iters));
      cfg.fixed_budget.reset();
      cj["bq"] = outcome_json(run(cfg));
    } else {
      const auto o = run_ebq(cfg, {false});
      emit(name, "ebq", iterative_error_ebq(o, g.n()));
      cj["ebq"] = ebq_outcome_json(o);
    }
    summary[name] = cj;
  }
  auto oj = open_out(opt.out / "fig2_outcome.json");
  oj << summary.dump(2) << '\n';
}

inline SweepConfig reference_sweep(GraphFamily f, const Options& opt) {
  SweepConfig c;
  c.family = f;
  c.runs = opt.runs.value_or(1000);
  c.seed = opt.seed;
  if (opt.max_iter) c.max_iter = *opt.max_iter;
  c.parallel = opt.parallel;
  return c;
}

inline std::vector<SweepCell> reference_sweeps(const Options& opt) {
  std::vector<SweepCell> cells;
  for (auto f : {GraphFamily::Star, GraphFamily::Intermediate, GraphFamily::Complete}) {
    auto part = run_sweep(reference_sweep(f, opt));
    cells.insert(cells.end(), part.begin(), part.end());
  }
  return cells;
}

inline std::vector<SweepRow> select_metrics(const std::vector<SweepRow>& rows, std::initializer_list<const char*> keep) {
  std::vector<SweepRow> out;
  for (const auto& r : rows)
    for (const char* k : keep)
      if (r.metric == k) out.push_back(r);
  return out;
}

/// Cyclic fractions over the multiplier grid for the three families.
inline void fig3(const Options& opt) {
  const auto rows = sweep_rows(reference_sweeps(opt), opt.seed);
  auto f = open_out(opt.out / "fig3_cyclic.csv");
  write_sweep_csv(f, select_metrics(rows, {"multiplier", "cyclic_fraction", "min_period", "max_period", "unresolved"}));
}

/// Mean convergence times over the same grid.
inline void fig4(const Options& opt) {
  const auto rows = sweep_rows(reference_sweeps(opt), opt.seed);
  auto f = open_out(opt.out / "fig4_time.csv");
  write_sweep_csv(f, select_metrics(rows, {"multiplier", "mean_convergence_time", "within_rough_bound", "unresolved"}));
}

inline void table1(const Options& opt) {
  Table1Config c;
  c.runs = opt.runs.value_or(100);
  c.seed = opt.seed;
  if (opt.max_iter) c.max_iter = *opt.max_iter;
  c.parallel = opt.parallel;
  std::vector<SweepRow> rows;
  for (const auto& r : table1_comparison(c)) {
    const std::string f = to_string(r.family);
    const double rho0 = static_cast<double>(r.n) / r.m;
    rows.push_back({f, r.n, r.m, rho0, "decreasing_mean_iterations", r.decreasing_mean, r.runs, c.seed});
    rows.push_back({f, r.n, r.m, c.fixed_rho, "fixed_mean_iterations", r.fixed_mean, r.runs, c.seed});
    rows.push_back({f, r.n, r.m, rho0, "decreasing_unresolved", static_cast<double>(r.decreasing_unresolved), r.runs, c.seed});
    rows.push_back({f, r.n, r.m, c.fixed_rho, "fixed_unresolved", static_cast<double>(r.fixed_unresolved), r.runs, c.seed});
  }
  auto f = open_out(opt.out / "table1.csv");
  write_sweep_csv(f, rows);
}

}  // namespace bqc::reproduce
