#pragma once

// Seeded Monte Carlo harness: scenario expansion into independent runs,
// cyclic-probability and convergence-time sweeps, the schedule comparison
// table, and the iterative-error metric used for trajectory comparisons.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bqc/bq_engine.hpp"
#include "bqc/cadmm.hpp"
#include "bqc/ebq.hpp"
#include "bqc/graph.hpp"
#include "bqc/param_select.hpp"
#include "bqc/rng.hpp"

namespace bqc {

/// r_i = N(mean, std) + r0 + offset, with a common r0 ~ N(0, shift_std)
/// drawn once per vector when shift_std > 0.
struct DataSpec {
  double mean = 0.0;
  double std = 1.0;
  double shift_std = 0.0;
  double offset = 0.0;
};

inline Vec sample_data(const DataSpec& d, int n, Xoshiro256pp& rng) {
  if (d.std < 0.0 || d.shift_std < 0.0) throw std::invalid_argument("standard deviations must be non-negative");
  const double r0 = d.shift_std > 0.0 ? rng.normal(0.0, d.shift_std) : 0.0;
  Vec r(static_cast<std::size_t>(n));
  for (auto& v : r) v = rng.normal(d.mean, d.std) + r0 + d.offset;
  return r;
}

enum class Algorithm { Cadmm, Bq, Ebq };

inline const char* to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Cadmm: return "cadmm";
    case Algorithm::Bq: return "bq";
    case Algorithm::Ebq: return "ebq";
  }
  return "unknown";
}

enum class RhoKind { Fixed, Heuristic, Schedule };

struct RhoPolicy {
  RhoKind kind = RhoKind::Heuristic;
  double value = 1.0;  // the step for Fixed, a multiplier of n/m for Heuristic
  RhoSchedule schedule;
  bool schedule_rho0_heuristic = true;  // start the schedule at n/m

  /// Step used for a run on `g` (the first stage for schedules).
  double initial_rho(const Graph& g) const {
    switch (kind) {
      case RhoKind::Fixed: return value;
      case RhoKind::Heuristic: return value * rho_heuristic(g.n(), g.m());
      case RhoKind::Schedule: return schedule_rho0_heuristic ? rho_heuristic(g.n(), g.m()) : schedule.rho0;
    }
    return value;
  }
};

struct ScenarioConfig {
  std::string name = "scenario";
  GraphSpec graph;
  std::optional<Graph> fixed_graph;  // explicit edges; no generator draws
  DataSpec data;
  QuantizerSpec spec{1.0, 30.0};
  RhoPolicy rho;
  Algorithm algorithm = Algorithm::Bq;
  int runs = 1;
  std::uint64_t seed = 0;
  std::int64_t max_iter = 1'000'000;
  std::optional<std::int64_t> inner_budget;  // fixed iterations per quantized call
  bool enforce_gamma0 = true;
  double cadmm_tol = 1e-8;
  int parallel = 1;

  void validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be at least 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (inner_budget && *inner_budget < 1) throw std::invalid_argument("inner_budget must be at least 1");
    if (parallel < 1) throw std::invalid_argument("parallel must be at least 1");
    if (!(cadmm_tol > 0.0)) throw std::invalid_argument("cadmm_tol must be positive");
    if (!fixed_graph) {
      if (graph.n < 2) throw GraphError(GraphErrorKind::TooFewNodes, "graph.n must be at least 2");
      if (graph.family == GraphFamily::RandomConnected &&
          (graph.m < graph.n - 1 || graph.m > max_edge_count(graph.n)))
        throw GraphError(GraphErrorKind::InfeasibleEdgeCount,
                         "graph.m must lie in [n-1, n(n-1)/2] = [" + std::to_string(graph.n - 1) + ", " +
                             std::to_string(max_edge_count(graph.n)) + "]");
    }
    if (rho.kind == RhoKind::Schedule) {
      RhoSchedule s = rho.schedule;
      if (rho.schedule_rho0_heuristic) s.rho0 = 1.0;
      s.validate();
      if (algorithm != Algorithm::Bq) throw std::invalid_argument("rho schedules apply to the bq algorithm only");
    } else {
      check_positive_rho(rho.value);
    }
    if (data.std < 0.0 || data.shift_std < 0.0) throw std::invalid_argument("data standard deviations must be >= 0");
  }
};

struct RunRecord {
  std::int64_t run = 0;
  int n = 0;
  int m = 0;
  double rho = 0.0;  // final step for schedules
  OutcomeKind kind = OutcomeKind::Unresolved;
  std::int64_t k0 = 0;
  std::int64_t period = 0;
  double value = 0.0;
  double rbar = 0.0;
  double error = 0.0;
  double radius = 0.0;
  bool bound_holds = true;
  std::int64_t iterations = 0;        // steps executed
  std::int64_t convergence_time = 0;  // k0 (+T), or schedule total
  int calls = 0;
  double t_star = 0.0;
  std::int64_t dual_bound_violations = 0;
  bool two_level_cycle = true;
  double rough_bound = 0.0;
  std::string failure;
};

/// Runs `body(j)` for j in [0, count) on up to `threads` workers. Exceptions
/// from `body` are rethrown after all workers finish.
inline void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::int64_t>(count, 1 << 20))));
  if (threads == 1) {
    for (std::int64_t j = 0; j < count; ++j) body(j);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::int64_t j = next++; j < count; j = next++) {
        try {
          body(j);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

struct RunInputs {
  Graph graph;
  Vec r;
};

/// Run j draws its graph first and then its data from derive_seed(seed, j).
inline RunInputs expand_run(const ScenarioConfig& cfg, std::int64_t j) {
  Xoshiro256pp rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(j)));
  Graph g = cfg.fixed_graph ? *cfg.fixed_graph : generate(cfg.graph, rng);
  Vec r = sample_data(cfg.data, g.n(), rng);
  return {std::move(g), std::move(r)};
}

struct CadmmRun {
  CadmmState state;
  bool reached = false;
};

/// Iterates the exact baseline until max|x_i - rbar| <= tol.
inline CadmmRun run_cadmm(const Graph& g, std::span<const double> r, double rho, double tol, std::int64_t max_iter) {
  const double rbar = mean(r);
  CadmmRun out{CadmmState::zeros(g.n()), false};
  auto dist = [&](const CadmmState& s) {
    double d = 0.0;
    for (double x : s.x) d = std::max(d, std::abs(x - rbar));
    return d;
  };
  while (out.state.k < max_iter) {
    out.state = cadmm_step(out.state, g, rho, r);
    if (dist(out.state) <= tol) {
      out.reached = true;
      break;
    }
  }
  return out;
}

inline RunRecord fill_record(RunRecord rec, const RunOutcome& o) {
  rec.kind = o.kind;
  rec.k0 = o.k0;
  rec.period = o.period;
  rec.value = o.value;
  rec.rbar = o.rbar;
  rec.error = o.error;
  rec.radius = o.radius;
  rec.bound_holds = !o.resolved() || o.diagnostics.error_bound_holds;
  rec.iterations = o.iterations;
  rec.convergence_time = o.resolved() ? o.convergence_time() : o.iterations;
  rec.calls = 1;
  rec.dual_bound_violations = o.diagnostics.dual_bound_violations;
  rec.two_level_cycle = o.diagnostics.two_level_cycle;
  return rec;
}

/// One repetition of a scenario. Exceptions are recorded in `failure`.
inline RunRecord run_single(const ScenarioConfig& cfg, std::int64_t j) {
  RunRecord rec;
  rec.run = j;
  try {
    RunInputs in = expand_run(cfg, j);
    const Graph& g = in.graph;
    rec.n = g.n();
    rec.m = g.m();
    rec.rho = cfg.rho.initial_rho(g);
    rec.rbar = mean(in.r);
    if (cfg.algorithm == Algorithm::Cadmm) {
      const auto c = run_cadmm(g, in.r, rec.rho, cfg.cadmm_tol, cfg.max_iter);
      rec.kind = c.reached ? OutcomeKind::Converged : OutcomeKind::Unresolved;
      rec.value = mean(c.state.x);
      double d = 0.0;
      for (double x : c.state.x) d = std::max(d, std::abs(x - rec.rbar));
      rec.error = d;
      rec.radius = cfg.cadmm_tol;
      rec.bound_holds = !c.reached || d <= cfg.cadmm_tol;
      rec.iterations = c.state.k;
      rec.convergence_time = c.state.k;
      rec.calls = 0;
      return rec;
    }

    BqConfig bq{g, in.r, rec.rho, cfg.spec};
    bq.max_iter = cfg.max_iter;
    bq.fixed_budget = cfg.inner_budget;
    rec.rough_bound = rough_time_bound(g, spectral(g), rec.rho, in.r, cfg.spec);

    if (cfg.algorithm == Algorithm::Ebq) {
      const auto o = run_ebq(bq, {cfg.enforce_gamma0});
      const auto& last = o.calls.back();
      rec = fill_record(rec, last);
      rec.kind = o.kind;
      rec.value = o.consensus_value();
      rec.rbar = o.rbar;
      rec.error = o.error;
      rec.calls = static_cast<int>(o.calls.size());
      rec.t_star = o.t_star;
      rec.iterations = o.total_iterations;
      rec.convergence_time = 0;
      for (std::size_t c = 0; c + 1 < o.calls.size(); ++c) rec.convergence_time += o.calls[c].iterations;
      rec.convergence_time += last.resolved() ? last.convergence_time() : last.iterations;
      rec.dual_bound_violations = 0;
      for (const auto& c : o.calls) rec.dual_bound_violations += c.diagnostics.dual_bound_violations;
      if (o.kind == OutcomeKind::Converged) {
        rec.radius = o.radius;
      } else if (o.kind == OutcomeKind::Cyclic) {
        rec.radius = last.bounds.bound_cyclic;
      }
      rec.bound_holds = o.kind == OutcomeKind::Unresolved || rec.error <= rec.radius;
      return rec;
    }

    if (cfg.rho.kind == RhoKind::Schedule) {
      RhoSchedule s = cfg.rho.schedule;
      s.rho0 = rec.rho;
      const auto so = run_with_schedule(bq, s);
      rec = fill_record(rec, so.final_run);
      rec.rho = so.final_rho;
      rec.iterations = so.stages.back().first_iteration + so.final_run.iterations;
      rec.convergence_time = so.total_iterations;
      return rec;
    }

    return fill_record(rec, run(bq));
  } catch (const std::exception& e) {
    rec.kind = OutcomeKind::Unresolved;
    rec.failure = e.what();
    return rec;
  }
}

/// All repetitions, ordered by run index regardless of completion order.
inline std::vector<RunRecord> run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<RunRecord> out(static_cast<std::size_t>(cfg.runs));
  parallel_for(cfg.runs, cfg.parallel, [&](std::int64_t j) { out[static_cast<std::size_t>(j)] = run_single(cfg, j); });
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps over rho expressed as multiples of n/m.

/// 1-2-5 logarithmic multipliers from 1e-3 to 1e2.
inline std::vector<double> default_multipliers() {
  std::vector<double> g;
  for (int e = -3; e <= 1; ++e)
    for (double c : {1.0, 2.0, 5.0}) g.push_back(c * std::pow(10.0, e));
  g.push_back(100.0);
  return g;
}

struct SweepConfig {
  GraphFamily family = GraphFamily::Star;
  std::vector<int> n_list{5, 10, 20, 50};
  std::vector<double> multipliers = default_multipliers();
  int runs = 1000;
  std::uint64_t seed = 0;
  std::int64_t max_iter = 1'000'000;
  DataSpec data{0.0, 10.0, 5.0, 0.0};  // N(0, 100) + r0, r0 ~ N(0, 25)
  QuantizerSpec spec{1.0, 30.0};
  int parallel = 1;

  void validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be at least 1");
    if (n_list.empty()) throw std::invalid_argument("n list is empty");
    for (int n : n_list)
      if (n < 2) throw std::invalid_argument("every n must be at least 2");
    if (multipliers.empty()) throw std::invalid_argument("multiplier grid is empty");
    for (double v : multipliers) check_positive_rho(v);
    if (family == GraphFamily::RandomConnected)
      throw std::invalid_argument("sweeps use star, intermediate or complete families");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  }
};

struct SweepCell {
  GraphFamily family;
  int n;
  int m;
  double multiplier;
  double rho;
  int runs;
  int cyclic = 0;
  int unresolved = 0;
  int failures = 0;
  int bound_violations = 0;
  std::int64_t dual_bound_violations = 0;
  double mean_time = 0.0;          // over resolved runs
  double within_rough_bound = 0.0;  // fraction of resolved runs with time <= rough bound
  std::int64_t min_period = 0;     // over cyclic runs; 0 when none
  std::int64_t max_period = 0;
  bool two_level_cycles = true;

  double cyclic_fraction() const noexcept { return static_cast<double>(cyclic) / runs; }
};

/// The (family, n) stream seed; run j of every multiplier reuses the same
/// graph and data, so cells differ only in rho.
inline std::uint64_t cell_seed(std::uint64_t seed, GraphFamily f, int n) {
  return derive_seed(seed, (static_cast<std::uint64_t>(f) << 32) | static_cast<std::uint64_t>(n));
}

inline SweepCell sweep_cell(const SweepConfig& cfg, int n, double multiplier) {
  const GraphSpec gs{cfg.family, n, 0};
  const int m = edge_count(gs);
  const double rho = multiplier * static_cast<double>(n) / m;
  SweepCell cell{cfg.family, n, m, multiplier, rho, cfg.runs};
  const std::uint64_t base = cell_seed(cfg.seed, cfg.family, n);

  std::vector<RunRecord> recs(static_cast<std::size_t>(cfg.runs));
  parallel_for(cfg.runs, cfg.parallel, [&](std::int64_t j) {
    RunRecord rec;
    try {
      Xoshiro256pp rng(derive_seed(base, static_cast<std::uint64_t>(j)));
      const Graph g = generate(gs, rng);
      const Vec r = sample_data(cfg.data, n, rng);
      BqConfig bq{g, r, rho, cfg.spec};
      bq.max_iter = cfg.max_iter;
      rec = fill_record(rec, run(bq));
      rec.rough_bound = rough_time_bound(g, spectral(g), rho, r, cfg.spec);
    } catch (const std::exception& e) {
      rec.kind = OutcomeKind::Unresolved;
      rec.failure = e.what();
    }
    recs[static_cast<std::size_t>(j)] = std::move(rec);
  });

  double time_sum = 0.0;
  int resolved = 0;
  int within = 0;
  for (const auto& rec : recs) {
    if (!rec.failure.empty()) ++cell.failures;
    cell.dual_bound_violations += rec.dual_bound_violations;
    if (rec.kind == OutcomeKind::Unresolved) {
      ++cell.unresolved;
      continue;
    }
    ++resolved;
    time_sum += static_cast<double>(rec.convergence_time);
    within += static_cast<double>(rec.convergence_time) <= rec.rough_bound;
    if (!rec.bound_holds) ++cell.bound_violations;
    if (rec.kind == OutcomeKind::Cyclic) {
      ++cell.cyclic;
      cell.min_period = cell.min_period == 0 ? rec.period : std::min(cell.min_period, rec.period);
      cell.max_period = std::max(cell.max_period, rec.period);
      cell.two_level_cycles = cell.two_level_cycles && rec.two_level_cycle;
    }
  }
  if (resolved > 0) {
    cell.mean_time = time_sum / resolved;
    cell.within_rough_bound = static_cast<double>(within) / resolved;
  }
  return cell;
}

inline std::vector<SweepCell> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<SweepCell> cells;
  for (int n : cfg.n_list)
    for (double mult : cfg.multipliers) cells.push_back(sweep_cell(cfg, n, mult));
  return cells;
}

struct SweepRow {
  std::string family;
  int n;
  int m;
  double rho;
  std::string metric;
  double value;
  int runs;
  std::uint64_t seed;
};

/// Empirical fraction of cyclic outcomes per grid cell.
inline std::vector<SweepRow> cyclic_probability_sweep(const SweepConfig& cfg) {
  std::vector<SweepRow> rows;
  for (const auto& c : run_sweep(cfg))
    rows.push_back({to_string(c.family), c.n, c.m, c.rho, "cyclic_fraction", c.cyclic_fraction(), c.runs, cfg.seed});
  return rows;
}

/// Mean convergence time (k0, or k0 + T for cycles) per grid cell.
inline std::vector<SweepRow> convergence_time_sweep(const SweepConfig& cfg) {
  std::vector<SweepRow> rows;
  for (const auto& c : run_sweep(cfg))
    rows.push_back({to_string(c.family), c.n, c.m, c.rho, "mean_convergence_time", c.mean_time, c.runs, cfg.seed});
  return rows;
}

/// Every metric of every cell, in a stable order.
inline std::vector<SweepRow> sweep_rows(const std::vector<SweepCell>& cells, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (const auto& c : cells) {
    const std::string f = to_string(c.family);
    rows.push_back({f, c.n, c.m, c.rho, "multiplier", c.multiplier, c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "cyclic_fraction", c.cyclic_fraction(), c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "mean_convergence_time", c.mean_time, c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "within_rough_bound", c.within_rough_bound, c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "unresolved", static_cast<double>(c.unresolved), c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "bound_violations", static_cast<double>(c.bound_violations), c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "min_period", static_cast<double>(c.min_period), c.runs, seed});
    rows.push_back({f, c.n, c.m, c.rho, "max_period", static_cast<double>(c.max_period), c.runs, seed});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Decreasing schedule against a fixed step.

struct Table1Config {
  std::vector<GraphFamily> families{GraphFamily::Star, GraphFamily::Intermediate, GraphFamily::Complete};
  std::vector<int> n_list{20, 50, 100};
  int runs = 100;
  std::uint64_t seed = 0;
  std::int64_t max_iter = 1'000'000;
  DataSpec data{0.0, 10.0, 5.0, 0.0};
  QuantizerSpec spec{1.0, 30.0};
  RhoSchedule schedule{1.0, 10, 50, 1e-4};  // rho0 replaced by n/m per graph
  double fixed_rho = 1e-4;
  int parallel = 1;
};

struct Table1Row {
  GraphFamily family;
  int n;
  int m;
  int runs;
  double decreasing_mean = 0.0;
  double fixed_mean = 0.0;
  int decreasing_unresolved = 0;
  int fixed_unresolved = 0;
  int decreasing_cyclic = 0;
  int fixed_cyclic = 0;
};

inline std::vector<Table1Row> table1_comparison(const Table1Config& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be at least 1");
  check_positive_rho(cfg.fixed_rho);
  std::vector<Table1Row> rows;
  for (auto family : cfg.families)
    for (int n : cfg.n_list) {
      const GraphSpec gs{family, n, 0};
      Table1Row row{family, n, edge_count(gs), cfg.runs};
      const std::uint64_t base = cell_seed(cfg.seed, family, n);
      std::vector<ScheduleOutcome> dec(static_cast<std::size_t>(cfg.runs));
      std::vector<RunOutcome> fix(static_cast<std::size_t>(cfg.runs));
      parallel_for(cfg.runs, cfg.parallel, [&](std::int64_t j) {
        Xoshiro256pp rng(derive_seed(base, static_cast<std::uint64_t>(j)));
        const Graph g = generate(gs, rng);
        const Vec r = sample_data(cfg.data, n, rng);
        BqConfig bq{g, r, cfg.fixed_rho, cfg.spec};
        bq.max_iter = cfg.max_iter;
        fix[static_cast<std::size_t>(j)] = run(bq);
        RhoSchedule s = cfg.schedule;
        s.rho0 = rho_heuristic(g.n(), g.m());
        dec[static_cast<std::size_t>(j)] = run_with_schedule(bq, s);
      });
      double dsum = 0.0, fsum = 0.0;
      for (int j = 0; j < cfg.runs; ++j) {
        const auto& d = dec[static_cast<std::size_t>(j)];
        const auto& f = fix[static_cast<std::size_t>(j)];
        dsum += static_cast<double>(d.total_iterations);
        fsum += static_cast<double>(f.resolved() ? f.convergence_time() : f.iterations);
        row.decreasing_unresolved += !d.final_run.resolved();
        row.fixed_unresolved += !f.resolved();
        row.decreasing_cyclic += d.final_run.kind == OutcomeKind::Cyclic;
        row.fixed_cyclic += f.kind == OutcomeKind::Cyclic;
      }
      row.decreasing_mean = dsum / cfg.runs;
      row.fixed_mean = fsum / cfg.runs;
      rows.push_back(row);
    }
  return rows;
}

// ---------------------------------------------------------------------------
// Iterative error: ||v^k - 1 rbar||_2 / sqrt(n) with v the transmitted values.

inline double rms_gap(std::span<const double> v, double target) {
  double s = 0.0;
  for (double x : v) s += (x - target) * (x - target);
  return std::sqrt(s / static_cast<double>(v.size()));
}

/// Exact baseline; entry k is the error after k steps from zero.
inline Vec iterative_error_cadmm(const Graph& g, std::span<const double> r, double rho, std::int64_t iters) {
  const double rbar = mean(r);
  Vec out{rms_gap(Vec(r.size(), 0.0), rbar)};
  auto s = CadmmState::zeros(g.n());
  for (std::int64_t k = 0; k < iters; ++k) {
    s = cadmm_step(s, g, rho, r);
    out.push_back(rms_gap(s.x, rbar));
  }
  return out;
}

/// Quantized run; pass unbounded_spec(delta) for the plain rounding quantizer.
inline Vec iterative_error_bq(const Graph& g, std::span<const double> r, double rho, const QuantizerSpec& spec,
                              std::int64_t iters) {
  const double rbar = mean(r);
  Vec out{rms_gap(Vec(r.size(), 0.0), rbar)};
  auto s = IntState::zeros(g.n());
  Vec v(r.size());
  for (std::int64_t k = 0; k < iters; ++k) {
    s = bq_step(s, g, rho, r, spec);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(s.q[i]) * spec.delta();
    out.push_back(rms_gap(v, rbar));
  }
  return out;
}

/// A range so wide that projection never binds for data of moderate size,
/// which turns the bounded quantizer into the plain rounding quantizer.
inline QuantizerSpec unbounded_spec(double delta) { return QuantizerSpec(delta, delta * static_cast<double>(std::int64_t{1} << 40)); }

/// Concatenates the traces of an extended run (recorded with
/// `record_trace`); each call's values are shifted by the offset in force.
inline Vec iterative_error_ebq(const EbqOutcome& o, int n) {
  Vec out;
  double t = 0.0;
  Vec v(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < o.calls.size(); ++c) {
    const auto& tr = o.calls[c].trace;
    if (tr.size() % static_cast<std::size_t>(n) != 0) throw std::invalid_argument("trace is not node-complete");
    for (std::size_t row = 0; row < tr.size(); row += static_cast<std::size_t>(n)) {
      if (c > 0 && tr[row].k == 0) continue;  // restarts transmit nothing before their first step
      for (int i = 0; i < n; ++i) v[i] = tr[row + i].q_level + t;
      out.push_back(rms_gap(v, o.rbar));
    }
    if (o.calls[c].kind == OutcomeKind::Converged && c + 1 < o.calls.size())
      t += o.calls[c].value;
  }
  return out;
}

}  // namespace bqc
