#pragma once

// Consensus ADMM with finite-bit bounded quantization, run as an exact
// state machine on an integer lattice.
//
// State: q_i = Q_b(x_i) / delta and a_i = alpha_i / (rho * delta). Both are
// integers, so the map (q, a) -> (q', a') is evaluated without drift and a
// revisit is detected by plain equality. The real x is carried along for
// reporting only; it is a function of the previous (q, a).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bqc/cadmm.hpp"
#include "bqc/graph.hpp"
#include "bqc/quantizer.hpp"
#include "bqc/state_table.hpp"

namespace bqc {

struct IntState {
  std::vector<std::int64_t> q;
  std::vector<std::int64_t> a;
  Vec x;
  std::int64_t k = 0;

  static IntState zeros(int n) {
    const auto sz = static_cast<std::size_t>(n);
    return {std::vector<std::int64_t>(sz, 0), std::vector<std::int64_t>(sz, 0), Vec(sz, 0.0), 0};
  }

  /// Arbitrary starting x with zero duals.
  static IntState from_x(std::span<const double> x0, const QuantizerSpec& spec) {
    IntState s = zeros(static_cast<int>(x0.size()));
    for (std::size_t i = 0; i < x0.size(); ++i) {
      s.x[i] = x0[i];
      s.q[i] = bounded_level(x0[i], spec);
    }
    return s;
  }

  bool same_lattice_point(const IntState& o) const noexcept { return q == o.q && a == o.a; }
};

/// Real dual value alpha_i = rho * delta * a_i.
inline double dual_value(std::int64_t a, double rho, const QuantizerSpec& spec) {
  return rho * spec.delta() * static_cast<double>(a);
}

/// One synchronous sweep:
///   x_i' = (rho*delta*(|N_i| q_i + sum_j q_j - a_i) + r_i) / (1 + 2 rho |N_i|)
///   q'   = Q_b(x') / delta
///   a'   = a + L_- q'
inline IntState bq_step(const IntState& s, const Graph& g, double rho, std::span<const double> r,
                        const QuantizerSpec& spec) {
  const int n = g.n();
  const double rd = rho * spec.delta();
  IntState out;
  out.q.resize(static_cast<std::size_t>(n));
  out.a.resize(static_cast<std::size_t>(n));
  out.x.resize(static_cast<std::size_t>(n));
  out.k = s.k + 1;
  for (int i = 0; i < n; ++i) {
    const std::int64_t deg = g.degree(i);
    std::int64_t acc = deg * s.q[i] - s.a[i];
    for (int j : g.neighbors(i)) acc += s.q[j];
    out.x[i] = (rd * static_cast<double>(acc) + r[i]) / (1.0 + 2.0 * rho * static_cast<double>(deg));
    out.q[i] = bounded_level(out.x[i], spec);
  }
  constexpr std::int64_t kLimit = std::int64_t{1} << 62;
  for (int i = 0; i < n; ++i) {
    std::int64_t lap = g.degree(i) * out.q[i];
    for (int j : g.neighbors(i)) lap -= out.q[j];
    const std::int64_t next = s.a[i] + lap;
    if (next > kLimit || next < -kLimit)
      throw std::overflow_error("dual lattice overflow at node " + std::to_string(i) + ", iteration " +
                                std::to_string(out.k));
    out.a[i] = next;
  }
  return out;
}

/// max{delta/2, 4 rho n L / (1 + 2 rho n)}.
inline double gamma0(double rho, int n, const QuantizerSpec& spec) {
  const double second = 4.0 * rho * n * spec.range_l() / (1.0 + 2.0 * rho * n);
  return std::max(spec.delta() / 2.0, second);
}

struct BoundSet {
  double gamma0 = 0.0;
  double bound_convergent = 0.0;  // (1 + 4 rho m/n) delta/2
  double bound_cyclic = 0.0;      // (1 + 4 rho m/n) gamma0
  double state_count_b = 0.0;     // per-node state bound B
  /// gamma0 with L replaced by delta; only meaningful when every node
  /// alternates between two adjacent levels.
  double bound_cyclic_two_level = 0.0;
};

inline BoundSet bounds(double rho, const Graph& g, const QuantizerSpec& spec, double max_abs_r = 0.0) {
  const double n = g.n();
  const double m = g.m();
  const double factor = 1.0 + 4.0 * rho * m / n;
  const double d = spec.delta();
  const double l = spec.range_l();
  BoundSet b;
  b.gamma0 = gamma0(rho, g.n(), spec);
  b.bound_convergent = factor * d / 2.0;
  b.bound_cyclic = factor * b.gamma0;
  b.state_count_b = (2.0 * l / d + 1.0) * ((l + max_abs_r) / (rho * d) + 6.0 * n * l / d);
  b.bound_cyclic_two_level = factor * std::max(d / 2.0, 4.0 * rho * n * d / (1.0 + 2.0 * rho * n));
  return b;
}

/// |alpha_i| <= (1 + 6 rho |N_i|) L + |r_i| for every node.
inline bool dual_bound_holds(const IntState& s, const Graph& g, double rho, std::span<const double> r,
                             const QuantizerSpec& spec, double* worst_ratio = nullptr) {
  bool ok = true;
  for (int i = 0; i < g.n(); ++i) {
    const double lhs = std::abs(dual_value(s.a[i], rho, spec));
    const double rhs = (1.0 + 6.0 * rho * g.degree(i)) * spec.range_l() + std::abs(r[i]);
    if (worst_ratio) *worst_ratio = std::max(*worst_ratio, lhs / rhs);
    if (lhs > rhs * (1.0 + 1e-12)) ok = false;
  }
  return ok;
}

enum class OutcomeKind { Converged, Cyclic, Unresolved };

inline const char* to_string(OutcomeKind k) noexcept {
  switch (k) {
    case OutcomeKind::Converged: return "converged";
    case OutcomeKind::Cyclic: return "cyclic";
    case OutcomeKind::Unresolved: return "unresolved";
  }
  return "unknown";
}

struct TraceRow {
  std::int64_t k;
  int node;
  double x;
  double q_level;
  double alpha;
};

struct RunDiagnostics {
  std::int64_t dual_bound_violations = 0;
  double dual_bound_worst_ratio = 0.0;
  bool error_bound_holds = true;        // consensus error within its radius
  bool cyclic_x_range_holds = true;     // |x_i| <= L + 4 rho|N_i|L/(1+2 rho|N_i|) over a period
  bool two_level_cycle = true;          // each node visits at most two adjacent levels in the cycle
  bool used_brent = false;
};

struct RunOutcome {
  OutcomeKind kind = OutcomeKind::Unresolved;
  std::int64_t k0 = 0;      // first iteration whose (q, a) recurs
  std::int64_t period = 0;  // 1 when converged
  std::int64_t q_star = 0;  // converged level in units of delta
  /// Per-node sum of levels over one period; all entries equal (cyclic case).
  std::vector<std::int64_t> cycle_level_sums;
  double value = 0.0;       // consensus value: q_star*delta or period sample average
  double rbar = 0.0;
  double error = 0.0;       // |value - T_X(rbar)| when converged, |value - rbar| when cyclic
  double radius = 0.0;      // bound the error is checked against
  std::int64_t iterations = 0;
  IntState final_state;     // a state on the detected cycle (or the last state if unresolved)
  BoundSet bounds;
  RunDiagnostics diagnostics;
  std::vector<TraceRow> trace;

  /// k0 for convergent runs, k0 + T for cyclic runs.
  std::int64_t convergence_time() const noexcept { return kind == OutcomeKind::Cyclic ? k0 + period : k0; }
  bool resolved() const noexcept { return kind != OutcomeKind::Unresolved; }
};

struct BqConfig {
  Graph graph;
  Vec r;
  double rho = 1.0;
  QuantizerSpec spec{1.0, 1.0};
  std::int64_t max_iter = 1'000'000;
  std::optional<IntState> init;
  /// When set, exactly this many iterations are executed even after the
  /// recurrence is found; no recurrence inside the budget means Unresolved.
  std::optional<std::int64_t> fixed_budget;
  bool record_trace = false;
  std::size_t table_max_states = StateTable::kDefaultMaxStates;
  std::size_t table_byte_cap = StateTable::kDefaultByteCap;
};

inline void validate(const BqConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.graph.n());
  if (cfg.r.size() != n) throw std::invalid_argument("data vector length does not match node count");
  for (double v : cfg.r)
    if (!std::isfinite(v)) throw std::invalid_argument("data vector contains non-finite values");
  check_positive_rho(cfg.rho);
  if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (cfg.fixed_budget && *cfg.fixed_budget < 1) throw std::invalid_argument("fixed budget must be at least 1");
  if (cfg.init) {
    const auto& s = *cfg.init;
    if (s.q.size() != n || s.a.size() != n || s.x.size() != n)
      throw std::invalid_argument("initial state has wrong dimension");
    std::int64_t sum = 0;
    for (auto v : s.a) sum += v;
    if (sum != 0) throw std::invalid_argument("initial duals must sum to zero");
    for (auto v : s.q)
      if (v > cfg.spec.max_level() || v < -cfg.spec.max_level())
        throw std::invalid_argument("initial level outside the quantizer range");
  }
}

namespace detail {

inline std::vector<std::int64_t> pack(const IntState& s) {
  std::vector<std::int64_t> v;
  v.reserve(s.q.size() + s.a.size());
  v.insert(v.end(), s.q.begin(), s.q.end());
  v.insert(v.end(), s.a.begin(), s.a.end());
  return v;
}

inline void append_trace(std::vector<TraceRow>& trace, const IntState& s, double rho, const QuantizerSpec& spec) {
  for (std::size_t i = 0; i < s.q.size(); ++i)
    trace.push_back({s.k, static_cast<int>(i), s.x[i], static_cast<double>(s.q[i]) * spec.delta(),
                     dual_value(s.a[i], rho, spec)});
}

/// Brent's cycle finding from `start` (iteration start.k). Returns
/// (first recurring iteration, period) or nullopt when the recurrence does not
/// complete within `max_iter`.
template <class Step, class Visit>
std::optional<std::pair<std::int64_t, std::int64_t>> brent(const IntState& start, Step&& step, Visit&& visit,
                                                           std::int64_t max_iter) {
  const std::int64_t hare_cap = 3 * max_iter + 3;
  std::int64_t power = 1;
  std::int64_t lam = 1;
  IntState tortoise = start;
  IntState hare = step(start);
  visit(hare);
  while (!tortoise.same_lattice_point(hare)) {
    if (hare.k > hare_cap) return std::nullopt;
    if (power == lam) {
      tortoise = hare;
      power *= 2;
      lam = 0;
    }
    hare = step(hare);
    visit(hare);
    ++lam;
  }
  tortoise = start;
  hare = start;
  for (std::int64_t i = 0; i < lam; ++i) hare = step(hare);
  std::int64_t mu = 0;
  while (!tortoise.same_lattice_point(hare)) {
    tortoise = step(tortoise);
    hare = step(hare);
    ++mu;
  }
  return std::make_pair(start.k + mu, lam);
}

}  // namespace detail

/// Runs the quantized iteration until the lattice state (q, a) first recurs,
/// then classifies the outcome and evaluates its error bound.
inline RunOutcome run(const BqConfig& cfg) {
  validate(cfg);
  const Graph& g = cfg.graph;
  const auto& spec = cfg.spec;
  const double rho = cfg.rho;
  const std::span<const double> r(cfg.r);
  const std::int64_t limit = cfg.fixed_budget ? *cfg.fixed_budget : cfg.max_iter;

  RunOutcome out;
  out.rbar = mean(r);
  double max_abs_r = 0.0;
  for (double v : r) max_abs_r = std::max(max_abs_r, std::abs(v));
  out.bounds = bounds(rho, g, spec, max_abs_r);

  auto step = [&](const IntState& s) { return bq_step(s, g, rho, r, spec); };
  auto check_duals = [&](const IntState& s) {
    if (!dual_bound_holds(s, g, rho, r, spec, &out.diagnostics.dual_bound_worst_ratio))
      ++out.diagnostics.dual_bound_violations;
  };

  IntState state = cfg.init ? *cfg.init : IntState::zeros(g.n());
  state.k = 0;
  if (cfg.record_trace) detail::append_trace(out.trace, state, rho, spec);

  StateTable table(2 * static_cast<std::size_t>(g.n()), cfg.table_max_states, cfg.table_byte_cap);
  std::optional<std::pair<std::int64_t, std::int64_t>> found;  // (k0, period)
  std::optional<IntState> first_state;
  std::optional<IntState> cycle_state;
  bool brent_mode = false;

  while (state.k < limit) {
    state = step(state);
    check_duals(state);
    if (cfg.record_trace) detail::append_trace(out.trace, state, rho, spec);
    if (!first_state) first_state = state;
    if (found) continue;  // fixed-budget mode keeps stepping
    if (table.full()) {
      brent_mode = true;
      break;
    }
    if (auto prev = table.find_or_insert(detail::pack(state), state.k)) {
      found = std::make_pair(*prev, state.k - *prev);
      cycle_state = state;
      if (!cfg.fixed_budget) break;
    }
  }

  if (brent_mode) {
    out.diagnostics.used_brent = true;
    found = detail::brent(*first_state, step, check_duals, limit);
    if (found) {
      IntState s = *first_state;
      while (s.k < found->first) s = step(s);
      cycle_state = s;
    }
  }

  out.iterations = brent_mode ? (found ? found->first + found->second : limit) : state.k;
  out.final_state = cycle_state ? *cycle_state : state;

  if (!found || found->first + found->second > limit) {
    out.kind = OutcomeKind::Unresolved;
    out.final_state = state;
    return out;
  }

  out.k0 = found->first;
  out.period = found->second;

  // Walk one period from a state on the cycle.
  const int n = g.n();
  std::vector<std::int64_t> sums(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> lo(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::min());
  IntState s = *cycle_state;
  for (std::int64_t l = 0; l < out.period; ++l) {
    s = step(s);
    for (int i = 0; i < n; ++i) {
      sums[i] += s.q[i];
      lo[i] = std::min(lo[i], s.q[i]);
      hi[i] = std::max(hi[i], s.q[i]);
      const double deg = g.degree(i);
      const double xcap = spec.range_l() + 4.0 * rho * deg * spec.range_l() / (1.0 + 2.0 * rho * deg);
      if (std::abs(s.x[i]) > xcap * (1.0 + 1e-12)) out.diagnostics.cyclic_x_range_holds = false;
    }
  }
  if (!s.same_lattice_point(*cycle_state)) throw std::logic_error("cycle walk did not return to its start");
  for (int i = 0; i < n; ++i)
    if (hi[i] - lo[i] > 1) out.diagnostics.two_level_cycle = false;

  if (!std::all_of(sums.begin(), sums.end(), [&](std::int64_t v) { return v == sums[0]; }))
    throw std::logic_error("per-node period sums differ; the lattice dual is no longer conserved");

  out.cycle_level_sums = sums;
  const double rbar_proj = project(out.rbar, spec.range_l());
  if (out.period == 1) {
    out.kind = OutcomeKind::Converged;
    out.q_star = sums[0];
    out.value = static_cast<double>(out.q_star) * spec.delta();
    out.error = std::abs(out.value - rbar_proj);
    out.radius = out.bounds.bound_convergent;
  } else {
    out.kind = OutcomeKind::Cyclic;
    out.value = spec.delta() * static_cast<double>(sums[0]) / static_cast<double>(out.period);
    out.error = std::abs(out.value - out.rbar);
    out.radius = out.bounds.bound_cyclic;
  }
  out.diagnostics.error_bound_holds = out.error <= out.radius;
  return out;
}

struct CycleStats {
  std::int64_t period;
  std::vector<std::int64_t> level_sums;  // per node, units of delta
  double xbar;                           // common sample average
};

inline CycleStats cycle_stats(const RunOutcome& o, const QuantizerSpec& spec) {
  if (o.kind != OutcomeKind::Cyclic) throw std::invalid_argument("cycle_stats requires a cyclic outcome");
  return {o.period, o.cycle_level_sums, spec.delta() * static_cast<double>(o.cycle_level_sums.front()) / o.period};
}

enum class Forcing { None, ConvergesUnknownLevel, ConvergesToBoundary };

struct ForcedLevel {
  Forcing forcing = Forcing::None;
  double level = 0.0;  // sgn(rbar) L when forcing == ConvergesToBoundary
};

/// If |rbar| - L > (1 + 4 rho m/n) gamma0 convergence is forced; with
/// rho < n/(4m) as well, the common level is sgn(rbar) L.
inline ForcedLevel forced_level(double rho, const Graph& g, const QuantizerSpec& spec, double rbar) {
  const auto b = bounds(rho, g, spec);
  if (!(std::abs(rbar) - spec.range_l() > b.bound_cyclic)) return {};
  if (rho < static_cast<double>(g.n()) / (4.0 * g.m()))
    return {Forcing::ConvergesToBoundary, rbar > 0 ? spec.range_l() : -spec.range_l()};
  return {Forcing::ConvergesUnknownLevel, 0.0};
}

}  // namespace bqc
