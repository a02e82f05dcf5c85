#pragma once

// Extended quantized consensus: repeat the bounded-quantizer run, shifting
// the data by -sgn(x) L whenever the run settles on a boundary level, and
// accumulate the shifts in a common offset t.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bqc/bq_engine.hpp"
#include "bqc/param_select.hpp"

namespace bqc {

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EbqOptions {
  /// Require gamma0 <= delta/2 (rho <= delta / (2n(4L - delta))).
  bool enforce_gamma0 = true;
};

struct EbqOutcome {
  OutcomeKind kind = OutcomeKind::Unresolved;  // kind of the final call
  double t_star = 0.0;
  double x_bq = 0.0;
  std::vector<RunOutcome> calls;
  std::int64_t total_iterations = 0;
  double rbar = 0.0;       // mean of the original data
  double error = 0.0;      // |t* + x_bq - rbar|
  double radius = 0.0;     // (1 + 4 rho m/n) delta/2
  std::vector<std::string> warnings;

  std::int64_t call_bound = 1;  // ceil(|rbar| / L) + 1

  double consensus_value() const noexcept { return t_star + x_bq; }
};

/// (1 + 4 rho m/n) delta/2.
inline double ebq_error_bound(double rho, const Graph& g, const QuantizerSpec& spec) {
  return (1.0 + 4.0 * rho * g.m() / g.n()) * spec.delta() / 2.0;
}

inline EbqOutcome run_ebq(const BqConfig& cfg, const EbqOptions& opts = {}) {
  validate(cfg);
  const Graph& g = cfg.graph;
  const auto& spec = cfg.spec;
  if (opts.enforce_gamma0) {
    const double cap = rho_gamma_max(g.n(), spec);
    if (cfg.rho > cap * (1.0 + 1e-12))
      throw PreconditionError("rho=" + std::to_string(cfg.rho) + " exceeds " + std::to_string(cap) +
                              ", the largest step with gamma0 <= delta/2");
  }

  EbqOutcome out;
  out.rbar = mean(cfg.r);
  out.call_bound = static_cast<std::int64_t>(std::ceil(std::abs(out.rbar) / spec.range_l())) + 1;
  out.radius = ebq_error_bound(cfg.rho, g, spec);
  if (spec.range_l() < 5.0 * out.radius)
    out.warnings.push_back("range_l is small relative to the error radius; the offset guarantee assumes L >= 5x radius");

  // Each extra call moves |mean| by L toward zero, so this cap is only a
  // guard against a broken invariant.
  const std::int64_t hard_cap = 2 * out.call_bound + 4;

  BqConfig call = cfg;
  call.init.reset();
  const std::int64_t top = spec.max_level();
  while (true) {
    RunOutcome o = run(call);
    out.total_iterations += o.iterations;
    out.kind = o.kind;
    out.x_bq = o.value;
    const bool at_boundary = o.kind == OutcomeKind::Converged && (o.q_star == top || o.q_star == -top);
    out.calls.push_back(std::move(o));
    if (out.kind == OutcomeKind::Unresolved || !at_boundary) break;
    if (static_cast<std::int64_t>(out.calls.size()) >= hard_cap)
      throw std::logic_error("extended run exceeded its call bound");
    const double shift = out.calls.back().q_star > 0 ? spec.range_l() : -spec.range_l();
    out.t_star += shift;
    for (double& v : call.r) v -= shift;
  }
  out.error = std::abs(out.t_star + out.x_bq - out.rbar);
  return out;
}

/// Per-node -alpha_i + r_i - t* from a state of the final call, with r the
/// original data. These values are bounded by L + 8 rho |N_i| L.
inline Vec recovery_residuals(const IntState& final_state, double t_star, double rho, std::span<const double> r,
                              const Graph& g, const QuantizerSpec& spec) {
  Vec res(static_cast<std::size_t>(g.n()));
  for (int i = 0; i < g.n(); ++i) res[i] = -dual_value(final_state.a[i], rho, spec) + r[i] - t_star;
  return res;
}

}  // namespace bqc
