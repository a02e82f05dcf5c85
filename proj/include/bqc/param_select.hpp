#pragma once

// Step-size policies: the n/m heuristic, accuracy-driven ceilings, and the
// decreasing schedule that runs fixed blocks at geometrically smaller steps
// before a final run to detection.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bqc/bq_engine.hpp"

namespace bqc {

/// n/m, or 1 when the edge count is unknown.
inline double rho_heuristic(int n, std::optional<int> m = std::nullopt) {
  if (!m) return 1.0;
  if (*m <= 0 || n <= 0) throw std::invalid_argument("rho_heuristic: n and m must be positive");
  return static_cast<double>(n) / static_cast<double>(*m);
}

/// delta / (8 n L): small enough that the extended run lands within one
/// resolution of the average on any connected graph with n nodes.
inline double rho_for_resolution(int n, const QuantizerSpec& spec) {
  return spec.delta() / (8.0 * n * spec.range_l());
}

/// delta / (2n(4L - delta)), the largest rho with gamma0 == delta/2.
/// Infinite when 4L <= delta.
inline double rho_gamma_max(int n, const QuantizerSpec& spec) {
  const double denom = 2.0 * n * (4.0 * spec.range_l() - spec.delta());
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return spec.delta() / denom;
}

struct RhoSchedule {
  double rho0 = 1.0;
  std::int64_t factor = 10;
  std::int64_t block = 50;
  double floor = 1e-4;

  void validate() const {
    check_positive_rho(rho0);
    if (factor < 2) throw std::invalid_argument("schedule factor must be an integer >= 2");
    if (block < 1) throw std::invalid_argument("schedule block must be >= 1");
    if (!(floor > 0.0)) throw std::invalid_argument("schedule floor must be positive");
  }

  /// Step used in stage j: rho0 / factor^j.
  double stage_rho(int j) const { return rho0 / std::pow(static_cast<double>(factor), j); }

  /// Number of fixed-length stages (those with rho > floor).
  int block_stages() const {
    int j = 0;
    while (stage_rho(j) > floor) ++j;
    return j;
  }
};

struct ScheduleStage {
  double rho;
  std::int64_t first_iteration;  // cumulative index of the stage's first step
  std::int64_t iterations;
};

struct ScheduleOutcome {
  std::vector<ScheduleStage> stages;  // block stages followed by the final stage
  RunOutcome final_run;               // bounds evaluated at the final rho
  double final_rho = 0.0;
  /// Block iterations plus the final stage's convergence time.
  std::int64_t total_iterations = 0;
};

inline ScheduleOutcome run_with_schedule(const BqConfig& cfg, const RhoSchedule& sched) {
  sched.validate();
  BqConfig base = cfg;
  base.rho = sched.rho0;
  validate(base);

  const Graph& g = cfg.graph;
  IntState state = cfg.init ? *cfg.init : IntState::zeros(g.n());
  state.k = 0;

  ScheduleOutcome out;
  std::int64_t done = 0;
  const int stages = sched.block_stages();
  for (int j = 0; j < stages; ++j) {
    const double rho = sched.stage_rho(j);
    for (std::int64_t b = 0; b < sched.block; ++b) state = bq_step(state, g, rho, cfg.r, cfg.spec);
    out.stages.push_back({rho, done, sched.block});
    done += sched.block;
    // alpha = rho * delta * a is unchanged when rho shrinks by `factor` and a grows by it.
    for (auto& a : state.a) {
      if (std::abs(a) > (std::numeric_limits<std::int64_t>::max() / sched.factor))
        throw std::overflow_error("dual lattice overflow while rescaling for the next stage");
      a *= sched.factor;
    }
  }

  BqConfig last = cfg;
  last.rho = sched.stage_rho(stages);
  state.k = 0;
  last.init = state;
  out.final_run = run(last);
  out.final_rho = last.rho;
  out.stages.push_back({last.rho, done, out.final_run.iterations});
  out.total_iterations = done + (out.final_run.resolved() ? out.final_run.convergence_time() : out.final_run.iterations);
  return out;
}

}  // namespace bqc
