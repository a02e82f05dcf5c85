#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bqc/bq_engine.hpp"

namespace {

// Exact rational numbers for hand-sized oracles.
struct Frac {
  long long p, q;
  Frac(long long a = 0, long long b = 1) : p(a), q(b) { norm(); }
  void norm() {
    if (q < 0) p = -p, q = -q;
    const long long g = std::gcd(p < 0 ? -p : p, q);
    if (g > 1) p /= g, q /= g;
  }
  friend Frac operator+(Frac a, Frac b) { return {a.p * b.q + b.p * a.q, a.q * b.q}; }
  friend Frac operator-(Frac a, Frac b) { return {a.p * b.q - b.p * a.q, a.q * b.q}; }
  friend Frac operator*(Frac a, Frac b) { return {a.p * b.p, a.q * b.q}; }
  friend Frac operator/(Frac a, Frac b) { return {a.p * b.q, a.q * b.p}; }
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

long long floor_div(long long a, long long b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

// Smallest integer t with t >= x - 1/2, i.e. the level whose half-open cell holds x (delta = 1).
long long level_of(Frac x, long long cap) {
  const Frac y = x - Frac(1, 2);
  long long t = -floor_div(-y.p, y.q);
  return std::clamp(t, -cap, cap);
}

struct ExactState {
  std::vector<long long> q, a;
  std::vector<Frac> x;
};

ExactState exact_step(const ExactState& s, const bqc::Graph& g, Frac rho, const std::vector<Frac>& r, long long cap) {
  const int n = g.n();
  ExactState o{std::vector<long long>(n), std::vector<long long>(n), std::vector<Frac>(n)};
  for (int i = 0; i < n; ++i) {
    long long acc = g.degree(i) * s.q[i] - s.a[i];
    for (int j : g.neighbors(i)) acc += s.q[j];
    o.x[i] = (rho * Frac(acc) + r[i]) / (Frac(1) + Frac(2) * rho * Frac(g.degree(i)));
    o.q[i] = level_of(o.x[i], cap);
  }
  for (int i = 0; i < n; ++i) {
    long long lap = g.degree(i) * o.q[i];
    for (int j : g.neighbors(i)) lap -= o.q[j];
    o.a[i] = s.a[i] + lap;
  }
  return o;
}

bqc::BqConfig two_node_cfg() {
  bqc::BqConfig cfg{bqc::build_graph(2, {{0, 1}}), {0.3, 1.7}, 0.25, bqc::QuantizerSpec(1.0, 5.0)};
  return cfg;
}

TEST(BqStep, TwoNodeStepsMatchRationalOracle) {
  const auto cfg = two_node_cfg();
  const std::vector<Frac> r{Frac(3, 10), Frac(17, 10)};
  ExactState e{{0, 0}, {0, 0}, {Frac(0), Frac(0)}};
  auto s = bqc::IntState::zeros(2);

  e = exact_step(e, cfg.graph, Frac(1, 4), r, 5);
  s = bqc::bq_step(s, cfg.graph, cfg.rho, cfg.r, cfg.spec);
  EXPECT_EQ(e.x[0].p * 5, e.x[0].q);  // x0 = 1/5
  EXPECT_EQ(e.x[1].p * 15, e.x[1].q * 17);
  EXPECT_NEAR(s.x[0], 0.2, 1e-15);
  EXPECT_NEAR(s.x[1], 17.0 / 15.0, 1e-15);
  EXPECT_EQ(s.q, (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(s.a, (std::vector<std::int64_t>{-1, 1}));

  e = exact_step(e, cfg.graph, Frac(1, 4), r, 5);
  s = bqc::bq_step(s, cfg.graph, cfg.rho, cfg.r, cfg.spec);
  EXPECT_NEAR(s.x[0], e.x[0].value(), 1e-15);
  EXPECT_NEAR(s.x[0], 8.0 / 15.0, 1e-15);
  EXPECT_NEAR(s.x[1], 17.0 / 15.0, 1e-15);
  EXPECT_EQ(s.q, (std::vector<std::int64_t>{1, 1}));
  EXPECT_EQ(s.a, (std::vector<std::int64_t>{-1, 1}));
  EXPECT_EQ(s.k, 2);
}

TEST(BqStep, ConsensusStateIsFixed) {
  const auto cfg = two_node_cfg();
  bqc::IntState s{{1, 1}, {-1, 1}, {0.0, 0.0}, 7};
  const auto t = bqc::bq_step(s, cfg.graph, cfg.rho, cfg.r, cfg.spec);
  EXPECT_TRUE(t.same_lattice_point(s));
}

TEST(BqStep, ExactOracleAgreesOnLongerRuns) {
  bqc::Xoshiro256pp rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3 + static_cast<int>(rng.uniform_index(5));
    const auto g = bqc::random_connected_graph(n, n - 1 + static_cast<int>(rng.uniform_index(2)), rng);
    std::vector<Frac> rf;
    bqc::Vec r;
    for (int i = 0; i < n; ++i) {
      const long long num = static_cast<long long>(rng.uniform_index(401)) - 200;
      rf.emplace_back(num, 10);
      r.push_back(static_cast<double>(num) / 10.0);
    }
    const bqc::QuantizerSpec spec(1.0, 8.0);
    ExactState e{std::vector<long long>(n), std::vector<long long>(n), std::vector<Frac>(n)};
    auto s = bqc::IntState::zeros(n);
    for (int k = 0; k < 15; ++k) {
      e = exact_step(e, g, Frac(1, 8), rf, 8);
      s = bqc::bq_step(s, g, 0.125, r, spec);
      for (int i = 0; i < n; ++i) {
        ASSERT_EQ(s.q[i], e.q[i]);
        ASSERT_EQ(s.a[i], e.a[i]);
      }
    }
  }
}

TEST(Run, TwoNodeConvergesAtSecondIteration) {
  const auto o = bqc::run(two_node_cfg());
  ASSERT_EQ(o.kind, bqc::OutcomeKind::Converged);
  EXPECT_EQ(o.k0, 2);
  EXPECT_EQ(o.period, 1);
  EXPECT_EQ(o.q_star, 1);
  EXPECT_DOUBLE_EQ(o.value, 1.0);
  EXPECT_NEAR(o.rbar, 1.0, 1e-15);
  EXPECT_EQ(o.convergence_time(), 2);
  EXPECT_TRUE(o.diagnostics.error_bound_holds);
}

TEST(Run, LargeRhoConvergesImmediatelyToZero) {
  bqc::Xoshiro256pp rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = bqc::random_connected_graph(8, 7 + rep % 10, rng);
    bqc::Vec r(8);
    double mx = 0;
    for (auto& v : r) mx = std::max(mx, std::abs(v = rng.normal(0.0, 20.0)));
    bqc::BqConfig cfg{g, r, mx * 1.01, bqc::QuantizerSpec(1.0, 30.0)};
    const auto o = bqc::run(cfg);
    ASSERT_EQ(o.kind, bqc::OutcomeKind::Converged);
    EXPECT_EQ(o.k0, 1);
    EXPECT_EQ(o.q_star, 0);
  }
}

TEST(Run, DeterministicOutcome) {
  bqc::Xoshiro256pp rng(6);
  const auto g = bqc::random_connected_graph(15, 30, rng);
  bqc::Vec r(15);
  for (auto& v : r) v = rng.normal(3.0, 10.0);
  bqc::BqConfig cfg{g, r, 0.5, bqc::QuantizerSpec(1.0, 30.0)};
  cfg.record_trace = true;
  const auto a = bqc::run(cfg), b = bqc::run(cfg);
  EXPECT_EQ(a.kind, b.kind);
  EXPECT_EQ(a.k0, b.k0);
  EXPECT_EQ(a.period, b.period);
  EXPECT_EQ(a.final_state.q, b.final_state.q);
  EXPECT_EQ(a.final_state.a, b.final_state.a);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].x, b.trace[i].x);
}

TEST(Run, BrentAgreesWithTable) {
  bqc::Xoshiro256pp rng(17);
  int cyclic = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 5 + rep % 6;
    const auto g = rep % 2 ? bqc::star_graph(n) : bqc::random_connected_graph(n, n + 2, rng);
    bqc::Vec r(n);
    const double shift = rng.normal(0.0, 5.0);
    for (auto& v : r) v = rng.normal(0.0, 10.0) + shift;
    const double rho = 0.5 * static_cast<double>(n) / g.m() * (0.5 + rng.uniform());
    bqc::BqConfig cfg{g, r, rho, bqc::QuantizerSpec(1.0, 30.0)};
    const auto a = bqc::run(cfg);
    cfg.table_max_states = 0;
    const auto b = bqc::run(cfg);
    EXPECT_TRUE(b.diagnostics.used_brent);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.k0, b.k0);
    EXPECT_EQ(a.period, b.period);
    EXPECT_EQ(a.q_star, b.q_star);
    EXPECT_EQ(a.cycle_level_sums, b.cycle_level_sums);
    cyclic += a.kind == bqc::OutcomeKind::Cyclic;
  }
  RecordProperty("cyclic_cases", cyclic);
}

TEST(Run, UnresolvedWhenBudgetTooSmall) {
  bqc::Xoshiro256pp rng(1);
  const auto g = bqc::random_connected_graph(10, 12, rng);
  bqc::Vec r(10);
  for (auto& v : r) v = rng.normal(0.0, 10.0);
  bqc::BqConfig cfg{g, r, 1e-3, bqc::QuantizerSpec(1.0, 30.0)};
  cfg.max_iter = 3;
  const auto o = bqc::run(cfg);
  EXPECT_EQ(o.kind, bqc::OutcomeKind::Unresolved);
  EXPECT_EQ(o.iterations, 3);
  EXPECT_FALSE(o.resolved());
}

TEST(Run, FixedBudgetKeepsStepping) {
  auto cfg = two_node_cfg();
  cfg.fixed_budget = 50;
  cfg.record_trace = true;
  const auto o = bqc::run(cfg);
  EXPECT_EQ(o.kind, bqc::OutcomeKind::Converged);
  EXPECT_EQ(o.k0, 2);
  EXPECT_EQ(o.iterations, 50);
  EXPECT_EQ(o.trace.size(), 51u * 2u);
}

TEST(Run, ConfigValidation) {
  auto cfg = two_node_cfg();
  cfg.r = {1.0};
  EXPECT_THROW(bqc::run(cfg), std::invalid_argument);
  cfg = two_node_cfg();
  cfg.rho = 0.0;
  EXPECT_THROW(bqc::run(cfg), std::invalid_argument);
  cfg = two_node_cfg();
  cfg.max_iter = 0;
  EXPECT_THROW(bqc::run(cfg), std::invalid_argument);
  cfg = two_node_cfg();
  cfg.init = bqc::IntState{{0, 0}, {1, 0}, {0, 0}, 0};
  EXPECT_THROW(bqc::run(cfg), std::invalid_argument);
}

// Invariants along whole trajectories of random instances.
TEST(Run, TrajectoryInvariants) {
  bqc::Xoshiro256pp rng(44);
  const bqc::QuantizerSpec spec(1.0, 30.0);
  for (int rep = 0; rep < 80; ++rep) {
    const int n = 4 + static_cast<int>(rng.uniform_index(10));
    const auto g = bqc::random_connected_graph(n, n - 1 + static_cast<int>(rng.uniform_index(n)), rng);
    bqc::Vec r(n);
    const double r0 = rng.normal(0.0, 5.0);
    for (auto& v : r) v = rng.normal(0.0, 10.0) + r0;
    const double rho = std::pow(10.0, rng.uniform() * 3.0 - 2.0);
    auto s = bqc::IntState::zeros(n);
    for (int k = 0; k < 300; ++k) {
      s = bqc::bq_step(s, g, rho, r, spec);
      EXPECT_EQ(std::accumulate(s.a.begin(), s.a.end(), std::int64_t{0}), 0);
      for (auto q : s.q) EXPECT_LE(std::abs(q), spec.max_level());
      EXPECT_TRUE(bqc::dual_bound_holds(s, g, rho, r, spec));
    }
    const auto o = bqc::run({g, r, rho, spec});
    ASSERT_TRUE(o.resolved());
    EXPECT_LE(o.error, o.radius);
    if (o.kind == bqc::OutcomeKind::Converged) {
      for (auto q : o.final_state.q) EXPECT_EQ(q, o.q_star);
    } else {
      EXPECT_GE(o.period, 2);
      const auto cs = bqc::cycle_stats(o, spec);
      for (auto v : cs.level_sums) EXPECT_EQ(v, cs.level_sums[0]);
      EXPECT_TRUE(o.diagnostics.cyclic_x_range_holds);
    }
  }
}

TEST(CycleStats, RejectsNonCyclic) {
  const auto o = bqc::run(two_node_cfg());
  EXPECT_THROW(bqc::cycle_stats(o, bqc::QuantizerSpec(1.0, 5.0)), std::invalid_argument);
}

TEST(Gamma0, Examples) {
  const bqc::QuantizerSpec s25(1.0, 25.0);
  EXPECT_DOUBLE_EQ(bqc::gamma0(1.0 / (8.0 * 50 * 25), 50, s25), 0.5);
  EXPECT_NEAR(bqc::gamma0(1e9, 50, s25), 50.0, 1e-6);
  const double cap = 1.0 / (2.0 * 50 * (4.0 * 25 - 1.0));
  EXPECT_DOUBLE_EQ(bqc::gamma0(cap * 0.999, 50, s25), 0.5);
  EXPECT_GT(bqc::gamma0(cap * 1.01, 50, s25), 0.5);
}

TEST(Bounds, Examples) {
  bqc::Xoshiro256pp rng(1);
  const bqc::QuantizerSpec spec(1.0, 25.0);
  const auto g1 = bqc::random_connected_graph(50, 100, rng);
  const auto b1 = bqc::bounds(0.5, g1, spec);
  EXPECT_DOUBLE_EQ(b1.bound_convergent, 2.5);
  EXPECT_GE(b1.gamma0, 0.5);
  const auto g2 = bqc::random_connected_graph(75, 200, rng);
  EXPECT_NEAR(bqc::bounds(0.5, g2, spec).bound_convergent, (1.0 + 16.0 / 3.0) / 2.0, 1e-12);
  const auto b3 = bqc::bounds(1e-5, g1, spec);
  EXPECT_EQ(b3.gamma0, 0.5);
  EXPECT_DOUBLE_EQ(b3.bound_cyclic, b3.bound_convergent);
  // B = (2L/delta + 1)((L + max|r|)/(rho delta) + 6nL/delta).
  const auto b4 = bqc::bounds(0.5, g1, spec, 10.0);
  EXPECT_DOUBLE_EQ(b4.state_count_b, 51.0 * (35.0 / 0.5 + 6.0 * 50 * 25));
}

TEST(ForcedLevel, Examples) {
  const auto g = bqc::build_graph(2, {{0, 1}});
  const bqc::QuantizerSpec spec(1.0, 5.0);
  const auto f = bqc::forced_level(0.01, g, spec, 13.0);
  EXPECT_EQ(f.forcing, bqc::Forcing::ConvergesToBoundary);
  EXPECT_EQ(f.level, 5.0);
  EXPECT_EQ(bqc::forced_level(0.01, g, spec, -13.0).level, -5.0);
  EXPECT_EQ(bqc::forced_level(0.01, g, spec, 0.0).forcing, bqc::Forcing::None);
  // rho above n/(4m) = 0.5: convergence forced, level not predicted.
  const auto u = bqc::forced_level(0.6, g, spec, 40.0);
  EXPECT_EQ(u.forcing, bqc::Forcing::ConvergesUnknownLevel);
}

TEST(ForcedLevel, ForcedRunsHitBoundary) {
  bqc::Xoshiro256pp rng(808);
  const bqc::QuantizerSpec spec(1.0, 10.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 5 + static_cast<int>(rng.uniform_index(8));
    const auto g = bqc::random_connected_graph(n, n + static_cast<int>(rng.uniform_index(n)), rng);
    const double rho = n / (4.0 * g.m()) * (0.2 + 0.7 * rng.uniform());
    bqc::Vec r(n);
    const double sign = rep % 2 ? 1.0 : -1.0;
    const double centre = sign * (spec.range_l() + bqc::bounds(rho, g, spec).bound_cyclic + 1.0 + 20.0 * rng.uniform());
    for (auto& v : r) v = centre + rng.normal(0.0, 3.0);
    const double rbar = bqc::mean(r);
    const auto f = bqc::forced_level(rho, g, spec, rbar);
    if (f.forcing != bqc::Forcing::ConvergesToBoundary) continue;
    const auto o = bqc::run({g, r, rho, spec});
    ASSERT_EQ(o.kind, bqc::OutcomeKind::Converged);
    EXPECT_EQ(static_cast<double>(o.q_star) * spec.delta(), f.level);
  }
}

// Projection-form reference written against real-valued duals: the
// constrained CADMM update with every transmitted value rounded.
TEST(BqStep, MatchesProjectionFormOnRandomStates) {
  bqc::Xoshiro256pp rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_index(9));
    const auto g = bqc::random_connected_graph(n, n - 1 + static_cast<int>(rng.uniform_index(bqc::max_edge_count(n) - n + 2)), rng);
    const double delta = rep % 3 == 0 ? 0.5 : 1.0;
    const bqc::QuantizerSpec spec(delta, delta * (5 + rng.uniform_index(20)));
    const double rho = std::pow(2.0, static_cast<int>(rng.uniform_index(10)) - 7);
    bqc::Vec r(n), xprev(n), alpha(n);
    bqc::IntState s = bqc::IntState::zeros(n);
    for (int i = 0; i < n; ++i) {
      r[i] = rng.normal(0.0, 15.0);
      xprev[i] = rng.normal(0.0, 2.0 * spec.range_l());
      s.q[i] = bqc::bounded_level(xprev[i], spec);
    }
    for (int i = 0; i + 1 < n; ++i) {
      const auto v = static_cast<std::int64_t>(rng.uniform_index(41)) - 20;
      s.a[i] += v;
      s.a[i + 1] -= v;
    }
    for (int i = 0; i < n; ++i) alpha[i] = rho * delta * static_cast<double>(s.a[i]);

    bqc::Vec xn(n), qn(n);
    for (int i = 0; i < n; ++i) {
      double nb = 0.0;
      for (int j : g.neighbors(i)) nb += bqc::bounded_quantize(xprev[j], spec);
      xn[i] = (rho * g.degree(i) * bqc::bounded_quantize(xprev[i], spec) + rho * nb - alpha[i] + r[i]) /
              (1.0 + 2.0 * rho * g.degree(i));
      qn[i] = bqc::round_quantize(bqc::project(xn[i], spec.range_l()), delta);
    }
    const auto t = bqc::bq_step(s, g, rho, r, spec);
    for (int i = 0; i < n; ++i) {
      double lap = g.degree(i) * qn[i];
      for (int j : g.neighbors(i)) lap -= qn[j];
      const double an = alpha[i] + rho * lap;
      ASSERT_EQ(static_cast<double>(t.q[i]) * delta, qn[i]);
      ASSERT_EQ(static_cast<double>(t.a[i]), std::round(an / (rho * delta)));
      ASSERT_NEAR(an / (rho * delta), std::round(an / (rho * delta)), 1e-6);
    }
  }
}

}  // namespace
