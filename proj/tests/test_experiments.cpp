#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bqc/io.hpp"

namespace {

bqc::ScenarioConfig small_scenario(bqc::Algorithm alg) {
  bqc::ScenarioConfig c;
  c.graph = {bqc::GraphFamily::RandomConnected, 8, 12};
  c.data = {0.0, 10.0, 5.0, 0.0};
  c.rho.kind = bqc::RhoKind::Heuristic;
  c.rho.value = 1.0;
  c.algorithm = alg;
  c.runs = 12;
  c.seed = 7;
  c.max_iter = 100000;
  return c;
}

std::string jsonl(const std::vector<bqc::RunRecord>& recs) {
  std::ostringstream os;
  bqc::write_jsonl(os, recs);
  return os.str();
}

}  // namespace

TEST(SampleData, ZeroSpreadIsConstant) {
  bqc::Xoshiro256pp rng(1);
  const auto r = bqc::sample_data({3.5, 0.0, 0.0, 1.5}, 6, rng);
  for (double v : r) EXPECT_EQ(v, 5.0);
}

TEST(SampleData, SameSeedSameVector) {
  bqc::Xoshiro256pp a(99), b(99);
  EXPECT_EQ(bqc::sample_data({1, 2, 3, 0}, 50, a), bqc::sample_data({1, 2, 3, 0}, 50, b));
}

TEST(SampleData, MomentsOfShiftedNormal) {
  // r_i = mean + std*z_i + r0 with one r0 per vector; pooling many vectors
  // gives variance std^2 + shift^2 = 100 + 25.
  bqc::Xoshiro256pp rng(2024);
  const int vectors = 20000, n = 5;
  double s = 0.0, s2 = 0.0;
  for (int v = 0; v < vectors; ++v)
    for (double x : bqc::sample_data({4.0, 10.0, 5.0, 0.0}, n, rng)) {
      s += x;
      s2 += x * x;
    }
  const double count = static_cast<double>(vectors) * n;
  const double mu = s / count;
  const double var = s2 / count - mu * mu;
  EXPECT_NEAR(mu, 4.0, 3.0 * std::sqrt(125.0 / vectors));
  EXPECT_NEAR(var, 125.0, 0.05 * 125.0);
}

TEST(Scenario, RecordsOrderedByRun) {
  const auto recs = bqc::run_scenario(small_scenario(bqc::Algorithm::Bq));
  ASSERT_EQ(recs.size(), 12u);
  for (std::size_t j = 0; j < recs.size(); ++j) {
    EXPECT_EQ(recs[j].run, static_cast<std::int64_t>(j));
    EXPECT_TRUE(recs[j].failure.empty()) << recs[j].failure;
    EXPECT_NE(recs[j].kind, bqc::OutcomeKind::Unresolved);
    EXPECT_TRUE(recs[j].bound_holds);
    EXPECT_EQ(recs[j].dual_bound_violations, 0);
  }
}

TEST(Scenario, ThreadsDoNotChangeOutput) {
  for (auto alg : {bqc::Algorithm::Bq, bqc::Algorithm::Ebq, bqc::Algorithm::Cadmm}) {
    auto c = small_scenario(alg);
    if (alg == bqc::Algorithm::Ebq) {
      c.rho.kind = bqc::RhoKind::Fixed;
      c.rho.value = 1e-3;
    }
    const auto serial = jsonl(bqc::run_scenario(c));
    c.parallel = 4;
    EXPECT_EQ(jsonl(bqc::run_scenario(c)), serial) << bqc::to_string(alg);
    EXPECT_EQ(jsonl(bqc::run_scenario(c)), serial) << bqc::to_string(alg);
  }
}

TEST(Scenario, ExpandRunIsPrefixStable) {
  auto c = small_scenario(bqc::Algorithm::Bq);
  const auto a = bqc::expand_run(c, 5);
  c.runs = 100;
  const auto b = bqc::expand_run(c, 5);
  EXPECT_EQ(a.r, b.r);
  EXPECT_EQ(a.graph.edges(), b.graph.edges());
}

TEST(Scenario, CadmmReachesTolerance) {
  auto c = small_scenario(bqc::Algorithm::Cadmm);
  for (const auto& rec : bqc::run_scenario(c)) {
    EXPECT_EQ(rec.kind, bqc::OutcomeKind::Converged);
    EXPECT_LE(rec.error, c.cadmm_tol);
  }
}

TEST(Scenario, ScheduleRecordCountsAllStages) {
  auto c = small_scenario(bqc::Algorithm::Bq);
  c.rho.kind = bqc::RhoKind::Schedule;
  c.rho.schedule = {1.0, 10, 50, 1e-4};
  for (const auto& rec : bqc::run_scenario(c)) {
    EXPECT_TRUE(rec.failure.empty()) << rec.failure;
    EXPECT_GE(rec.convergence_time, 50);
    EXPECT_LT(rec.rho, 1.0);
  }
}

TEST(Scenario, FailuresAreCapturedPerRun) {
  auto c = small_scenario(bqc::Algorithm::Ebq);
  c.rho.kind = bqc::RhoKind::Fixed;
  c.rho.value = 0.5;  // violates the gamma0 ceiling
  for (const auto& rec : bqc::run_scenario(c)) EXPECT_FALSE(rec.failure.empty());
}

TEST(ParseScenario, RejectsUnknownKeysByPath) {
  const auto base = bqc::json::parse(R"({"graph": {"family": "star", "n": 5}})");
  EXPECT_NO_THROW(bqc::parse_scenario(base));
  auto bad = base;
  bad["graph"]["colour"] = 1;
  try {
    bqc::parse_scenario(bad);
    FAIL();
  } catch (const bqc::ConfigError& e) {
    EXPECT_EQ(e.field(), "graph.colour");
  }
  bad = base;
  bad["data"] = {{"mean", 0}, {"sd", 1}};
  try {
    bqc::parse_scenario(bad);
    FAIL();
  } catch (const bqc::ConfigError& e) {
    EXPECT_EQ(e.field(), "data.sd");
  }
}

TEST(ParseScenario, FieldErrors) {
  auto field_of = [](const char* text) -> std::string {
    try {
      bqc::parse_scenario(bqc::json::parse(text));
    } catch (const bqc::ConfigError& e) {
      return e.field();
    }
    return "";
  };
  EXPECT_EQ(field_of(R"({"graph": {"family": "random_connected", "n": 5, "m": 11}})"), "graph.m");
  EXPECT_EQ(field_of(R"({"graph": {"family": "random_connected", "n": 5, "m": 3}})"), "graph.m");
  EXPECT_EQ(field_of(R"({"graph": {"family": "ring", "n": 5}})"), "graph.family");
  EXPECT_EQ(field_of(R"({"graph": {"family": "star", "n": 1}})"), "graph.n");
  EXPECT_EQ(field_of(R"({"graph": {"family": "star", "n": 5}, "rho": -1})"), "rho.value");
  EXPECT_EQ(field_of(R"({"graph": {"family": "star", "n": 5}, "algorithm": "dq"})"), "algorithm");
  EXPECT_EQ(field_of(R"({"graph": {"family": "star", "n": 5}, "runs": 0})"), "runs");
  EXPECT_EQ(field_of(R"({"graph": {"family": "star", "n": 5}, "delta": 0})"), "delta");
  EXPECT_EQ(field_of(R"({"graph": {"family": "star", "n": 5}})"), "");
}

TEST(ParseScenario, ExplicitEdgesAndPolicies) {
  const auto c = bqc::parse_scenario(bqc::json::parse(R"({
    "graph": {"n": 3, "edges": [[0, 1], [1, 2]]},
    "rho": {"policy": "schedule", "schedule": {"factor": 10, "block": 50, "floor": 1e-4}},
    "delta": 0.5, "range_l": 10, "seed": 18446744073709551615
  })"));
  ASSERT_TRUE(c.fixed_graph.has_value());
  EXPECT_EQ(c.fixed_graph->m(), 2);
  EXPECT_EQ(c.rho.kind, bqc::RhoKind::Schedule);
  EXPECT_TRUE(c.rho.schedule_rho0_heuristic);
  EXPECT_DOUBLE_EQ(c.rho.initial_rho(*c.fixed_graph), 1.5);
  EXPECT_EQ(c.spec.delta(), 0.5);
  EXPECT_EQ(c.seed, 18446744073709551615ull);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0, 0.30000000000000004}) {
    EXPECT_EQ(std::strtod(bqc::fmt(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(bqc::fmt(0.1), "0.1");
  EXPECT_EQ(bqc::fmt(2.0), "2");
}

TEST(Sweep, CellCountsAreConsistent) {
  bqc::SweepConfig s;
  s.family = bqc::GraphFamily::Star;
  s.n_list = {6};
  s.multipliers = {0.01, 1.0, 100.0};
  s.runs = 40;
  s.seed = 3;
  const auto cells = bqc::run_sweep(s);
  ASSERT_EQ(cells.size(), 3u);
  for (const auto& c : cells) {
    EXPECT_EQ(c.m, 5);
    EXPECT_DOUBLE_EQ(c.rho, c.multiplier * 6.0 / 5.0);
    EXPECT_EQ(c.unresolved, 0);
    EXPECT_EQ(c.failures, 0);
    EXPECT_EQ(c.bound_violations, 0);
    EXPECT_EQ(c.dual_bound_violations, 0);
    EXPECT_GE(c.mean_time, 1.0);
    if (c.cyclic > 0) EXPECT_EQ(c.min_period, 2);  // stars alternate
  }
  const auto rows = bqc::sweep_rows(cells, s.seed);
  EXPECT_EQ(rows.size(), 3u * 8u);
  std::ostringstream os;
  bqc::write_sweep_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "family,n,m,rho,metric,value,runs,seed");
}

TEST(Sweep, SameDataAcrossMultipliers) {
  // Every multiplier in a cell sees the same graphs and data.
  EXPECT_EQ(bqc::cell_seed(5, bqc::GraphFamily::Star, 10), bqc::cell_seed(5, bqc::GraphFamily::Star, 10));
  EXPECT_NE(bqc::cell_seed(5, bqc::GraphFamily::Star, 10), bqc::cell_seed(5, bqc::GraphFamily::Complete, 10));
  EXPECT_NE(bqc::cell_seed(5, bqc::GraphFamily::Star, 10), bqc::cell_seed(5, bqc::GraphFamily::Star, 20));
}

TEST(Table1, SmallComparison) {
  bqc::Table1Config c;
  c.families = {bqc::GraphFamily::Complete};
  c.n_list = {6};
  c.runs = 5;
  c.fixed_rho = 1e-2;
  const auto rows = bqc::table1_comparison(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].m, 15);
  EXPECT_EQ(rows[0].decreasing_unresolved, 0);
  EXPECT_EQ(rows[0].fixed_unresolved, 0);
  EXPECT_GE(rows[0].decreasing_mean, 50.0);
  EXPECT_GT(rows[0].fixed_mean, 0.0);
}

TEST(IterativeError, CadmmDecaysAndStartsAtRms) {
  const auto g = bqc::complete_graph(4);
  const bqc::Vec r{1, 2, 3, 6};
  const auto e = bqc::iterative_error_cadmm(g, r, 1.0, 400);
  ASSERT_EQ(e.size(), 401u);
  EXPECT_NEAR(e[0], 3.0, 1e-12);  // x^0 = 0, rbar = 3
  EXPECT_LT(e.back(), 1e-6);
}

TEST(IterativeError, BqStopsAtQuantizationFloor) {
  const auto g = bqc::complete_graph(4);
  const bqc::Vec r{1.2, 2.1, 3.3, 6.4};
  const auto e = bqc::iterative_error_bq(g, r, 0.1, bqc::QuantizerSpec(1.0, 30.0), 200);
  EXPECT_NEAR(e[0], std::abs(bqc::mean(r)), 1e-12);
  EXPECT_LE(e.back(), 1.0);
}

TEST(IterativeError, EbqConcatenatesCalls) {
  const auto g = bqc::build_graph(2, {{0, 1}});
  bqc::BqConfig cfg{g, {10.0, 14.0}, 0.01, bqc::QuantizerSpec(1.0, 5.0)};
  cfg.record_trace = true;
  const auto o = bqc::run_ebq(cfg, {});
  const auto e = bqc::iterative_error_ebq(o, 2);
  ASSERT_GT(o.calls.size(), 1u);
  std::size_t expect = 0;
  for (std::size_t c = 0; c < o.calls.size(); ++c) expect += o.calls[c].trace.size() / 2 - (c > 0 ? 1 : 0);
  EXPECT_EQ(e.size(), expect);
  EXPECT_NEAR(e[0], 12.0, 1e-12);
  EXPECT_LE(e.back(), o.radius);
}
