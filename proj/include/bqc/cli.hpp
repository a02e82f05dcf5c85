#pragma once

// Command-line front end. Exit status: 0 success, 1 invalid input
// (arguments, JSON, schema, infeasible graph), 2 runtime failure.
// Diagnostics go to `err`; data goes to files or `out`.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bqc/io.hpp"
#include "bqc/reproduce.hpp"

namespace bqc::cli {

enum ExitCode { kOk = 0, kInvalid = 1, kRuntime = 2 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::int64_t> max_iter;
  std::optional<int> parallel;
  std::string out;
};

inline void add_common(CLI::App* sub, Overrides& ov) {
  sub->add_option("--seed", ov.seed, "Base seed");
  sub->add_option("--runs", ov.runs, "Repetitions")->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", ov.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  sub->add_option("--parallel", ov.parallel, "Worker threads")->check(CLI::Range(1, 4096));
  sub->add_option("--out", ov.out, "Output directory (created if absent)");
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p = dir.empty() ? std::filesystem::path(".") : std::filesystem::path(dir);
  std::filesystem::create_directories(p);
  return p;
}

inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized consensus ADMM simulator", "bqc"};
  app.require_subcommand(1);
  Overrides ov;

  std::string config_path;
  bool trace = false;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file; JSONL records to --out/records.jsonl or stdout");
  run_cmd->add_option("config", config_path, "Scenario JSON")->required();
  run_cmd->add_flag("--trace", trace, "Also write trace.csv and outcome.json for run 0");
  add_common(run_cmd, ov);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a rho sweep file; CSV to --out/sweep.csv or stdout");
  sweep_cmd->add_option("config", config_path, "Sweep JSON")->required();
  add_common(sweep_cmd, ov);

  std::string target;
  auto* repro = app.add_subcommand("reproduce", "Reproduce a reference experiment");
  repro->add_option("target", target, "fig1 | fig2 | fig3 | fig4 | table1")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "table1"}));
  add_common(repro, ov);

  std::string family = "random_connected";
  int gn = 10;
  std::optional<int> gm;
  auto* gen = app.add_subcommand("graph-gen", "Generate a graph as JSON");
  gen->add_option("--family", family, "star | complete | random_connected | intermediate");
  gen->add_option("--n", gn, "Node count");
  gen->add_option("--m", gm, "Edge count (random_connected)");
  gen->add_option("--seed", ov.seed, "Seed");
  gen->add_option("--out", ov.out, "Output file (stdout when absent)");

  auto* val = app.add_subcommand("validate", "Check a scenario, sweep or graph file");
  val->add_option("config", config_path, "JSON file")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kInvalid;
  }

  try {
    if (*run_cmd) {
      auto sc = parse_scenario(read_json_file(config_path));
      if (ov.seed) sc.seed = *ov.seed;
      if (ov.runs) sc.runs = *ov.runs;
      if (ov.max_iter) sc.max_iter = *ov.max_iter;
      if (ov.parallel) sc.parallel = *ov.parallel;
      sc.validate();
      const auto recs = run_scenario(sc);
      int failed = 0, unresolved = 0, violations = 0;
      for (const auto& r : recs) {
        failed += !r.failure.empty();
        unresolved += r.kind == OutcomeKind::Unresolved;
        violations += !r.bound_holds;
      }
      if (ov.out.empty()) {
        write_jsonl(out, recs);
      } else {
        const auto dir = ensure_dir(ov.out);
        auto f = reproduce::open_out(dir / "records.jsonl");
        write_jsonl(f, recs);
        if (trace && sc.algorithm != Algorithm::Cadmm) {
          const auto in = expand_run(sc, 0);
          BqConfig cfg{in.graph, in.r, sc.rho.initial_rho(in.graph), sc.spec};
          cfg.max_iter = sc.max_iter;
          cfg.fixed_budget = sc.inner_budget;
          cfg.record_trace = true;
          auto tf = reproduce::open_out(dir / "trace.csv");
          auto of = reproduce::open_out(dir / "outcome.json");
          if (sc.algorithm == Algorithm::Ebq) {
            const auto o = run_ebq(cfg, {sc.enforce_gamma0});
            write_ebq_trace_csv(tf, o);
            of << ebq_outcome_json(o).dump(2) << '\n';
          } else {
            const auto o = run(cfg);
            write_trace_csv(tf, o.trace);
            of << outcome_json(o).dump(2) << '\n';
          }
        }
      }
      err << sc.name << ": " << recs.size() << " runs, " << unresolved << " unresolved, " << failed << " failed, "
          << violations << " bound violations\n";
      return failed > 0 ? kRuntime : kOk;
    }

    if (*sweep_cmd) {
      auto sw = parse_sweep(read_json_file(config_path));
      if (ov.seed) sw.seed = *ov.seed;
      if (ov.runs) sw.runs = *ov.runs;
      if (ov.max_iter) sw.max_iter = *ov.max_iter;
      if (ov.parallel) sw.parallel = *ov.parallel;
      const auto rows = sweep_rows(run_sweep(sw), sw.seed);
      if (ov.out.empty()) {
        write_sweep_csv(out, rows);
      } else {
        auto f = reproduce::open_out(ensure_dir(ov.out) / "sweep.csv");
        write_sweep_csv(f, rows);
      }
      return kOk;
    }

    if (*repro) {
      reproduce::Options opt;
      opt.seed = ov.seed.value_or(42);
      opt.runs = ov.runs;
      opt.max_iter = ov.max_iter;
      opt.parallel = ov.parallel.value_or(1);
      opt.out = ensure_dir(ov.out);
      if (target == "fig1") reproduce::fig1(opt);
      else if (target == "fig2") reproduce::fig2(opt);
      else if (target == "fig3") reproduce::fig3(opt);
      else if (target == "fig4") reproduce::fig4(opt);
      else reproduce::table1(opt);
      err << "wrote " << target << " outputs to " << opt.out.string() << '\n';
      return kOk;
    }

    if (*gen) {
      GraphSpec gs{parse_family(family, "--family"), gn, gm.value_or(0)};
      if (gs.family == GraphFamily::RandomConnected && !gm) throw ConfigError("--m", "required for random_connected");
      if (gs.n < 2) throw ConfigError("--n", "must be at least 2");
      Xoshiro256pp rng(ov.seed.value_or(0));
      const auto g = generate(gs, rng);
      const std::string text = graph_to_json(g).dump() + "\n";
      if (ov.out.empty()) {
        out << text;
      } else {
        const std::filesystem::path p(ov.out);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        auto f = reproduce::open_out(p);
        f << text;
      }
      return kOk;
    }

    if (*val) {
      const auto j = read_json_file(config_path);
      if (j.is_object() && j.contains("edges") && !j.contains("graph")) {
        graph_from_json(j);
        out << "valid graph\n";
      } else if (j.is_object() && (j.contains("multipliers") || j.contains("family"))) {
        parse_sweep(j).validate();
        out << "valid sweep\n";
      } else {
        parse_scenario(j).validate();
        out << "valid scenario\n";
      }
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  } catch (const GraphError& e) {
    err << "invalid graph: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kInvalid;
}

inline int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace bqc::cli
