#include "qamp/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qamp/experiments.hpp"
#include "qamp/io.hpp"

namespace qamp {

namespace fs = std::filesystem;

nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"command", c.command},
      {"n", c.n},
      {"state", {{"source", c.state_source}, {"name", c.state_name}, {"seed", c.state_seed},
                 {"path", c.state_path}}},
      {"scheme", c.scheme},
      {"metric", c.metric},
      {"delta", c.delta},
      {"fail", c.fail},
      {"shots", c.shots},
      {"angle_schedule", c.angle_schedule},
      {"out_dir", c.out_dir},
      {"seed", c.seed},
      {"restarts", c.restarts},
      {"blind", c.blind},
      {"trials", c.trials},
      {"perturb_eps", c.perturb_eps},
      {"kappa", c.kappa},
      {"perturb_kind", c.perturb_kind},
      {"n_list", c.n_list},
      {"delta_list", c.delta_list},
      {"shots_list", c.shots_list},
      {"seeds", c.seeds},
      {"max_shots_per_entry", c.max_shots_per_entry}};
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.value("command", c.command);
  c.n = j.value("n", c.n);
  if (j.contains("state")) {
    const auto& s = j["state"];
    c.state_source = s.value("source", c.state_source);
    c.state_name = s.value("name", c.state_name);
    c.state_seed = s.value("seed", c.state_seed);
    c.state_path = s.value("path", c.state_path);
  }
  c.scheme = j.value("scheme", c.scheme);
  c.metric = j.value("metric", c.metric);
  c.delta = j.value("delta", c.delta);
  c.fail = j.value("fail", c.fail);
  c.shots = j.value("shots", c.shots);
  c.angle_schedule = j.value("angle_schedule", c.angle_schedule);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.seed = j.value("seed", c.seed);
  c.restarts = j.value("restarts", c.restarts);
  c.blind = j.value("blind", c.blind);
  c.trials = j.value("trials", c.trials);
  c.perturb_eps = j.value("perturb_eps", c.perturb_eps);
  c.kappa = j.value("kappa", c.kappa);
  c.perturb_kind = j.value("perturb_kind", c.perturb_kind);
  c.n_list = j.value("n_list", c.n_list);
  c.delta_list = j.value("delta_list", c.delta_list);
  c.shots_list = j.value("shots_list", c.shots_list);
  c.seeds = j.value("seeds", c.seeds);
  c.max_shots_per_entry = j.value("max_shots_per_entry", c.max_shots_per_entry);
  return c;
}

namespace {

AngleSchedule schedule_from_string(const std::string& s) {
  if (s == "uniform") return AngleSchedule::Uniform;
  if (s == "random") return AngleSchedule::Random;
  throw std::invalid_argument("unknown angle schedule '" + s + "' (use uniform or random)");
}

std::string target_label(const BasisTarget& target) {
  switch (target.kind) {
    case TargetKind::Single: return std::to_string(target.k);
    case TargetKind::Pair: return std::to_string(target.k) + ":" + std::to_string(target.l);
    case TargetKind::All: return "all";
  }
  return "?";
}

StateVector<double> resolve_state(RunConfig& cfg) {
  if (cfg.state_source == "file") {
    const auto state = state_from_json(read_json_file(cfg.state_path));
    cfg.n = state.n;
    return state;
  }
  if (cfg.state_source == "random") {
    return random_state<double>(cfg.n, cfg.state_seed);
  }
  if (cfg.state_source == "named") {
    return named_state<double>(cfg.state_name, cfg.n);
  }
  throw std::invalid_argument("state source must be named, random or file");
}

void validate_common(const RunConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(cfg.fail > 0.0 && cfg.fail < 1.0)) {
    throw std::invalid_argument("fail must lie in (0, 1)");
  }
  if (cfg.shots < -1) {
    throw std::invalid_argument("shots must be -1 (planner), 0 (exact) or positive");
  }
}

fs::path prepare_out_dir(RunConfig& cfg) {
  if (cfg.out_dir.empty()) {
    if (const char* env = std::getenv("QAMP_OUTPUT_DIR")) cfg.out_dir = env;
  }
  if (cfg.out_dir.empty()) cfg.out_dir = ".";
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::invalid_argument("cannot create output directory '" + cfg.out_dir + "'");
  return dir;
}

void write_resolved_config(const fs::path& dir, const RunConfig& cfg) {
  write_file(dir / "resolved_config.json", config_to_json(cfg).dump(2) + "\n");
}

nlohmann::json estimate_to_json(const ProbabilityEstimate<double>& est) {
  nlohmann::json probs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < est.probs.size(); ++i) probs.push_back(est.probs[i]);
  const char* mode = est.mode == EstimateMode::Exact
                         ? "exact"
                         : est.mode == EstimateMode::Empirical ? "empirical" : "empty";
  return {{"entry_id", est.entry_id}, {"labels", est.labels},   {"probs", std::move(probs)},
          {"counts", est.counts},     {"shots", est.shots},     {"eps", est.eps},
          {"mode", mode}};
}

int cmd_probe(RunConfig cfg) {
  validate_common(cfg);
  const auto state = resolve_state(cfg);
  const auto dir = prepare_out_dir(cfg);
  write_resolved_config(dir, cfg);

  const auto plan = plan_for_scheme(scheme_from_string(cfg.scheme), state.n,
                                    schedule_from_string(cfg.angle_schedule),
                                    stream_seed(cfg.seed, "angle-seed"));

  std::ostringstream csv;
  csv << "entry_id,target,theta,phi,outcome,prob\n";
  nlohmann::json probs_json = nlohmann::json::array();
  for (std::size_t idx = 0; idx < plan.entries.size(); ++idx) {
    const auto& spec = plan.entries[idx].spec;
    const auto probs = probs_for(state, spec);
    auto est = exact_estimate(probs);
    est.entry_id = static_cast<int>(idx);
    est.labels = outcome_labels(spec, plan.n);
    probs_json.push_back(estimate_to_json(est));
    for (Eigen::Index o = 0; o < probs.size(); ++o) {
      csv << idx << ',' << target_label(spec.target) << ',' << format_double(spec.theta) << ','
          << format_double(spec.phi) << ',' << est.labels[static_cast<std::size_t>(o)] << ','
          << format_double(probs[o]) << '\n';
    }
  }
  write_file(dir / "probe.csv", csv.str());
  write_file(dir / "probs.json", probs_json.dump(2) + "\n");
  write_file(dir / "plan.json", plan_to_json(plan).dump(2) + "\n");
  std::cout << "probe: " << plan.entries.size() << " entries -> " << (dir / "probe.csv").string()
            << "\n";
  return 0;
}

int cmd_estimate(RunConfig cfg) {
  validate_common(cfg);
  const auto state = resolve_state(cfg);
  const auto dir = prepare_out_dir(cfg);
  write_resolved_config(dir, cfg);

  PipelineConfig run;
  run.scheme = scheme_from_string(cfg.scheme);
  run.metric = metric_from_string(cfg.metric);
  run.delta = cfg.delta;
  run.fail = cfg.fail;
  run.shots_override = cfg.shots;
  run.master_seed = cfg.seed;
  run.restarts = cfg.restarts;
  run.schedule = schedule_from_string(cfg.angle_schedule);
  run.blind = cfg.blind;
  run.max_shots_per_entry = cfg.max_shots_per_entry;

  const auto result = run_pipeline(state, run);

  write_file(dir / "records.csv",
             records_csv_header() + "\n" + record_csv_row(result.record) + "\n");
  write_file(dir / "records.jsonl", record_to_json(result.record).dump() + "\n");
  write_file(dir / "estimate_detail.json", result.detail.dump(2) + "\n");
  write_file(dir / "error_report.json", result.detail["errors"].dump(2) + "\n");
  write_file(dir / "counts.csv", counts_csv(result.estimates));
  nlohmann::json estimates_json = nlohmann::json::array();
  for (const auto& est : result.estimates) estimates_json.push_back(estimate_to_json(est));
  write_file(dir / "estimates.json", estimates_json.dump(2) + "\n");
  if (result.solve) {
    write_file(dir / "solve_report.json", result.detail["solve"].dump(2) + "\n");
    write_file(dir / "estimated_state.json",
               state_to_json(vars_to_state<double>(result.solve->x)).dump(2) + "\n");
    write_file(dir / "system_manifest.csv",
               system_manifest_csv(build_nonlinear_system(result.plan, result.estimates)));
  }
  std::cout << "estimate: scheme=" << result.record.scheme << " metric=" << result.record.metric
            << " achieved=" << format_double(result.record.achieved)
            << " planned_shots=" << result.record.planned_shots;
  if (result.solve) {
    std::cout << " identifiable=" << (result.solve->identifiable ? "true" : "false")
              << " numeric_rank=" << result.solve->diag.numeric_rank;
  }
  std::cout << "\n";
  return 0;
}

int cmd_scale(RunConfig cfg) {
  validate_common(cfg);
  const auto dir = prepare_out_dir(cfg);
  write_resolved_config(dir, cfg);

  ScalingConfig sc;
  sc.scheme = scheme_from_string(cfg.scheme);
  sc.metric = metric_from_string(cfg.metric);
  if (!cfg.n_list.empty()) sc.n_list = cfg.n_list;
  sc.shots_list = cfg.shots_list;
  sc.delta_list = cfg.delta_list;
  sc.seeds = cfg.seeds;
  sc.fail = cfg.fail;
  sc.delta = cfg.delta;
  sc.master_seed = cfg.seed;
  sc.restarts = cfg.restarts;

  const auto result = scaling_experiment(sc);

  std::ostringstream csv;
  csv << records_csv_header() << '\n';
  std::ostringstream jsonl;
  for (const auto& record : result.records) {
    csv << record_csv_row(record) << '\n';
    jsonl << record_to_json(record).dump() << '\n';
  }
  write_file(dir / "records.csv", csv.str());
  write_file(dir / "records.jsonl", jsonl.str());
  write_file(dir / "summary.json", result.summary.dump(2) + "\n");
  std::cout << "scale: " << result.records.size() << " records -> "
            << (dir / "records.csv").string() << "\n";
  if (result.any_diverged) {
    std::cerr << "scale: at least one trial diverged\n";
    return 3;
  }
  return 0;
}

int cmd_verify_bound(RunConfig cfg) {
  validate_common(cfg);
  const auto dir = prepare_out_dir(cfg);
  write_resolved_config(dir, cfg);

  BoundTrialConfig bc;
  if (!cfg.n_list.empty()) bc.n_list = cfg.n_list;
  bc.trials = cfg.trials;
  bc.perturb_eps = cfg.perturb_eps;
  bc.kappa = cfg.kappa;
  bc.kind = perturbation_kind_from_string(cfg.perturb_kind);
  bc.scheme = scheme_from_string(cfg.scheme);
  bc.schedule = schedule_from_string(cfg.angle_schedule);
  bc.master_seed = cfg.seed;

  const auto result = run_bound_trials(bc);
  write_file(dir / "trials.csv", bound_trials_csv(result));
  write_file(dir / "summary.json", result.summary.dump(2) + "\n");
  std::cout << "verify-bound: holds " << result.holds << "/" << (result.holds + result.violated)
            << " applicable, " << result.not_applicable << " not applicable (fraction "
            << format_double(result.holds_fraction) << ")\n";
  return 0;
}

int cmd_rank_audit(RunConfig cfg) {
  validate_common(cfg);
  const auto dir = prepare_out_dir(cfg);
  write_resolved_config(dir, cfg);

  RankAuditConfig rc;
  if (!cfg.n_list.empty()) rc.n_list = cfg.n_list;
  rc.states_per_n = cfg.seeds;
  rc.schedule = schedule_from_string(cfg.angle_schedule);
  rc.master_seed = cfg.seed;

  const auto result = run_rank_audit(rc);
  write_file(dir / "ranks.csv", rank_audit_csv(result));
  write_file(dir / "summary.json", result.summary.dump(2) + "\n");
  std::cout << "rank-audit: " << result.rows.size() << " rows -> " << (dir / "ranks.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  RunConfig cfg;
  bool config_had_seed = false;

  // Pass 1: pull in the config file, if any, so flags can override it.
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      try {
        const auto doc = read_json_file(args[i + 1]);
        cfg = config_from_json(doc);
        config_had_seed = doc.contains("seed");
      } catch (const std::exception& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"amplitude estimation from single-qubit measurements, at desk scale"};
  app.require_subcommand(1);

  std::string config_path;  // consumed in pass 1; registered so CLI11 accepts it
  bool seed_given = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    cmd->add_option("--out", cfg.out_dir, "output directory (default: $QAMP_OUTPUT_DIR or .)");
    cmd->add_option("--seed", cfg.seed, "master seed; every random stream derives from it")
        ->each([&](const std::string&) { seed_given = true; });
  };
  const auto add_state = [&](CLI::App* cmd) {
    cmd->add_option("-n,--n", cfg.n, "qubit count");
    cmd->add_option("--state", cfg.state_name,
                    "named state (bell|ghz|w|uniform|basis(k)) or 'random'");
    cmd->add_option("--state-file", cfg.state_path, "JSON state file");
    cmd->add_option("--state-seed", cfg.state_seed, "seed for --state random");
  };

  auto* probe = app.add_subcommand("probe", "exact probability tables for a plan");
  add_common(probe);
  add_state(probe);
  probe->add_option("--plan,--scheme", cfg.scheme, "method1|extended|naive|linear3q");
  probe->add_option("--angle-schedule", cfg.angle_schedule, "uniform|random");

  auto* estimate = app.add_subcommand("estimate", "sample, solve and score one state");
  add_common(estimate);
  add_state(estimate);
  estimate->add_option("--scheme", cfg.scheme, "method1|extended|naive|linear3q");
  estimate->add_option("--metric", cfg.metric, "additive-norm|additive-complex|tv|avg-l1");
  estimate->add_option("--delta", cfg.delta, "target error");
  estimate->add_option("--fail", cfg.fail, "failure budget for the shot planner");
  estimate->add_option("--shots", cfg.shots, "-1 planner, 0 exact mode, >0 per-entry override");
  estimate->add_option("--restarts", cfg.restarts, "solver starts");
  estimate->add_flag("--blind", cfg.blind, "plan from the solved state, then re-plan once");
  estimate->add_option("--angle-schedule", cfg.angle_schedule, "uniform|random");
  estimate->add_option("--max-shots", cfg.max_shots_per_entry, "refuse larger per-entry budgets");

  auto* scale = app.add_subcommand("scale", "error-vs-shots or planner-vs-delta sweeps");
  add_common(scale);
  scale->add_option("--scheme", cfg.scheme, "method1|extended|naive|linear3q");
  scale->add_option("--metric", cfg.metric, "additive-norm|additive-complex|tv|avg-l1");
  scale->add_option("--n-list", cfg.n_list, "qubit counts")->delimiter(',');
  scale->add_option("--shots-list", cfg.shots_list, "sampled sweep shot levels")->delimiter(',');
  scale->add_option("--delta-list", cfg.delta_list, "planner sweep deltas")->delimiter(',');
  scale->add_option("--seeds", cfg.seeds, "trials per grid point");
  scale->add_option("--delta", cfg.delta, "record label for sampled sweeps");
  scale->add_option("--fail", cfg.fail, "failure budget");
  scale->add_option("--restarts", cfg.restarts, "solver starts");

  auto* verify = app.add_subcommand("verify-bound", "perturbation-bound trials");
  add_common(verify);
  verify->add_option("--n-list", cfg.n_list, "qubit counts (trials split evenly)")->delimiter(',');
  verify->add_option("--trials", cfg.trials, "total trials");
  verify->add_option("--perturb-eps", cfg.perturb_eps, "perturbation magnitude");
  verify->add_option("--kappa", cfg.kappa, "second-order slack factor");
  verify->add_option("--perturb-kind", cfg.perturb_kind, "row-space|top-singular|null|zero");
  verify->add_option("--scheme", cfg.scheme, "plan whose system is perturbed");
  verify->add_option("--angle-schedule", cfg.angle_schedule, "uniform|random");

  auto* rank = app.add_subcommand("rank-audit", "Jacobian rank per (n, scheme, state)");
  add_common(rank);
  rank->add_option("--n-list", cfg.n_list, "qubit counts")->delimiter(',');
  rank->add_option("--states,--seeds", cfg.seeds, "random states per n");
  rank->add_option("--angle-schedule", cfg.angle_schedule, "uniform|random");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  // exactly one state source
  const bool state_flag = probe->count("--state") + estimate->count("--state") > 0;
  const bool file_flag = probe->count("--state-file") + estimate->count("--state-file") > 0;
  if (state_flag && file_flag) {
    std::cerr << "config error: --state and --state-file are mutually exclusive\n";
    return 2;
  }
  if (file_flag) {
    cfg.state_source = "file";
  } else if (state_flag) {
    cfg.state_source = cfg.state_name == "random" ? "random" : "named";
  }

  CLI::App* active = app.get_subcommands().front();
  cfg.command = active->get_name();

  // no wall-clock fallback: these runs must be replayable
  if ((cfg.command == "scale" || cfg.command == "verify-bound") && !seed_given &&
      !config_had_seed) {
    std::cerr << "config error: " << cfg.command << " requires an explicit --seed\n";
    return 2;
  }

  try {
    if (cfg.command == "probe") return cmd_probe(cfg);
    if (cfg.command == "estimate") return cmd_estimate(cfg);
    if (cfg.command == "scale") return cmd_scale(cfg);
    if (cfg.command == "verify-bound") return cmd_verify_bound(cfg);
    if (cfg.command == "rank-audit") return cmd_rank_audit(cfg);
    std::cerr << "config error: unknown command\n";
    return 2;
  } catch (const NumericalFailure& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace qamp
