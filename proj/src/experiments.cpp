#include "qamp/experiments.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qamp/io.hpp"

namespace qamp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Least-squares slope of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = m * sxx - sx * sx;
  const double slope = denom != 0 ? (m * sxy - sx * sy) / denom : 0.0;
  const double intercept = m != 0 ? (sy - slope * sx) / m : 0.0;
  return {slope, intercept};
}

nlohmann::json error_report_to_json(const ErrorReport<double>& e) {
  return {{"max_norm_err", e.max_norm_err},
          {"complex_err", e.complex_err},
          {"total_variation", e.total_variation},
          {"avg_l1", e.avg_l1},
          {"shots_total", e.shots_total}};
}

// ||A^+|| of the augmented 8x8 marginal matrix; state-independent.
double linear3q_pinv_norm() {
  static const double value = [] {
    const auto sys = build_exact_linear_system(3, true, named_state<double>("uniform", 3));
    return diagnose_matrix(sys.A).jinv_norm;
  }();
  return value;
}

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Method1: return "method1";
    case Scheme::Extended: return "extended";
    case Scheme::Naive: return "naive";
    case Scheme::Linear3q: return "linear3q";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "method1") return Scheme::Method1;
  if (s == "extended") return Scheme::Extended;
  if (s == "naive") return Scheme::Naive;
  if (s == "linear3q") return Scheme::Linear3q;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::RowSpace: return "row-space";
    case PerturbationKind::TopSingular: return "top-singular";
    case PerturbationKind::Null: return "null";
    case PerturbationKind::Zero: return "zero";
  }
  return "?";
}

PerturbationKind perturbation_kind_from_string(const std::string& s) {
  if (s == "row-space") return PerturbationKind::RowSpace;
  if (s == "top-singular") return PerturbationKind::TopSingular;
  if (s == "null") return PerturbationKind::Null;
  if (s == "zero") return PerturbationKind::Zero;
  throw std::invalid_argument("unknown perturbation kind '" + s + "'");
}

MeasurementPlan<double> plan_for_scheme(Scheme scheme, int n, AngleSchedule schedule,
                                        std::uint64_t seed) {
  switch (scheme) {
    case Scheme::Method1:
      return method1_plan<double>(n, schedule, seed);
    case Scheme::Extended:
      return default_extended_plan<double>(n);
    case Scheme::Naive: {
      MeasurementPlan<double> plan;
      plan.n = n;
      plan.entries.push_back({BasisSpec<double>{BasisTarget::all(), 0.0, 0.0}, 0});
      return plan;
    }
    case Scheme::Linear3q:
      if (n != 3) throw std::invalid_argument("the linear3q scheme requires n = 3");
      return linear_plan<double>(3, true);
  }
  throw std::logic_error("unreachable");
}

ShotBudget plan_shot_budget(Scheme scheme, Metric metric, int n, double delta, double fail,
                            double jinv_norm) {
  if (!(fail > 0.0 && fail < 1.0)) throw std::invalid_argument("fail must be in (0, 1)");
  ShotBudget budget;
  switch (scheme) {
    case Scheme::Naive:
      // one Bernoulli campaign per bitstring
      budget.entries = std::uint64_t(1) << n;
      budget.epsilon = naive_epsilon_for(metric, delta, n);
      break;
    case Scheme::Linear3q:
      budget.entries = 4;  // three Z entries plus the pair
      budget.epsilon = linear_epsilon_for(metric, delta, jinv_norm, 8, n);
      break;
    case Scheme::Method1:
    case Scheme::Extended: {
      const auto plan = plan_for_scheme(scheme, n, AngleSchedule::Uniform, 0);
      budget.entries = plan.entries.size();
      budget.epsilon = epsilon_for(metric, delta, n, jinv_norm);
      break;
    }
  }
  budget.per_entry_fail = fail / static_cast<double>(budget.entries);
  budget.shots_per_entry = shots_for_accuracy(budget.epsilon, budget.per_entry_fail);
  budget.total = budget.entries * budget.shots_per_entry;
  return budget;
}

std::string records_csv_header() {
  return "n,scheme,metric,delta,epsilon,planned_shots,achieved,seed,wall_ms";
}

std::string record_csv_row(const ExperimentRecord& r) {
  std::ostringstream out;
  out << r.n << ',' << r.scheme << ',' << r.metric << ',' << format_double(r.delta) << ','
      << format_double(r.epsilon) << ',' << r.planned_shots << ','
      << format_double(r.achieved) << ',' << r.seed << ',' << format_double(r.wall_ms);
  return out.str();
}

nlohmann::json record_to_json(const ExperimentRecord& r) {
  return {{"n", r.n},
          {"scheme", r.scheme},
          {"metric", r.metric},
          {"delta", r.delta},
          {"epsilon", r.epsilon},
          {"planned_shots", r.planned_shots},
          {"achieved", r.achieved},
          {"seed", r.seed},
          {"wall_ms", r.wall_ms}};
}

std::string counts_csv(const std::vector<ProbabilityEstimate<double>>& estimates) {
  std::ostringstream out;
  out << "entry_id,outcome_label,count,shots\n";
  for (const auto& est : estimates) {
    for (std::size_t o = 0; o < est.counts.size(); ++o) {
      const std::string label = o < est.labels.size() ? est.labels[o] : std::to_string(o);
      out << est.entry_id << ',' << label << ',' << est.counts[o] << ',' << est.shots << '\n';
    }
  }
  return out.str();
}

namespace {

// Samples (or passes through) per-entry outcome probabilities.
std::vector<ProbabilityEstimate<double>> estimate_entries(const StateVector<double>& state,
                                                          const MeasurementPlan<double>& plan,
                                                          std::uint64_t shots_per_entry,
                                                          double epsilon,
                                                          std::uint64_t master_seed,
                                                          const std::string& stream) {
  std::vector<ProbabilityEstimate<double>> estimates;
  estimates.reserve(plan.entries.size());
  for (std::size_t idx = 0; idx < plan.entries.size(); ++idx) {
    const auto probs = probs_for(state, plan.entries[idx].spec);
    auto est = shots_per_entry == 0
                   ? exact_estimate(probs)
                   : sample_counts(probs, static_cast<std::int64_t>(shots_per_entry),
                                   stream_seed(master_seed, stream, idx));
    est.entry_id = static_cast<int>(idx);
    est.labels = outcome_labels(plan.entries[idx].spec, plan.n);
    est.eps = epsilon;
    estimates.push_back(std::move(est));
  }
  return estimates;
}

struct SolverPassResult {
  SolveReport<double> report;
  std::vector<ProbabilityEstimate<double>> estimates;
  std::uint64_t shots_per_entry = 0;
  double epsilon = 0;
};

SolverPassResult solver_pass(const StateVector<double>& state, const MeasurementPlan<double>& plan,
                             const PipelineConfig& cfg, double jinv_norm,
                             const std::string& stream) {
  SolverPassResult pass;
  if (cfg.shots_override == 0) {
    pass.shots_per_entry = 0;
    pass.epsilon = 0.0;
  } else if (cfg.shots_override > 0) {
    pass.shots_per_entry = static_cast<std::uint64_t>(cfg.shots_override);
    const double pe_fail = cfg.fail / static_cast<double>(plan.entries.size());
    pass.epsilon = std::sqrt(std::log(2.0 / pe_fail) /
                             (2.0 * static_cast<double>(pass.shots_per_entry)));
  } else {
    const auto budget =
        plan_shot_budget(cfg.scheme, cfg.metric, plan.n, cfg.delta, cfg.fail, jinv_norm);
    if (budget.shots_per_entry > cfg.max_shots_per_entry) {
      throw std::invalid_argument(
          "planned " + std::to_string(budget.shots_per_entry) +
          " shots per entry exceeds max_shots_per_entry; relax delta or override shots");
    }
    pass.shots_per_entry = budget.shots_per_entry;
    pass.epsilon = budget.epsilon;
  }
  pass.estimates = estimate_entries(state, plan, pass.shots_per_entry, pass.epsilon,
                                    cfg.master_seed, stream);
  const auto system = build_nonlinear_system(plan, pass.estimates);
  SolveOptions<double> opts;
  opts.restarts = cfg.restarts;
  opts.seed = stream_seed(cfg.master_seed, "lm");
  const auto x0 = state_to_vars(random_state<double>(plan.n, stream_seed(cfg.master_seed, "x0")));
  pass.report = solve_nonlinear(system, x0, opts);
  return pass;
}

}  // namespace

PipelineResult run_pipeline(const StateVector<double>& state, const PipelineConfig& cfg) {
  const auto start = Clock::now();
  const int n = state.n;
  if ((cfg.scheme == Scheme::Naive || cfg.scheme == Scheme::Linear3q) &&
      cfg.metric == Metric::AdditiveComplex) {
    throw std::invalid_argument(to_string(cfg.scheme) + " estimates norms only; the " +
                                to_string(cfg.metric) + " target needs a solver scheme");
  }

  PipelineResult result;
  result.plan = plan_for_scheme(cfg.scheme, n, cfg.schedule,
                                stream_seed(cfg.master_seed, "angle-seed"));
  result.record.n = n;
  result.record.scheme = to_string(cfg.scheme);
  result.record.metric = to_string(cfg.metric);
  result.record.delta = cfg.delta;
  result.record.seed = cfg.master_seed;

  nlohmann::json detail;
  detail["plan"] = plan_to_json(result.plan);
  detail["blind"] = cfg.blind;

  switch (cfg.scheme) {
    case Scheme::Naive: {
      std::uint64_t shots_per_campaign = 0;
      double epsilon = 0.0;
      const std::uint64_t campaigns = std::uint64_t(1) << n;
      if (cfg.shots_override > 0) {
        shots_per_campaign = static_cast<std::uint64_t>(cfg.shots_override);
        epsilon = std::sqrt(std::log(2.0 * static_cast<double>(campaigns) / cfg.fail) /
                            (2.0 * static_cast<double>(shots_per_campaign)));
      } else if (cfg.shots_override < 0) {
        const auto budget =
            plan_shot_budget(cfg.scheme, cfg.metric, n, cfg.delta, cfg.fail, 1.0);
        if (budget.shots_per_entry > cfg.max_shots_per_entry) {
          throw std::invalid_argument("planned " + std::to_string(budget.shots_per_entry) +
                                      " shots per campaign exceeds max_shots_per_entry");
        }
        shots_per_campaign = budget.shots_per_entry;
        epsilon = budget.epsilon;
      }
      result.record.epsilon = epsilon;
      result.record.planned_shots = campaigns * shots_per_campaign;
      ProbabilityEstimate<double> est;
      if (shots_per_campaign == 0) {  // exact mode
        est = exact_estimate(full_computational_probs(state));
        result.errors = error_report(est.probs, state, 0);
        detail["estimate"] = {{"mode", "exact"}};
      } else {
        const auto naive = naive_estimate(state, static_cast<std::int64_t>(shots_per_campaign),
                                          stream_seed(cfg.master_seed, "entry", 0));
        est.probs = naive.probs;
        est.counts = naive.counts;
        est.shots = naive.shots;
        est.mode = EstimateMode::Empirical;
        result.errors = error_report(naive.probs, state, result.record.planned_shots);
        detail["estimate"] = {{"mode", "empirical"}, {"shots_per_campaign", naive.shots}};
      }
      est.entry_id = 0;
      est.labels = outcome_labels(result.plan.entries[0].spec, n);
      est.eps = epsilon;
      result.estimates.push_back(std::move(est));
      break;
    }

    case Scheme::Linear3q: {
      const double pinv = linear3q_pinv_norm();
      std::uint64_t shots_per_entry = 0;
      double epsilon = 0.0;
      if (cfg.shots_override > 0) {
        shots_per_entry = static_cast<std::uint64_t>(cfg.shots_override);
        const double pe_fail = cfg.fail / 4.0;
        epsilon = std::sqrt(std::log(2.0 / pe_fail) / (2.0 * static_cast<double>(shots_per_entry)));
      } else if (cfg.shots_override < 0) {
        const auto budget = plan_shot_budget(cfg.scheme, cfg.metric, n, cfg.delta, cfg.fail, pinv);
        if (budget.shots_per_entry > cfg.max_shots_per_entry) {
          throw std::invalid_argument("planned " + std::to_string(budget.shots_per_entry) +
                                      " shots per entry exceeds max_shots_per_entry");
        }
        shots_per_entry = budget.shots_per_entry;
        epsilon = budget.epsilon;
      }
      auto estimates =
          estimate_entries(state, result.plan, shots_per_entry, epsilon, cfg.master_seed, "entry");
      const auto system = build_linear_system(3, true, estimates);
      const auto report = solve_linear(system);
      result.estimates = std::move(estimates);
      result.record.epsilon = epsilon;
      result.record.planned_shots = 4 * shots_per_entry;
      result.errors = error_report(report.p, state, result.record.planned_shots);
      detail["linear"] = {{"residual_norm", report.residual_norm},
                          {"clip_delta", report.clip_delta},
                          {"numeric_rank", report.diag.numeric_rank},
                          {"pinv_norm", report.diag.jinv_norm},
                          {"unique", report.unique}};
      result.linear = report;
      break;
    }

    case Scheme::Method1:
    case Scheme::Extended: {
      // The planner needs ||J^-1|| before any data exists. In simulation mode
      // it is bootstrapped from the Jacobian at the true state; blind mode
      // starts at 1, solves once, and re-plans from the solved state.
      double jinv_bootstrap = 1.0;
      if (!cfg.blind) {
        const auto exact = build_exact_system(result.plan, state);
        jinv_bootstrap = jacobian_diagnostics(exact, state_to_vars(state)).jinv_norm;
      }
      detail["jinv_bootstrap"] = jinv_bootstrap;

      auto pass = solver_pass(state, result.plan, cfg, jinv_bootstrap, "entry");
      if (cfg.blind && cfg.shots_override < 0) {
        const double jinv_solved = pass.report.diag.jinv_norm;
        detail["jinv_replan"] = jinv_solved;
        pass = solver_pass(state, result.plan, cfg, jinv_solved, "entry-replan");
      }
      if (pass.report.diverged) {
        throw NumericalFailure("nonlinear solver diverged (non-finite residual)");
      }

      result.record.epsilon = pass.epsilon;
      result.record.planned_shots =
          pass.shots_per_entry * static_cast<std::uint64_t>(result.plan.entries.size());
      const auto estimated = vars_to_state<double>(pass.report.x);
      result.errors = error_report(estimated, state, result.record.planned_shots);
      SolveOptions<double> opts_echo;
      opts_echo.restarts = cfg.restarts;
      opts_echo.seed = stream_seed(cfg.master_seed, "lm");
      detail["solve"] = solve_report_to_json(pass.report, opts_echo);
      detail["shots_per_entry"] = pass.shots_per_entry;
      result.solve = std::move(pass.report);
      result.estimates = std::move(pass.estimates);
      break;
    }
  }

  result.record.achieved = achieved_metric(result.errors, cfg.metric);
  result.record.wall_ms = ms_since(start);
  detail["errors"] = error_report_to_json(result.errors);
  detail["record"] = record_to_json(result.record);
  result.detail = std::move(detail);
  return result;
}

ScalingResult scaling_experiment(const ScalingConfig& cfg) {
  if (cfg.shots_list.empty() == cfg.delta_list.empty()) {
    throw std::invalid_argument("scaling sweeps need exactly one of shots_list or delta_list");
  }
  ScalingResult result;
  nlohmann::json fits = nlohmann::json::array();

  if (!cfg.shots_list.empty()) {
    // Sampled sweep: achieved error against shots at fixed scheme/metric.
    for (int n : cfg.n_list) {
      std::vector<double> log_shots;
      std::vector<double> log_err;
      for (std::uint64_t shots : cfg.shots_list) {
        double sum_err = 0;
        for (int trial = 0; trial < cfg.seeds; ++trial) {
          PipelineConfig run;
          run.scheme = cfg.scheme;
          run.metric = cfg.metric;
          run.delta = cfg.delta;
          run.fail = cfg.fail;
          run.shots_override = static_cast<std::int64_t>(shots);
          run.restarts = cfg.restarts;
          run.master_seed = stream_seed(cfg.master_seed, "scale-trial",
                                        (std::uint64_t(n) << 40) ^ (shots << 8) ^
                                            std::uint64_t(trial));
          const auto state =
              random_state<double>(n, stream_seed(cfg.master_seed, "scale-state",
                                                  (std::uint64_t(n) << 8) ^ std::uint64_t(trial)));
          auto res = run_pipeline(state, run);
          if (res.solve && res.solve->diverged) result.any_diverged = true;
          sum_err += res.record.achieved;
          result.records.push_back(std::move(res.record));
        }
        const double mean_err = sum_err / static_cast<double>(cfg.seeds);
        log_shots.push_back(std::log10(static_cast<double>(shots)));
        log_err.push_back(std::log10(std::max(mean_err, 1e-300)));
      }
      const auto [slope, intercept] = fit_line(log_shots, log_err);
      result.error_vs_shots.push_back({n, slope, intercept, static_cast<int>(log_shots.size())});
      fits.push_back({{"n", n},
                      {"kind", "log10(achieved) vs log10(shots)"},
                      {"slope", slope},
                      {"intercept", intercept},
                      {"points", log_shots.size()}});
    }
  } else {
    // Planner sweep: pure budget arithmetic, no sampling.
    nlohmann::json totals_by_n = nlohmann::json::array();
    std::vector<double> first_delta_totals;
    for (int n : cfg.n_list) {
      std::vector<double> log_delta;
      std::vector<double> log_total;
      for (double delta : cfg.delta_list) {
        const auto budget =
            plan_shot_budget(cfg.scheme, cfg.metric, n, delta, cfg.fail, cfg.jinv_norm);
        ExperimentRecord record;
        record.n = n;
        record.scheme = to_string(cfg.scheme);
        record.metric = to_string(cfg.metric);
        record.delta = delta;
        record.epsilon = budget.epsilon;
        record.planned_shots = budget.total;
        record.achieved = std::numeric_limits<double>::quiet_NaN();
        record.seed = cfg.master_seed;
        result.records.push_back(record);
        log_delta.push_back(std::log10(delta));
        log_total.push_back(std::log10(static_cast<double>(budget.total)));
      }
      first_delta_totals.push_back(
          static_cast<double>(plan_shot_budget(cfg.scheme, cfg.metric, n, cfg.delta_list.front(),
                                               cfg.fail, cfg.jinv_norm)
                                  .total));
      totals_by_n.push_back({{"n", n}, {"total", first_delta_totals.back()}});
      const auto [slope, intercept] = fit_line(log_delta, log_total);
      result.shots_vs_delta.push_back({n, slope, intercept, static_cast<int>(log_delta.size())});
      fits.push_back({{"n", n},
                      {"kind", "log10(planned shots) vs log10(delta)"},
                      {"slope", slope},
                      {"intercept", intercept},
                      {"points", log_delta.size()}});
    }
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t i = 1; i < first_delta_totals.size(); ++i) {
      ratios.push_back(first_delta_totals[i] / first_delta_totals[i - 1]);
    }
    result.summary["growth_ratios"] = std::move(ratios);
    result.summary["planned_totals"] = std::move(totals_by_n);
  }

  result.summary["scheme"] = to_string(cfg.scheme);
  result.summary["metric"] = to_string(cfg.metric);
  result.summary["fits"] = std::move(fits);
  result.summary["any_diverged"] = result.any_diverged;
  return result;
}

BoundTrialResult run_bound_trials(const BoundTrialConfig& cfg) {
  if (cfg.n_list.empty() || cfg.trials < 1) {
    throw std::invalid_argument("bound trials need at least one size and one trial");
  }
  BoundTrialResult result;
  const int per_n = cfg.trials / static_cast<int>(cfg.n_list.size());

  int trial_id = 0;
  for (int n : cfg.n_list) {
    for (int t = 0; t < std::max(1, per_n); ++t, ++trial_id) {
      const auto state =
          random_state<double>(n, stream_seed(cfg.master_seed, "bound-state",
                                              (std::uint64_t(n) << 32) ^ std::uint64_t(t)));
      const auto plan = plan_for_scheme(cfg.scheme, n, cfg.schedule,
                                        stream_seed(cfg.master_seed, "bound-angles"));
      const auto system = build_exact_system(plan, state);
      const auto x_true = state_to_vars(state);
      const auto J = system.jacobian(x_true);
      Eigen::JacobiSVD<RealMatrix<double>> svd(J, Eigen::ComputeThinU);
      const auto diag = diagnose_matrix(J);

      RealVector<double> delta = RealVector<double>::Zero(system.num_equations());
      Rng rng(stream_seed(cfg.master_seed, "bound-perturb",
                          (std::uint64_t(n) << 32) ^ std::uint64_t(t)));
      switch (cfg.kind) {
        case PerturbationKind::Zero:
          break;
        case PerturbationKind::TopSingular:
          delta = cfg.perturb_eps * svd.matrixU().col(0);
          break;
        case PerturbationKind::RowSpace: {
          RealVector<double> g(system.num_equations());
          for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.next_normal();
          const auto U = svd.matrixU().leftCols(diag.numeric_rank);
          delta = U * (U.transpose() * g).eval();
          if (delta.norm() > 0) delta *= cfg.perturb_eps / delta.norm();
          break;
        }
        case PerturbationKind::Null: {
          RealVector<double> g(system.num_equations());
          for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.next_normal();
          const auto U = svd.matrixU().leftCols(diag.numeric_rank);
          delta = g - U * (U.transpose() * g).eval();
          if (delta.norm() > 0) delta *= cfg.perturb_eps / delta.norm();
          break;
        }
      }

      const auto check = theorem1_check<double>(system, x_true, system.target() + delta,
                                                cfg.kappa);
      BoundTrialRow row;
      row.n = n;
      row.trial = trial_id;
      row.lhs = check.lhs;
      row.rhs = check.rhs;
      row.perturbation_norm = check.perturbation_norm;
      row.status = check.status;
      row.converged = check.solver_converged;
      result.rows.push_back(row);
      switch (check.status) {
        case BoundStatus::Holds: ++result.holds; break;
        case BoundStatus::Violated: ++result.violated; break;
        case BoundStatus::NotApplicable: ++result.not_applicable; break;
      }
    }
  }
  const int applicable = result.holds + result.violated;
  result.holds_fraction =
      applicable > 0 ? static_cast<double>(result.holds) / applicable : 1.0;
  result.summary = {{"trials", result.rows.size()},
                    {"holds", result.holds},
                    {"violated", result.violated},
                    {"not_applicable", result.not_applicable},
                    {"holds_fraction", result.holds_fraction},
                    {"kappa", cfg.kappa},
                    {"perturb_eps", cfg.perturb_eps},
                    {"kind", to_string(cfg.kind)}};
  return result;
}

std::string bound_trials_csv(const BoundTrialResult& result) {
  std::ostringstream out;
  out << "n,trial,perturbation_norm,lhs,rhs,status,solver_converged\n";
  for (const auto& row : result.rows) {
    out << row.n << ',' << row.trial << ',' << format_double(row.perturbation_norm) << ','
        << format_double(row.lhs) << ',' << format_double(row.rhs) << ','
        << to_string(row.status) << ',' << (row.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

RankAuditResult run_rank_audit(const RankAuditConfig& cfg) {
  RankAuditResult result;
  for (int n : cfg.n_list) {
    for (int s = 0; s < cfg.states_per_n; ++s) {
      const std::uint64_t state_seed =
          stream_seed(cfg.master_seed, "rank-state", (std::uint64_t(n) << 32) ^ std::uint64_t(s));
      const auto state = random_state<double>(n, state_seed);
      for (Scheme scheme : cfg.schemes) {
        const auto plan = plan_for_scheme(scheme, n, cfg.schedule,
                                          stream_seed(cfg.master_seed, "rank-angles"));
        const auto system = build_exact_system(plan, state);
        const auto diag = jacobian_diagnostics(system, state_to_vars(state));
        RankAuditRow row;
        row.n = n;
        row.scheme = to_string(scheme);
        row.seed = state_seed;
        row.equations = system.num_equations();
        row.numeric_rank = diag.numeric_rank;
        row.sigma_max = diag.sigma_max;
        row.sigma_min = diag.sigma_min;
        row.jinv_norm = diag.jinv_norm;
        result.rows.push_back(std::move(row));
      }
    }
  }
  nlohmann::json per_n = nlohmann::json::array();
  for (int n : cfg.n_list) {
    nlohmann::json entry{{"n", n}};
    for (Scheme scheme : cfg.schemes) {
      int max_rank = 0;
      for (const auto& row : result.rows) {
        if (row.n == n && row.scheme == to_string(scheme)) {
          max_rank = std::max(max_rank, row.numeric_rank);
        }
      }
      entry[to_string(scheme) + "_max_rank"] = max_rank;
    }
    per_n.push_back(std::move(entry));
  }
  result.summary = {{"per_n", std::move(per_n)}};
  return result;
}

std::string rank_audit_csv(const RankAuditResult& result) {
  std::ostringstream out;
  out << "n,scheme,seed,equations,numeric_rank,sigma_max,sigma_min,jinv_norm\n";
  for (const auto& row : result.rows) {
    out << row.n << ',' << row.scheme << ',' << row.seed << ',' << row.equations << ','
        << row.numeric_rank << ',' << format_double(row.sigma_max) << ','
        << format_double(row.sigma_min) << ',' << format_double(row.jinv_norm) << '\n';
  }
  return out.str();
}

}  // namespace qamp
