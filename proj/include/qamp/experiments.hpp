#pragma once

// Experiment harness: end-to-end estimation pipelines, scaling sweeps,
// perturbation-bound trials and rank audits. Everything is deterministic
// given the master seed; wall-clock time is recorded but never feeds back
// into any computation.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qamp/metrics.hpp"

namespace qamp {

// Thrown when the numerics themselves fail (solver divergence); the CLI maps
// it to exit code 3 instead of the configuration-error code 2.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scheme { Method1, Extended, Naive, Linear3q };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& s);

struct PipelineConfig {
  Scheme scheme = Scheme::Method1;
  Metric metric = Metric::TotalVariation;
  double delta = 0.1;
  double fail = 0.05;
  std::int64_t shots_override = -1;  // -1: planner decides; 0: exact mode; >0: per entry
  std::uint64_t master_seed = 0;
  int restarts = 8;
  AngleSchedule schedule = AngleSchedule::Uniform;
  bool blind = false;  // plan from the solved state instead of the ground truth
  std::uint64_t max_shots_per_entry = 100000000;
};

// One row of records.csv; column order is stable.
struct ExperimentRecord {
  int n = 0;
  std::string scheme;
  std::string metric;
  double delta = 0;
  double epsilon = 0;
  std::uint64_t planned_shots = 0;  // total measurements budgeted by the planner
  double achieved = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0;
};

std::string records_csv_header();
std::string record_csv_row(const ExperimentRecord& record);
nlohmann::json record_to_json(const ExperimentRecord& record);

struct PipelineResult {
  ExperimentRecord record;
  ErrorReport<double> errors;
  std::optional<SolveReport<double>> solve;          // solver-based schemes
  std::optional<LinearSolveReport<double>> linear;   // linear3q
  MeasurementPlan<double> plan;
  std::vector<ProbabilityEstimate<double>> estimates;  // per plan entry
  nlohmann::json detail;  // plan, budgets, estimates metadata, reports
};

// entry_id,outcome_label,count,shots
std::string counts_csv(const std::vector<ProbabilityEstimate<double>>& estimates);

// Shot budget for one scheme/metric/size combination. Shots are uniform
// across entries and the failure budget is split uniformly (union bound).
struct ShotBudget {
  double epsilon = 0;             // per-entry accuracy
  double per_entry_fail = 0;
  std::uint64_t entries = 0;      // independent estimation campaigns
  std::uint64_t shots_per_entry = 0;
  std::uint64_t total = 0;
};

ShotBudget plan_shot_budget(Scheme scheme, Metric metric, int n, double delta, double fail,
                            double jinv_norm);

PipelineResult run_pipeline(const StateVector<double>& state, const PipelineConfig& config);

// --- scaling sweeps ---------------------------------------------------------

struct ScalingConfig {
  Scheme scheme = Scheme::Naive;
  Metric metric = Metric::TotalVariation;
  std::vector<int> n_list{2, 3};
  std::vector<std::uint64_t> shots_list;  // non-empty: sampled error-vs-shots sweep
  std::vector<double> delta_list;         // non-empty: planner-arithmetic sweep
  int seeds = 10;                         // trials per grid point (sampled sweep)
  double fail = 0.05;
  double delta = 0.1;                     // labels sampled-sweep records
  double jinv_norm = 1.0;                 // planner sweeps use this fixed value
  std::uint64_t master_seed = 0;
  int restarts = 8;
};

struct PowerFit {
  int n = 0;
  double slope = 0;
  double intercept = 0;
  int points = 0;
};

struct ScalingResult {
  std::vector<ExperimentRecord> records;
  std::vector<PowerFit> error_vs_shots;  // sampled sweep, one fit per n
  std::vector<PowerFit> shots_vs_delta;  // planner sweep, one fit per n
  nlohmann::json summary;
  bool any_diverged = false;
};

ScalingResult scaling_experiment(const ScalingConfig& config);

// --- perturbation-bound trials -----------------------------------------------

enum class PerturbationKind { RowSpace, TopSingular, Null, Zero };

std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& s);

struct BoundTrialConfig {
  std::vector<int> n_list{2, 3};
  int trials = 200;  // total, split evenly across n_list
  double perturb_eps = 1e-6;
  double kappa = 1.1;
  PerturbationKind kind = PerturbationKind::RowSpace;
  Scheme scheme = Scheme::Method1;
  AngleSchedule schedule = AngleSchedule::Uniform;
  std::uint64_t master_seed = 0;
};

struct BoundTrialRow {
  int n = 0;
  int trial = 0;
  double lhs = 0;
  double rhs = 0;
  double perturbation_norm = 0;
  BoundStatus status = BoundStatus::NotApplicable;
  bool converged = false;
};

struct BoundTrialResult {
  std::vector<BoundTrialRow> rows;
  int holds = 0;
  int violated = 0;
  int not_applicable = 0;
  double holds_fraction = 0;  // among applicable trials
  nlohmann::json summary;
};

BoundTrialResult run_bound_trials(const BoundTrialConfig& config);

std::string bound_trials_csv(const BoundTrialResult& result);

// --- rank audit ---------------------------------------------------------------

struct RankAuditConfig {
  std::vector<int> n_list{2, 3, 4, 5};
  int states_per_n = 20;
  std::vector<Scheme> schemes{Scheme::Method1, Scheme::Extended};
  AngleSchedule schedule = AngleSchedule::Uniform;
  std::uint64_t master_seed = 0;
};

struct RankAuditRow {
  int n = 0;
  std::string scheme;
  std::uint64_t seed = 0;
  Eigen::Index equations = 0;
  int numeric_rank = 0;
  double sigma_max = 0;
  double sigma_min = 0;
  double jinv_norm = 0;
};

struct RankAuditResult {
  std::vector<RankAuditRow> rows;
  nlohmann::json summary;
};

RankAuditResult run_rank_audit(const RankAuditConfig& config);

std::string rank_audit_csv(const RankAuditResult& result);

// Plan used by a scheme at size n (the naive scheme measures the full
// register in one entry).
MeasurementPlan<double> plan_for_scheme(Scheme scheme, int n, AngleSchedule schedule,
                                        std::uint64_t seed);

}  // namespace qamp
