#pragma once

// Experiment orchestration: the key-value config format, run execution with
// rate fitting and run-property checks, result serialization (trace CSV,
// metadata, rate report), side-by-side comparison of configs, and the
// built-in selftest.

#include "distopt/rate.hpp"
#include "distopt/simulator.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace distopt {

struct ExperimentConfig {
  std::string name = "inline";
  int schema_version = 1;
  Algorithm algorithm = Algorithm::docmc;
  std::uint64_t seed = 0;

  long max_iters = 100;
  int inner_cap = -1;  // -1: uncapped (config value 0)
  double eta = 0.5;
  bool eta_auto = false;
  DgdSchedule dgd;
  double tol_grad = 1e-9;
  double tol_edge = 1e-9;
  bool require_convergence = false;
  bool star_mode = false;
  CentralizedVariant centralized_variant = CentralizedVariant::exact;

  std::optional<DirectedGraph> graph;

  std::string objective_kind = "quadratic";
  int p = 1;
  std::uint64_t objective_seed = 0;
  double m1 = 1.0;
  double m2 = 2.0;
  std::map<int, MatrixXd> literal_a;  // agent index (0-based) -> A_i
  std::map<int, VectorXd> literal_b;
  int logistic_samples = 20;
  double logistic_reg = 0.1;

  double weight_q = 1.0;
  double weight_r = 1.0;
  double weight_h = 1.0;

  ConsensusConfig::Mode consensus_mode = ConsensusConfig::Mode::exact;
  int consensus_rounds = 0;  // 0: 10 * diameter

  InitSpec::Mode init_mode = InitSpec::Mode::random;
  double init_scale = 1.0;
  std::map<int, VectorXd> init_given;

  bool record_messages = true;
  std::string out_dir = "out";
  double riccati_tol = 1e-10;
  int riccati_max_iter = 10000;

  static ExperimentConfig parse_file(const std::string& path);
  // base_dir resolves relative graph.file references.
  static ExperimentConfig parse_string(const std::string& text,
                                       const std::string& base_dir = ".");

  std::string echo() const;  // normalized, re-parseable key-value lines
  ObjectiveSet build_objectives() const;
  SimSetup build_setup() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  ConvergenceTrace trace;
  RateReport report;
  bool fit_ok = false;  // false: too few usable iterations to classify
  std::vector<std::string> property_failures;
  int status = 0;  // 0 ok, 4 when a run property failed

  std::string classification() const {
    return fit_ok ? report.classification : "insufficient";
  }
  std::string report_text() const;
  std::string meta_text() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes <dir>/trace.csv, <dir>/trace.meta, <dir>/report.txt.
void write_result(const ExperimentResult& result, const std::string& dir);

// Runs every config and joins iterations/messages/bytes needed to bring
// ||x - x*|| under `tol`, plus the fitted classification and rate constants.
std::string compare_experiments(const std::vector<ExperimentConfig>& configs,
                                double tol);

// Re-fit a saved trace CSV; context-free, so only trace-derived fields are
// populated. Emits the same report format as run_experiment.
std::string fit_trace_csv_text(const std::string& csv_text);
std::string fit_trace_csv_file(const std::string& path);

// Invariant suite over bundled instances; returns the number of failed
// checks and appends one line per check to `out`.
int selftest(std::string& out);

}  // namespace distopt
