#pragma once

// Deterministic synchronous-round execution of the algorithms over a
// multi-agent topology, with explicit message records and a per-iteration
// convergence trace.
//
// Round structure, central-node mode: each agent computes its local gradient,
// Hessian and edge errors, sends them to the server; the server forms the
// average gradient/Hessian, runs the inner direction loop, and broadcasts
// each agent its direction block. Peer mode: a consensus protocol produces
// per-agent averages, states are exchanged along edges to form edge errors,
// and each agent runs its own direction loop. Edge errors are relative
// measurements: an agent reads them off its out-neighbors' states without a
// recorded message; every recorded message travels either between adjacent
// agents (peer mode) or between an agent and the server (central mode).
//
// Runs are bit-reproducible: randomness only enters through the seeded
// initial states, rounds execute in a fixed order, and the CSV rendering is
// locale-independent.

#include "distopt/algorithms.hpp"
#include "distopt/common.hpp"
#include "distopt/consensus.hpp"
#include "distopt/control.hpp"
#include "distopt/graph.hpp"
#include "distopt/objective.hpp"

#include <optional>
#include <string>
#include <vector>

namespace distopt {

enum class Algorithm { dgd, docmc, doaoc, centralized, consensus_only };

std::string algorithm_name(Algorithm a);
std::optional<Algorithm> algorithm_from_name(const std::string& name);

inline constexpr int kServerId = -1;

enum class PayloadKind { gradient, hessian, edge_error, direction, state };

struct Message {
  long round = 0;
  int from = 0;  // agent index, or kServerId
  int to = 0;
  PayloadKind kind = PayloadKind::state;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> bytes;  // dimension header + 8-byte floats, LE
};

std::size_t payload_size(std::uint32_t rows, std::uint32_t cols);
std::vector<std::uint8_t> serialize_payload(const MatrixXd& m);
MatrixXd deserialize_payload(const std::vector<std::uint8_t>& bytes);

struct TraceRow {
  long k = 0;
  double err_to_opt = 0.0;     // ||x(k) - 1 ⊗ x*||
  double consensus_err = 0.0;  // ||x(k) - xbar(k)||
  double edge_norm = 0.0;      // ||e(k)||
  double f_gap = 0.0;          // F(xbar(k)) - F(x*)
  long msgs = 0;
  long bytes = 0;
  double wall_seconds = 0.0;   // measured, deliberately absent from the CSV
  VectorXd x;                  // stacked snapshot
};

struct ConvergenceTrace {
  Algorithm algorithm = Algorithm::docmc;
  int n = 0;
  int p = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  std::vector<Message> messages;  // populated when recording is enabled
  bool converged = false;
  long iterations = 0;
  double riccati_residual = std::numeric_limits<double>::quiet_NaN();
  int riccati_iterations = 0;
  MatrixXd riccati_p;      // stable solution, empty when the run has none
  MatrixXd riccati_gamma;  // Gamma_P, empty when the run has none
  VectorXd x_star;  // reference block of dimension p

  // Header `k,err_to_opt,consensus_err,edge_norm,f_gap,msgs,bytes`.
  std::string to_csv() const;
};

struct InitSpec {
  enum class Mode { random, consensus, given };
  Mode mode = Mode::random;
  double scale = 1.0;
  std::vector<VectorXd> given;  // one block per agent in `given` mode
};

struct SimSetup {
  Algorithm algorithm = Algorithm::docmc;
  DirectedGraph graph;
  ObjectiveSet objectives;
  CostWeights weights;
  AlgorithmConfig alg;
  ConsensusConfig::Mode consensus_mode = ConsensusConfig::Mode::exact;
  int consensus_rounds = 0;  // 0: 10 * diameter in linear mode
  InitSpec init;
  std::uint64_t seed = 0;
  bool star_mode = false;      // central mode without edge errors
  bool record_messages = true;
  CentralizedVariant centralized_variant = CentralizedVariant::exact;
  double riccati_tol = 1e-10;
  int riccati_max_iter = 10000;
};

ConvergenceTrace run_simulation(const SimSetup& setup);

// Algorithm-checked entry points.
ConvergenceTrace run_docmc(const SimSetup& setup);
ConvergenceTrace run_doaoc(const SimSetup& setup);
ConvergenceTrace run_dgd(const SimSetup& setup);

// Every recorded message must be agent<->server in central mode and between
// adjacent agents in peer mode. Returns human-readable violations.
std::vector<std::string> check_topology(const ConvergenceTrace& trace,
                                        const DirectedGraph& graph);

}  // namespace distopt
