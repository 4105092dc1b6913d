#include "distopt/simulator.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cstring>
#include <sstream>

namespace distopt {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::dgd: return "dgd";
    case Algorithm::docmc: return "docmc";
    case Algorithm::doaoc: return "doaoc";
    case Algorithm::centralized: return "centralized";
    case Algorithm::consensus_only: return "consensus_only";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
  if (name == "dgd") return Algorithm::dgd;
  if (name == "docmc") return Algorithm::docmc;
  if (name == "doaoc") return Algorithm::doaoc;
  if (name == "centralized") return Algorithm::centralized;
  if (name == "consensus_only") return Algorithm::consensus_only;
  return std::nullopt;
}

std::size_t payload_size(std::uint32_t rows, std::uint32_t cols) {
  return 8 + 8 * static_cast<std::size_t>(rows) * cols;
}

std::vector<std::uint8_t> serialize_payload(const MatrixXd& m) {
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  std::vector<std::uint8_t> out(payload_size(rows, cols));
  auto put_u32 = [&](std::size_t at, std::uint32_t v) {
    for (int b = 0; b < 4; ++b)
      out[at + b] = static_cast<std::uint8_t>((v >> (8 * b)) & 0xff);
  };
  put_u32(0, rows);
  put_u32(4, cols);
  std::size_t at = 8;
  for (std::uint32_t c = 0; c < cols; ++c)
    for (std::uint32_t r = 0; r < rows; ++r) {
      std::uint64_t bits;
      const double v = m(r, c);
      std::memcpy(&bits, &v, 8);
      for (int b = 0; b < 8; ++b)
        out[at++] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff);
    }
  return out;
}

MatrixXd deserialize_payload(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) fail(ErrorCode::invalid, "payload too short");
  auto get_u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(bytes[at + b]) << (8 * b);
    return v;
  };
  const std::uint32_t rows = get_u32(0);
  const std::uint32_t cols = get_u32(4);
  if (bytes.size() != payload_size(rows, cols))
    fail(ErrorCode::invalid, "payload size mismatch");
  MatrixXd m(rows, cols);
  std::size_t at = 8;
  for (std::uint32_t c = 0; c < cols; ++c)
    for (std::uint32_t r = 0; r < rows; ++r) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(bytes[at++]) << (8 * b);
      double v;
      std::memcpy(&v, &bits, 8);
      m(r, c) = v;
    }
  return m;
}

std::string ConvergenceTrace::to_csv() const {
  std::ostringstream out;
  out << "k,err_to_opt,consensus_err,edge_norm,f_gap,msgs,bytes\n";
  for (const auto& row : rows)
    out << row.k << ',' << format_double(row.err_to_opt) << ','
        << format_double(row.consensus_err) << ','
        << format_double(row.edge_norm) << ',' << format_double(row.f_gap)
        << ',' << row.msgs << ',' << row.bytes << '\n';
  return out.str();
}

namespace {

class MessageRecorder {
 public:
  MessageRecorder(bool keep, std::vector<Message>* sink)
      : keep_(keep), sink_(sink) {}

  void send(long round, int from, int to, PayloadKind kind,
            const MatrixXd& payload) {
    ++round_msgs_;
    round_bytes_ += static_cast<long>(payload_size(
        static_cast<std::uint32_t>(payload.rows()),
        static_cast<std::uint32_t>(payload.cols())));
    if (keep_)
      sink_->push_back(Message{round, from, to, kind,
                               static_cast<std::uint32_t>(payload.rows()),
                               static_cast<std::uint32_t>(payload.cols()),
                               serialize_payload(payload)});
  }

  long take_msgs() { return std::exchange(round_msgs_, 0); }
  long take_bytes() { return std::exchange(round_bytes_, 0); }

 private:
  bool keep_;
  std::vector<Message>* sink_;
  long round_msgs_ = 0;
  long round_bytes_ = 0;
};

bool should_stop(const AlgorithmConfig& cfg, double mean_grad_norm,
                 double edge_norm) {
  if (cfg.tol_grad <= 0.0 && cfg.tol_edge <= 0.0) return false;
  const bool g_ok = cfg.tol_grad <= 0.0 || mean_grad_norm <= cfg.tol_grad;
  const bool e_ok = cfg.tol_edge <= 0.0 || edge_norm <= cfg.tol_edge;
  return g_ok && e_ok;
}

VectorXd initial_states(const SimSetup& s, int n, int p) {
  Rng rng(s.seed);
  VectorXd x(static_cast<Eigen::Index>(n) * p);
  switch (s.init.mode) {
    case InitSpec::Mode::random:
      for (int i = 0; i < n; ++i)
        x.segment(i * p, p) = s.init.scale * rng.normal_vector(p);
      break;
    case InitSpec::Mode::consensus: {
      const VectorXd common = s.init.scale * rng.normal_vector(p);
      for (int i = 0; i < n; ++i) x.segment(i * p, p) = common;
      break;
    }
    case InitSpec::Mode::given: {
      if (static_cast<int>(s.init.given.size()) != n)
        fail(ErrorCode::config, "init.x must list every agent");
      for (int i = 0; i < n; ++i) {
        if (s.init.given[i].size() != p)
          fail(ErrorCode::config, "init.x entries must have dimension p");
        x.segment(i * p, p) = s.init.given[i];
      }
      break;
    }
  }
  return x;
}

struct RoundMetrics {
  double err_to_opt;
  double consensus_err;
  double edge_norm;
  double f_gap;
  double mean_grad_norm;
};

class Runner {
 public:
  explicit Runner(const SimSetup& s)
      : s_(s),
        n_(s.graph.n()),
        p_(s.objectives.dim()),
        inc_(incidence(s.graph)),
        recorder_(s.record_messages, &trace_.messages) {
    if (s.objectives.n() != n_)
      fail(ErrorCode::invalid, "graph and objective set disagree on n");
    if (s.weights.n() != n_ || s.weights.p() != p_)
      fail(ErrorCode::invalid, "cost weights do not match the instance");
    if (s.star_mode && s.algorithm != Algorithm::docmc)
      fail(ErrorCode::invalid, "star mode applies to the central-node method only");
    const bool needs_riccati = !s.star_mode &&
                               (s.algorithm == Algorithm::docmc ||
                                s.algorithm == Algorithm::doaoc ||
                                s.algorithm == Algorithm::consensus_only);
    bp_ = inc_.expanded(p_);
    if (needs_riccati) {
      ric_ = solve_riccati(s.weights, inc_, s.riccati_tol, s.riccati_max_iter);
      trace_.riccati_residual = ric_->residual;
      trace_.riccati_iterations = ric_->iterations;
      trace_.riccati_p = ric_->p;
      trace_.riccati_gamma = ric_->gamma_p;
    }
    eta_ = s.alg.eta_auto ? 1.0 / s.objectives.m2() : s.alg.eta;
    if (s.algorithm == Algorithm::doaoc) {
      if (!(eta_ > 0.0 && eta_ < 2.0 / s.objectives.m2()))
        fail(ErrorCode::invalid,
             "doaoc step must satisfy 0 < eta < 2/m2 (eta = " +
                 format_double(eta_) + ", 2/m2 = " +
                 format_double(2.0 / s.objectives.m2()) + ")");
    }
    trace_.algorithm = s.algorithm;
    trace_.n = n_;
    trace_.p = p_;
    trace_.seed = s.seed;
    x_ = initial_states(s, n_, p_);
    if (s.algorithm == Algorithm::consensus_only) {
      VectorXd mean = VectorXd::Zero(p_);
      for (int i = 0; i < n_; ++i) mean += x_.segment(i * p_, p_);
      trace_.x_star = mean / n_;
    } else {
      trace_.x_star = s.objectives.reference_minimizer(1e-12);
    }
    if (s.algorithm == Algorithm::centralized) {
      VectorXd mean = VectorXd::Zero(p_);
      for (int i = 0; i < n_; ++i) mean += x_.segment(i * p_, p_);
      y_ = mean / n_;
    }
    if (s.consensus_mode == ConsensusConfig::Mode::linear ||
        s.algorithm == Algorithm::dgd) {
      mixing_ = mixing_matrix(s.graph);
      mixing_expanded_ = kron_identity(mixing_, p_);
    }
    consensus_rounds_ = s.consensus_rounds > 0
                            ? s.consensus_rounds
                            : std::max(1, 10 * s.graph.diameter());
  }

  ConvergenceTrace run() {
    for (long k = 0;; ++k) {
      const auto started = std::chrono::steady_clock::now();
      const RoundMetrics m = metrics();
      const bool stop = should_stop(s_.alg, m.mean_grad_norm, m.edge_norm);
      const bool budget = k >= s_.alg.max_iters;
      if (stop || budget) {
        push_row(k, m, 0.0);
        trace_.converged = stop;
        trace_.iterations = k;
        break;
      }
      step(k);
      const VectorXd& produced =
          s_.algorithm == Algorithm::centralized ? y_next_ : next_;
      if (!produced.allFinite())
        fail(ErrorCode::numeric,
             "non-finite state after round " + std::to_string(k));
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        started)
              .count();
      push_row(k, m, wall);
      advance();
    }
    if (s_.alg.require_convergence && !trace_.converged)
      fail(ErrorCode::numeric,
           "run did not converge within " + std::to_string(s_.alg.max_iters) +
               " iterations");
    return std::move(trace_);
  }

 private:
  RoundMetrics metrics() const {
    RoundMetrics m{};
    if (s_.algorithm == Algorithm::centralized) {
      m.err_to_opt = (y_ - trace_.x_star).norm();
      m.consensus_err = 0.0;
      m.edge_norm = 0.0;
      m.f_gap = s_.objectives.total_value(y_) -
                s_.objectives.total_value(trace_.x_star);
      m.mean_grad_norm = s_.objectives.total_gradient(y_).norm() / n_;
      return m;
    }
    VectorXd xbar = VectorXd::Zero(p_);
    for (int i = 0; i < n_; ++i) xbar += x_.segment(i * p_, p_);
    xbar /= n_;
    double err2 = 0.0, dev2 = 0.0;
    for (int i = 0; i < n_; ++i) {
      err2 += (x_.segment(i * p_, p_) - trace_.x_star).squaredNorm();
      dev2 += (x_.segment(i * p_, p_) - xbar).squaredNorm();
    }
    m.err_to_opt = std::sqrt(err2);
    m.consensus_err = std::sqrt(dev2);
    m.edge_norm = (bp_ * x_).norm();
    if (s_.algorithm == Algorithm::consensus_only) {
      m.f_gap = 0.0;
      m.mean_grad_norm = 0.0;
    } else {
      m.f_gap = s_.objectives.total_value(xbar) -
                s_.objectives.total_value(trace_.x_star);
      VectorXd mean_grad = VectorXd::Zero(p_);
      for (int i = 0; i < n_; ++i)
        mean_grad += s_.objectives.gradient(i, x_.segment(i * p_, p_));
      m.mean_grad_norm = (mean_grad / n_).norm();
    }
    return m;
  }

  void push_row(long k, const RoundMetrics& m, double wall) {
    TraceRow row;
    row.k = k;
    row.err_to_opt = m.err_to_opt;
    row.consensus_err = m.consensus_err;
    row.edge_norm = m.edge_norm;
    row.f_gap = m.f_gap;
    row.msgs = recorder_.take_msgs();
    row.bytes = recorder_.take_bytes();
    row.wall_seconds = wall;
    row.x = s_.algorithm == Algorithm::centralized ? y_ : x_;
    trace_.rows.push_back(std::move(row));
  }

  VectorXd agent_block(int i) const { return x_.segment(i * p_, p_); }

  std::vector<VectorXd> local_gradients() const {
    std::vector<VectorXd> g;
    g.reserve(n_);
    for (int i = 0; i < n_; ++i)
      g.push_back(s_.objectives.gradient(i, agent_block(i)));
    return g;
  }

  std::vector<MatrixXd> local_hessians() const {
    std::vector<MatrixXd> h;
    h.reserve(n_);
    for (int i = 0; i < n_; ++i)
      h.push_back(s_.objectives.hessian(i, agent_block(i)));
    return h;
  }

  // Neighbor state exchange: for each ordered edge (i, j), agent j ships its
  // state to agent i, who then holds e_ij = x_i - x_j.
  void exchange_states(long k) {
    for (const auto& [i, j] : inc_.edge_order())
      recorder_.send(k, j, i, PayloadKind::state, agent_block(j));
  }

  // Consensus messages for g_i and h_i; returns per-agent averages.
  std::pair<std::vector<VectorXd>, std::vector<MatrixXd>> run_consensus(
      long k, const std::vector<VectorXd>& grads,
      const std::vector<MatrixXd>& hess) {
    ConsensusConfig cfg;
    cfg.mode = s_.consensus_mode;
    if (cfg.mode == ConsensusConfig::Mode::exact) {
      for (const auto& [i, j] : inc_.edge_order()) {
        recorder_.send(k, j, i, PayloadKind::gradient, grads[j]);
        recorder_.send(k, j, i, PayloadKind::hessian, hess[j]);
      }
      return {average_vectors(grads, cfg), average_matrices(hess, cfg)};
    }
    cfg.rounds = 1;
    cfg.mixing = mixing_;
    std::vector<VectorXd> g = grads;
    std::vector<MatrixXd> h = hess;
    for (int r = 0; r < consensus_rounds_; ++r) {
      for (const auto& [i, j] : inc_.edge_order()) {
        recorder_.send(k, j, i, PayloadKind::gradient, g[j]);
        recorder_.send(k, j, i, PayloadKind::hessian, h[j]);
      }
      g = average_vectors(g, cfg);
      h = average_matrices(h, cfg);
    }
    return {g, h};
  }

  void step(long k) {
    switch (s_.algorithm) {
      case Algorithm::docmc: step_docmc(k); break;
      case Algorithm::doaoc: step_doaoc(k); break;
      case Algorithm::dgd: step_dgd(k); break;
      case Algorithm::centralized: step_centralized(k); break;
      case Algorithm::consensus_only: step_consensus_only(k); break;
    }
  }

  void step_docmc(long k) {
    const auto grads = local_gradients();
    const auto hess = local_hessians();
    const VectorXd e = bp_ * x_;
    for (int i = 0; i < n_; ++i) {
      recorder_.send(k, i, kServerId, PayloadKind::gradient, grads[i]);
      recorder_.send(k, i, kServerId, PayloadKind::hessian, hess[i]);
      if (!s_.star_mode) {
        const auto [first, count] = inc_.agent_rows(i);
        if (count > 0)
          recorder_.send(k, i, kServerId, PayloadKind::edge_error,
                         e.segment(first * p_, count * p_));
      }
    }
    VectorXd mean_grad = VectorXd::Zero(p_);
    MatrixXd mean_hess = MatrixXd::Zero(p_, p_);
    for (int i = 0; i < n_; ++i) {
      mean_grad += grads[i];
      mean_hess += hess[i];
    }
    mean_grad /= n_;
    mean_hess /= n_;

    if (s_.star_mode) {
      // Edge-free degenerate recursion, applied blockwise by the server.
      next_ = x_;
      for (int i = 0; i < n_; ++i) {
        const VectorXd yi = centralized_step(
            agent_block(i), mean_grad, mean_hess, CentralizedVariant::exact,
            eta_, static_cast<int>(k), s_.weights.r(i), s_.alg.inner_cap);
        recorder_.send(k, kServerId, i, PayloadKind::direction,
                       yi - agent_block(i));
        next_.segment(i * p_, p_) = yi;
      }
      return;
    }

    IterationState st;
    st.k = static_cast<int>(k);
    st.x = x_;
    st.e = e;
    st.g = VectorXd(static_cast<Eigen::Index>(n_) * p_);
    std::vector<MatrixXd> hblocks(n_, mean_hess);
    st.h = block_diag(hblocks);
    for (int i = 0; i < n_; ++i) st.g.segment(i * p_, p_) = mean_grad;
    const VectorXd d = docmc_direction(st, *ric_, s_.alg.inner_cap);
    for (int i = 0; i < n_; ++i)
      recorder_.send(k, kServerId, i, PayloadKind::direction,
                     d.segment(i * p_, p_));
    next_ = x_ + d;
  }

  void step_doaoc(long k) {
    const auto grads = local_gradients();
    const auto hess = local_hessians();
    const auto [g_i, h_i] = run_consensus(k, grads, hess);
    exchange_states(k);
    IterationState st;
    st.k = static_cast<int>(k);
    st.x = x_;
    st.e = bp_ * x_;
    st.g = VectorXd(static_cast<Eigen::Index>(n_) * p_);
    for (int i = 0; i < n_; ++i) st.g.segment(i * p_, p_) = g_i[i];
    st.h = block_diag(h_i);
    const VectorXd d = doaoc_direction(st, *ric_, eta_, s_.alg.inner_cap);
    next_ = x_ + d;
  }

  void step_dgd(long k) {
    exchange_states(k);
    next_ = dgd_step(x_, s_.objectives.stacked_gradient(x_), mixing_expanded_,
                     s_.alg.dgd.at(k));
  }

  void step_centralized(long k) {
    const VectorXd g = s_.objectives.total_gradient(y_) / n_;
    const MatrixXd h = s_.objectives.total_hessian(y_) / n_;
    y_next_ = centralized_step(y_, g, h, s_.centralized_variant, eta_,
                               static_cast<int>(k), s_.weights.r(0),
                               s_.alg.inner_cap);
  }

  void step_consensus_only(long k) {
    exchange_states(k);
    const VectorXd e = bp_ * x_;
    next_ = x_ + consensus_only_direction(e, *ric_);
  }

  void advance() {
    if (s_.algorithm == Algorithm::centralized) {
      y_ = y_next_;
    } else {
      x_ = next_;
      next_.resize(0);
    }
  }

  const SimSetup& s_;
  int n_;
  int p_;
  IncidenceMap inc_;
  MatrixXd bp_;
  std::optional<RiccatiSolution> ric_;
  MatrixXd mixing_;
  MatrixXd mixing_expanded_;
  int consensus_rounds_ = 1;
  double eta_ = 0.0;
  VectorXd x_;
  VectorXd next_;
  VectorXd y_;       // centralized state
  VectorXd y_next_;
  ConvergenceTrace trace_;
  MessageRecorder recorder_;
};

}  // namespace

ConvergenceTrace run_simulation(const SimSetup& setup) {
  Runner runner(setup);
  return runner.run();
}

ConvergenceTrace run_docmc(const SimSetup& setup) {
  if (setup.algorithm != Algorithm::docmc)
    fail(ErrorCode::invalid, "setup does not select docmc");
  return run_simulation(setup);
}

ConvergenceTrace run_doaoc(const SimSetup& setup) {
  if (setup.algorithm != Algorithm::doaoc)
    fail(ErrorCode::invalid, "setup does not select doaoc");
  return run_simulation(setup);
}

ConvergenceTrace run_dgd(const SimSetup& setup) {
  if (setup.algorithm != Algorithm::dgd)
    fail(ErrorCode::invalid, "setup does not select dgd");
  return run_simulation(setup);
}

std::vector<std::string> check_topology(const ConvergenceTrace& trace,
                                        const DirectedGraph& graph) {
  std::vector<std::string> violations;
  const bool central = trace.algorithm == Algorithm::docmc ||
                       trace.algorithm == Algorithm::centralized;
  for (const auto& m : trace.messages) {
    const bool involves_server = m.from == kServerId || m.to == kServerId;
    if (central) {
      if (!involves_server)
        violations.push_back("round " + std::to_string(m.round) +
                             ": agent-to-agent message " +
                             std::to_string(m.from) + " -> " +
                             std::to_string(m.to) + " in central mode");
      continue;
    }
    if (involves_server) {
      violations.push_back("round " + std::to_string(m.round) +
                           ": server message in peer mode");
      continue;
    }
    if (!graph.adjacent(m.from, m.to))
      violations.push_back("round " + std::to_string(m.round) +
                           ": message between non-adjacent agents " +
                           std::to_string(m.from) + " -> " +
                           std::to_string(m.to));
  }
  return violations;
}

}  // namespace distopt
