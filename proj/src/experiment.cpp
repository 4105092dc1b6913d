#include "distopt/experiment.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace distopt {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  fail(ErrorCode::config, "config key `" + key + "`: " + why);
}

double parse_num(const std::string& key, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    bad_key(key, "expected a number, got `" + tok + "`");
  }
}

long parse_int(const std::string& key, const std::string& tok) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    bad_key(key, "expected an integer, got `" + tok + "`");
  }
}

bool parse_bool(const std::string& key, const std::string& tok) {
  if (tok == "on" || tok == "true" || tok == "1") return true;
  if (tok == "off" || tok == "false" || tok == "0") return false;
  bad_key(key, "expected on/off, got `" + tok + "`");
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_string(const std::string& text,
                                                const std::string& base_dir) {
  ExperimentConfig cfg;
  bool saw_schema = false, saw_algorithm = false;
  int inline_n = -1;
  std::vector<Edge> inline_edges;
  std::string graph_file;
  std::set<std::string> seen;
  const std::set<std::string> repeatable = {"graph.edge", "objective.A",
                                            "objective.b", "init.x"};

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    const auto args = std::vector<std::string>(toks.begin() + 1, toks.end());
    auto need = [&](std::size_t count) {
      if (args.size() != count)
        bad_key(key, "expected " + std::to_string(count) +
                         " value(s) on line " + std::to_string(lineno));
    };
    if (!repeatable.count(key) && !seen.insert(key).second)
      bad_key(key, "duplicate (line " + std::to_string(lineno) + ")");

    if (key == "schema_version") {
      need(1);
      if (parse_int(key, args[0]) != 1)
        bad_key(key, "unsupported version `" + args[0] + "`");
      saw_schema = true;
    } else if (key == "algorithm") {
      need(1);
      const auto a = algorithm_from_name(args[0]);
      if (!a) bad_key(key, "unknown algorithm `" + args[0] + "`");
      cfg.algorithm = *a;
      saw_algorithm = true;
    } else if (key == "seed") {
      need(1);
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, args[0]));
    } else if (key == "max_iters") {
      need(1);
      cfg.max_iters = parse_int(key, args[0]);
      if (cfg.max_iters < 0) bad_key(key, "must be nonnegative");
    } else if (key == "inner_cap") {
      need(1);
      const long v = parse_int(key, args[0]);
      if (v < 0) bad_key(key, "must be nonnegative (0 = uncapped)");
      cfg.inner_cap = v == 0 ? -1 : static_cast<int>(v);
    } else if (key == "eta") {
      need(1);
      if (args[0] == "auto") {
        cfg.eta_auto = true;
      } else {
        cfg.eta = parse_num(key, args[0]);
        if (!(cfg.eta > 0.0)) bad_key(key, "must be positive");
      }
    } else if (key == "dgd.schedule") {
      need(1);
      if (args[0] == "constant")
        cfg.dgd.kind = DgdSchedule::Kind::constant;
      else if (args[0] == "harmonic")
        cfg.dgd.kind = DgdSchedule::Kind::harmonic;
      else
        bad_key(key, "expected constant or harmonic");
    } else if (key == "dgd.step") {
      need(1);
      cfg.dgd.value = parse_num(key, args[0]);
      if (cfg.dgd.value < 0.0) bad_key(key, "must be nonnegative");
    } else if (key == "tol.grad") {
      need(1);
      cfg.tol_grad = parse_num(key, args[0]);
    } else if (key == "tol.edge") {
      need(1);
      cfg.tol_edge = parse_num(key, args[0]);
    } else if (key == "require_convergence") {
      need(1);
      cfg.require_convergence = parse_bool(key, args[0]);
    } else if (key == "star_mode") {
      need(1);
      cfg.star_mode = parse_bool(key, args[0]);
    } else if (key == "centralized.variant") {
      need(1);
      if (args[0] == "exact")
        cfg.centralized_variant = CentralizedVariant::exact;
      else if (args[0] == "eta")
        cfg.centralized_variant = CentralizedVariant::eta;
      else
        bad_key(key, "expected exact or eta");
    } else if (key == "graph.n") {
      need(1);
      inline_n = static_cast<int>(parse_int(key, args[0]));
    } else if (key == "graph.edge") {
      need(3);
      inline_edges.push_back({static_cast<int>(parse_int(key, args[0])) - 1,
                              static_cast<int>(parse_int(key, args[1])) - 1,
                              parse_num(key, args[2])});
    } else if (key == "graph.file") {
      need(1);
      graph_file = args[0];
    } else if (key == "objective.kind") {
      need(1);
      if (args[0] != "quadratic" && args[0] != "logistic")
        bad_key(key, "expected quadratic or logistic");
      cfg.objective_kind = args[0];
    } else if (key == "objective.p") {
      need(1);
      cfg.p = static_cast<int>(parse_int(key, args[0]));
      if (cfg.p < 1) bad_key(key, "must be at least 1");
    } else if (key == "objective.seed") {
      need(1);
      cfg.objective_seed = static_cast<std::uint64_t>(parse_int(key, args[0]));
    } else if (key == "objective.m1") {
      need(1);
      cfg.m1 = parse_num(key, args[0]);
    } else if (key == "objective.m2") {
      need(1);
      cfg.m2 = parse_num(key, args[0]);
    } else if (key == "objective.A" || key == "objective.b" ||
               key == "init.x") {
      if (args.size() < 2) bad_key(key, "expected an agent index and entries");
      const int agent = static_cast<int>(parse_int(key, args[0])) - 1;
      std::vector<double> vals;
      for (std::size_t i = 1; i < args.size(); ++i)
        vals.push_back(parse_num(key, args[i]));
      if (key == "objective.A") {
        const int p = static_cast<int>(std::lround(std::sqrt(
            static_cast<double>(vals.size()))));
        if (p * p != static_cast<int>(vals.size()))
          bad_key(key, "entry count must be a perfect square (row-major)");
        MatrixXd a(p, p);
        for (int r = 0; r < p; ++r)
          for (int c = 0; c < p; ++c) a(r, c) = vals[r * p + c];
        if (!cfg.literal_a.emplace(agent, std::move(a)).second)
          bad_key(key, "duplicate agent " + std::to_string(agent + 1));
      } else {
        VectorXd v = Eigen::Map<VectorXd>(vals.data(), vals.size());
        auto& target = key == "objective.b" ? cfg.literal_b : cfg.init_given;
        if (!target.emplace(agent, std::move(v)).second)
          bad_key(key, "duplicate agent " + std::to_string(agent + 1));
      }
    } else if (key == "objective.samples") {
      need(1);
      cfg.logistic_samples = static_cast<int>(parse_int(key, args[0]));
      if (cfg.logistic_samples < 0) bad_key(key, "must be nonnegative");
    } else if (key == "objective.reg") {
      need(1);
      cfg.logistic_reg = parse_num(key, args[0]);
      if (!(cfg.logistic_reg > 0.0)) bad_key(key, "must be positive");
    } else if (key == "weights.q") {
      need(1);
      cfg.weight_q = parse_num(key, args[0]);
      if (cfg.weight_q < 0.0) bad_key(key, "must be nonnegative");
    } else if (key == "weights.r") {
      need(1);
      cfg.weight_r = parse_num(key, args[0]);
      if (!(cfg.weight_r > 0.0)) bad_key(key, "must be positive");
    } else if (key == "weights.h") {
      need(1);
      cfg.weight_h = parse_num(key, args[0]);
      if (cfg.weight_h < 0.0) bad_key(key, "must be nonnegative");
    } else if (key == "consensus.mode") {
      need(1);
      if (args[0] == "exact")
        cfg.consensus_mode = ConsensusConfig::Mode::exact;
      else if (args[0] == "linear")
        cfg.consensus_mode = ConsensusConfig::Mode::linear;
      else
        bad_key(key, "expected exact or linear");
    } else if (key == "consensus.rounds") {
      need(1);
      cfg.consensus_rounds = static_cast<int>(parse_int(key, args[0]));
      if (cfg.consensus_rounds < 0) bad_key(key, "must be nonnegative");
    } else if (key == "init.mode") {
      need(1);
      if (args[0] == "random")
        cfg.init_mode = InitSpec::Mode::random;
      else if (args[0] == "consensus")
        cfg.init_mode = InitSpec::Mode::consensus;
      else if (args[0] == "given")
        cfg.init_mode = InitSpec::Mode::given;
      else
        bad_key(key, "expected random, consensus, or given");
    } else if (key == "init.scale") {
      need(1);
      cfg.init_scale = parse_num(key, args[0]);
    } else if (key == "trace.messages") {
      need(1);
      cfg.record_messages = parse_bool(key, args[0]);
    } else if (key == "out.dir") {
      need(1);
      cfg.out_dir = args[0];
    } else if (key == "riccati.tol") {
      need(1);
      cfg.riccati_tol = parse_num(key, args[0]);
      if (!(cfg.riccati_tol > 0.0)) bad_key(key, "must be positive");
    } else if (key == "riccati.max_iter") {
      need(1);
      cfg.riccati_max_iter = static_cast<int>(parse_int(key, args[0]));
      if (cfg.riccati_max_iter < 1) bad_key(key, "must be positive");
    } else {
      bad_key(key, "unknown key (line " + std::to_string(lineno) + ")");
    }
  }

  if (!saw_schema) fail(ErrorCode::config, "config key `schema_version`: missing");
  if (!saw_algorithm) fail(ErrorCode::config, "config key `algorithm`: missing");

  if (!graph_file.empty()) {
    if (inline_n >= 0 || !inline_edges.empty())
      fail(ErrorCode::config,
           "config key `graph.file`: exclusive with inline graph.n/graph.edge");
    const auto path = std::filesystem::path(base_dir) / graph_file;
    cfg.graph = DirectedGraph::from_file(path.string());
  } else if (inline_n >= 0) {
    cfg.graph = DirectedGraph(inline_n, std::move(inline_edges));
  } else {
    fail(ErrorCode::config, "config key `graph.n`: missing (or use graph.file)");
  }
  if (!(cfg.m1 > 0.0 && cfg.m1 <= cfg.m2))
    fail(ErrorCode::config, "config key `objective.m1`: need 0 < m1 <= m2");
  if (cfg.dgd.kind == DgdSchedule::Kind::harmonic && !(cfg.dgd.value > 0.0))
    fail(ErrorCode::config,
         "config key `dgd.step`: harmonic schedule needs a positive value");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto cfg = parse_string(
      buf.str(), std::filesystem::path(path).parent_path().string());
  cfg.name = std::filesystem::path(path).stem().string();
  return cfg;
}

std::string ExperimentConfig::echo() const {
  std::ostringstream out;
  out << "schema_version 1\n";
  out << "algorithm " << algorithm_name(algorithm) << "\n";
  out << "seed " << seed << "\n";
  out << "max_iters " << max_iters << "\n";
  out << "inner_cap " << (inner_cap < 0 ? 0 : inner_cap) << "\n";
  out << "eta " << (eta_auto ? "auto" : format_double(eta)) << "\n";
  out << "dgd.schedule "
      << (dgd.kind == DgdSchedule::Kind::constant ? "constant" : "harmonic")
      << "\n";
  out << "dgd.step " << format_double(dgd.value) << "\n";
  out << "tol.grad " << format_double(tol_grad) << "\n";
  out << "tol.edge " << format_double(tol_edge) << "\n";
  out << "require_convergence " << (require_convergence ? "on" : "off") << "\n";
  out << "star_mode " << (star_mode ? "on" : "off") << "\n";
  out << "centralized.variant "
      << (centralized_variant == CentralizedVariant::exact ? "exact" : "eta")
      << "\n";
  out << "graph.n " << graph->n() << "\n";
  for (const auto& e : graph->edges())
    out << "graph.edge " << e.from + 1 << " " << e.to + 1 << " "
        << format_double(e.weight) << "\n";
  out << "objective.kind " << objective_kind << "\n";
  out << "objective.p " << p << "\n";
  out << "objective.seed " << objective_seed << "\n";
  if (objective_kind == "quadratic") {
    out << "objective.m1 " << format_double(m1) << "\n";
    out << "objective.m2 " << format_double(m2) << "\n";
    for (const auto& [agent, a] : literal_a) {
      out << "objective.A " << agent + 1;
      for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) out << " " << format_double(a(r, c));
      out << "\n";
    }
    for (const auto& [agent, b] : literal_b) {
      out << "objective.b " << agent + 1;
      for (int r = 0; r < b.size(); ++r) out << " " << format_double(b[r]);
      out << "\n";
    }
  } else {
    out << "objective.samples " << logistic_samples << "\n";
    out << "objective.reg " << format_double(logistic_reg) << "\n";
  }
  out << "weights.q " << format_double(weight_q) << "\n";
  out << "weights.r " << format_double(weight_r) << "\n";
  out << "weights.h " << format_double(weight_h) << "\n";
  out << "consensus.mode "
      << (consensus_mode == ConsensusConfig::Mode::exact ? "exact" : "linear")
      << "\n";
  out << "consensus.rounds " << consensus_rounds << "\n";
  out << "init.mode "
      << (init_mode == InitSpec::Mode::random
              ? "random"
              : init_mode == InitSpec::Mode::consensus ? "consensus" : "given")
      << "\n";
  out << "init.scale " << format_double(init_scale) << "\n";
  for (const auto& [agent, v] : init_given) {
    out << "init.x " << agent + 1;
    for (int r = 0; r < v.size(); ++r) out << " " << format_double(v[r]);
    out << "\n";
  }
  out << "trace.messages " << (record_messages ? "on" : "off") << "\n";
  out << "out.dir " << out_dir << "\n";
  out << "riccati.tol " << format_double(riccati_tol) << "\n";
  out << "riccati.max_iter " << riccati_max_iter << "\n";
  return out.str();
}

ObjectiveSet ExperimentConfig::build_objectives() const {
  const int n = graph->n();
  if (objective_kind == "logistic")
    return ObjectiveSet::logistic(n, p, logistic_samples, logistic_reg,
                                  objective_seed);
  if (!literal_a.empty() || !literal_b.empty()) {
    std::vector<MatrixXd> a;
    std::vector<VectorXd> b;
    for (int i = 0; i < n; ++i) {
      const auto ai = literal_a.find(i);
      const auto bi = literal_b.find(i);
      if (ai == literal_a.end() || bi == literal_b.end())
        fail(ErrorCode::config, "config key `objective.A`: literal quadratic "
                                "must cover every agent (missing agent " +
                                    std::to_string(i + 1) + ")");
      if (ai->second.rows() != p || bi->second.size() != p)
        fail(ErrorCode::config,
             "config key `objective.A`: entries do not match objective.p");
      a.push_back(ai->second);
      b.push_back(bi->second);
    }
    return ObjectiveSet::quadratic(std::move(a), std::move(b));
  }
  return ObjectiveSet::random_quadratic(n, p, m1, m2, objective_seed);
}

SimSetup ExperimentConfig::build_setup() const {
  SimSetup s{algorithm,
             *graph,
             build_objectives(),
             CostWeights::uniform(graph->n(), p, weight_q, weight_r, weight_h),
             AlgorithmConfig{},
             consensus_mode,
             consensus_rounds,
             InitSpec{},
             seed,
             star_mode,
             record_messages,
             centralized_variant,
             riccati_tol,
             riccati_max_iter};
  s.alg.eta = eta;
  s.alg.eta_auto = eta_auto;
  s.alg.inner_cap = inner_cap;
  s.alg.dgd = dgd;
  s.alg.tol_grad = tol_grad;
  s.alg.tol_edge = tol_edge;
  s.alg.max_iters = max_iters;
  s.alg.require_convergence = require_convergence;
  s.init.mode = init_mode;
  s.init.scale = init_scale;
  if (init_mode == InitSpec::Mode::given) {
    for (int i = 0; i < graph->n(); ++i) {
      const auto it = init_given.find(i);
      if (it == init_given.end())
        fail(ErrorCode::config,
             "config key `init.x`: missing agent " + std::to_string(i + 1));
      s.init.given.push_back(it->second);
    }
  }
  return s;
}

namespace {

// rho((Gamma_P + h*)^{-1} Gamma_P) via the generalized symmetric problem
// Gamma_P v = lambda (Gamma_P + h*) v.
double spectral_rho(const MatrixXd& gamma_p, const MatrixXd& h_star) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(gamma_p,
                                                        gamma_p + h_star);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd average_hessian_at(const ObjectiveSet& obj, const VectorXd& x_star) {
  MatrixXd h = MatrixXd::Zero(obj.dim(), obj.dim());
  for (int i = 0; i < obj.n(); ++i) h += obj.hessian(i, x_star);
  return h / obj.n();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  result.config = cfg;
  SimSetup setup = cfg.build_setup();
  result.trace = run_simulation(setup);

  RateContext ctx;
  const double eta =
      cfg.eta_auto ? 1.0 / setup.objectives.m2() : cfg.eta;
  if (cfg.algorithm == Algorithm::docmc && !cfg.star_mode) {
    const auto ric = solve_riccati(setup.weights, incidence(*cfg.graph),
                                   cfg.riccati_tol, cfg.riccati_max_iter);
    const MatrixXd h_bar =
        average_hessian_at(setup.objectives, result.trace.x_star);
    const MatrixXd h_star =
        block_diag(std::vector<MatrixXd>(cfg.graph->n(), h_bar));
    ctx.rho = spectral_rho(ric.gamma_p, h_star);
  }
  if (cfg.algorithm == Algorithm::doaoc ||
      (cfg.algorithm == Algorithm::centralized &&
       cfg.centralized_variant == CentralizedVariant::eta)) {
    const MatrixXd h_bar =
        average_hessian_at(setup.objectives, result.trace.x_star);
    const MatrixXd dev =
        MatrixXd::Identity(h_bar.rows(), h_bar.cols()) - eta * h_bar;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(dev);
    ctx.c = es.eigenvalues().cwiseAbs().maxCoeff();
  }

  std::vector<double> err, cons;
  for (const auto& row : result.trace.rows) {
    err.push_back(row.err_to_opt);
    cons.push_back(row.consensus_err);
  }
  try {
    result.report = fit_rate(err, cons, ctx);
    result.fit_ok = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::invalid) throw;
    result.report = RateReport{};
    result.report.rho = ctx.rho;
    result.report.c_envelope = ctx.c;
    result.fit_ok = false;
  }

  // Run-property checks.
  const MatrixXd bp = incidence(*cfg.graph).expanded(cfg.p);
  for (const auto& row : result.trace.rows) {
    if (!std::isfinite(row.err_to_opt) || !std::isfinite(row.consensus_err) ||
        !std::isfinite(row.edge_norm) || !std::isfinite(row.f_gap)) {
      result.property_failures.push_back(
          "non-finite trace entry at iteration " + std::to_string(row.k));
      break;
    }
  }
  if (cfg.algorithm != Algorithm::centralized) {
    for (const auto& row : result.trace.rows) {
      const double recomputed = (bp * row.x).norm();
      if (std::abs(recomputed - row.edge_norm) >
          1e-12 * std::max(1.0, recomputed)) {
        result.property_failures.push_back(
            "edge errors drifted from B x at iteration " +
            std::to_string(row.k));
        break;
      }
    }
  }
  if (cfg.record_messages) {
    auto violations = check_topology(result.trace, *cfg.graph);
    result.property_failures.insert(result.property_failures.end(),
                                    violations.begin(), violations.end());
  }
  if (!result.property_failures.empty()) result.status = 4;
  return result;
}

namespace {

constexpr int kReportRatioLines = 64;

void emit_report(std::ostringstream& out, const RateReport& rep, bool fit_ok,
                 const std::string& algorithm, double final_err,
                 long iterations, bool converged) {
  out << "schema_version 1\n";
  out << "kind rate_report\n";
  out << "algorithm " << algorithm << "\n";
  out << "classification " << (fit_ok ? rep.classification : "insufficient")
      << "\n";
  out << "usable " << rep.usable << "\n";
  out << "ratio_count " << rep.ratios.size() << "\n";
  out << "log_ratio_slope " << format_double(rep.log_ratio_slope) << "\n";
  out << "linear_c " << format_double(rep.linear_c) << "\n";
  out << "sigma " << format_double(rep.sigma) << "\n";
  out << "rho " << format_double(rep.rho) << "\n";
  out << "c " << format_double(rep.c_envelope) << "\n";
  out << "r1 " << format_double(rep.r1) << "\n";
  out << "r2 " << format_double(rep.r2) << "\n";
  out << "envelope_rho_consistent "
      << (rep.envelope_rho_consistent ? "on" : "off") << "\n";
  out << "final_err " << format_double(final_err) << "\n";
  out << "iterations " << iterations << "\n";
  out << "converged " << (converged ? "on" : "off") << "\n";
  const std::size_t first =
      rep.ratios.size() > kReportRatioLines
          ? rep.ratios.size() - kReportRatioLines
          : 0;
  for (std::size_t i = first; i < rep.ratios.size(); ++i)
    out << "ratio " << rep.ratio_index[i] << " " << format_double(rep.ratios[i])
        << "\n";
}

}  // namespace

std::string ExperimentResult::report_text() const {
  std::ostringstream out;
  const double final_err =
      trace.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : trace.rows.back().err_to_opt;
  emit_report(out, report, fit_ok, algorithm_name(trace.algorithm), final_err,
              trace.iterations, trace.converged);
  for (const auto& f : property_failures) out << "property_failure " << f
                                               << "\n";
  return out.str();
}

std::string ExperimentResult::meta_text() const {
  std::ostringstream out;
  out << "schema_version 1\n";
  out << "kind trace_meta\n";
  out << "algorithm " << algorithm_name(trace.algorithm) << "\n";
  out << "n " << trace.n << "\n";
  out << "p " << trace.p << "\n";
  out << "seed " << trace.seed << "\n";
  out << "iterations " << trace.iterations << "\n";
  out << "converged " << (trace.converged ? "on" : "off") << "\n";
  out << "riccati_residual " << format_double(trace.riccati_residual) << "\n";
  out << "riccati_iterations " << trace.riccati_iterations << "\n";
  auto emit_matrix = [&](const char* key, const MatrixXd& m) {
    if (m.size() == 0) return;
    out << key << " " << m.rows() << " " << m.cols();
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) out << " " << format_double(m(r, c));
    out << "\n";
  };
  emit_matrix("riccati_p", trace.riccati_p);
  emit_matrix("riccati_gamma", trace.riccati_gamma);
  out << "x_star";
  for (int i = 0; i < trace.x_star.size(); ++i)
    out << " " << format_double(trace.x_star[i]);
  out << "\n";
  out << "config_begin\n" << config.echo() << "config_end\n";
  return out.str();
}

void write_result(const ExperimentResult& result, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory: " + dir);
  auto write = [&](const std::string& file, const std::string& text) {
    std::ofstream out(std::filesystem::path(dir) / file, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + file + " in " + dir);
    out << text;
  };
  write("trace.csv", result.trace.to_csv());
  write("trace.meta", result.meta_text());
  write("report.txt", result.report_text());
}

std::string compare_experiments(const std::vector<ExperimentConfig>& configs,
                                double tol) {
  std::ostringstream out;
  out << "# tolerance " << format_double(tol) << "\n";
  out << "# config algorithm iters_to_tol msgs_to_tol bytes_to_tol "
         "classification c rho final_err\n";
  for (const auto& cfg : configs) {
    const auto result = run_experiment(cfg);
    long iters = -1;
    long msgs = 0, bytes = 0;
    for (const auto& row : result.trace.rows) {
      if (row.err_to_opt <= tol) {
        iters = row.k;
        break;
      }
      msgs += row.msgs;
      bytes += row.bytes;
    }
    if (iters < 0) {
      msgs = -1;
      bytes = -1;
    }
    out << cfg.name << " " << algorithm_name(cfg.algorithm) << " " << iters
        << " " << msgs << " " << bytes << " " << result.classification() << " "
        << format_double(result.report.c_envelope) << " "
        << format_double(result.report.rho) << " "
        << format_double(result.trace.rows.back().err_to_opt) << "\n";
  }
  return out.str();
}

namespace {

struct ParsedTrace {
  std::vector<double> err;
  std::vector<double> consensus;
};

ParsedTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::invalid, "trace csv: empty input");
  std::vector<std::string> cols;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) cols.push_back(cell);
  int err_at = -1, cons_at = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "err_to_opt") err_at = static_cast<int>(i);
    if (cols[i] == "consensus_err") cons_at = static_cast<int>(i);
  }
  if (err_at < 0)
    fail(ErrorCode::invalid, "trace csv: missing err_to_opt column");
  ParsedTrace parsed;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= err_at)
      fail(ErrorCode::invalid, "trace csv: short row");
    parsed.err.push_back(std::stod(cells[err_at]));
    parsed.consensus.push_back(
        cons_at >= 0 && cons_at < static_cast<int>(cells.size())
            ? std::stod(cells[cons_at])
            : std::numeric_limits<double>::quiet_NaN());
  }
  return parsed;
}

}  // namespace

std::string fit_trace_csv_text(const std::string& csv_text) {
  const auto parsed = parse_trace_csv(csv_text);
  std::ostringstream out;
  try {
    const auto rep = fit_rate(parsed.err, parsed.consensus);
    emit_report(out, rep, true, "unknown",
                parsed.err.empty()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : parsed.err.back(),
                static_cast<long>(parsed.err.size()) - 1, false);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::invalid) throw;
    emit_report(out, RateReport{}, false, "unknown",
                parsed.err.empty()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : parsed.err.back(),
                static_cast<long>(parsed.err.size()) - 1, false);
  }
  return out.str();
}

std::string fit_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open trace csv: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fit_trace_csv_text(buf.str());
}

}  // namespace distopt
