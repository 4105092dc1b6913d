// Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
// Exit status is the number of failed criteria. Everything runs at desk
// scale (n <= 8 agents, p <= 4) in well under a minute.

#include "distopt/experiment.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace distopt;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& label,
            const std::string& detail) {
  std::printf("[%2d] %s  %s (%s)\n", criterion, pass ? "PASS" : "FAIL",
              label.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void run_criterion(int criterion, const std::string& label,
                   const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(criterion, pass, label, detail);
  } catch (const std::exception& e) {
    report(criterion, false, label, std::string("exception: ") + e.what());
  }
}

std::string config_path(const std::string& name) {
  return std::string(DISTOPT_CONFIG_DIR) + "/" + name;
}

ExperimentConfig load(const std::string& name) {
  return ExperimentConfig::parse_file(config_path(name));
}

long first_hit(const ConvergenceTrace& trace, double tol) {
  for (const auto& row : trace.rows)
    if (row.err_to_opt <= tol) return row.k;
  return -1;
}

// Average Hessian block at the reference point, expanded to n agent blocks.
MatrixXd stacked_average_hessian(const ObjectiveSet& obj,
                                 const VectorXd& x_star, int n) {
  MatrixXd h = MatrixXd::Zero(obj.dim(), obj.dim());
  for (int i = 0; i < obj.n(); ++i) h += obj.hessian(i, x_star);
  h /= obj.n();
  return block_diag(std::vector<MatrixXd>(n, h));
}

// Criterion 1: the averaging sequence reaches (1/n)11^T and its distance is
// nonincreasing late in the run. Distances saturate at rounding level
// (~1e-13) long before l = 400, so monotonicity is asserted down to a
// measurement floor of 1e-12, four decades below the required 1e-8.
std::pair<bool, std::string> criterion_averaging_limit() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int n = 2 + static_cast<int>(seed % 5);
    const auto g = random_balanced_graph(n, 2, 1000 + seed);
    const auto weights = CostWeights::uniform(n, 1, 1.0, 1.0, 1.0);
    const auto ric = solve_riccati(weights, incidence(g));
    const auto dist = averaging_distances(weights, ric, 500);
    worst = std::max(worst, dist[499]);
    if (dist[499] > 1e-8)
      return {false, "distance " + format_double(dist[499]) + " at seed " +
                         std::to_string(seed)};
    for (int l = 400; l < 500; ++l)
      if (dist[l] > std::max(dist[l - 1], 1e-12))
        return {false, "distance increased at l=" + std::to_string(l + 1) +
                           " on seed " + std::to_string(seed)};
  }
  return {true, "20 graphs, worst distance " + format_double(worst)};
}

// Criterion 2: stable solutions on all bundled instances.
std::pair<bool, std::string> criterion_riccati_residual() {
  const std::vector<std::string> bundled = {
      "threecycle_docmc.cfg",    "threecycle_doaoc.cfg",
      "ring6_docmc.cfg",         "twonode_consensus_only.cfg",
      "ring4_doaoc_linear.cfg",  "logistic_doaoc.cfg"};
  double worst_residual = 0.0, worst_sym = 0.0;
  for (const auto& name : bundled) {
    const auto cfg = load(name);
    const auto weights = CostWeights::uniform(
        cfg.graph->n(), cfg.p, cfg.weight_q, cfg.weight_r, cfg.weight_h);
    const auto ric = solve_riccati(weights, incidence(*cfg.graph),
                                   cfg.riccati_tol, cfg.riccati_max_iter);
    worst_residual = std::max(worst_residual, ric.residual);
    worst_sym = std::max(worst_sym, max_abs(ric.p - ric.p.transpose()));
    if (ric.residual > 1e-10 || max_abs(ric.p - ric.p.transpose()) > 1e-12)
      return {false, name + ": residual " + format_double(ric.residual)};
  }
  return {true, "residual <= " + format_double(worst_residual) +
                    ", asymmetry <= " + format_double(worst_sym)};
}

// Criterion 3: equilibrium/costate residuals of the finite-horizon system.
std::pair<bool, std::string> criterion_fbde() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const int n = 2 + static_cast<int>(seed % 4);
    const int p = 1 + static_cast<int>(seed % 2);
    const int horizon = 1 + static_cast<int>((3 * seed) % 10);
    const auto g = random_balanced_graph(n, 2, 2000 + seed);
    const auto inc = incidence(g);
    const auto weights =
        seed % 2 ? CostWeights::uniform(n, p, 1.0, 1.0, 1.0)
                 : CostWeights::uniform(n, p, 2.0, 0.5, 1.5);
    Rng rng(3000 + seed);
    std::vector<VectorXd> grads;
    for (int k = 0; k <= horizon + 1; ++k)
      grads.push_back(rng.normal_vector(n * p));
    const auto traj =
        build_fbde_trajectory(weights, inc, rng.normal_vector(n * p), grads);
    const auto rep = fbde_check(weights, inc, traj);
    worst = std::max(worst, rep.max_residual);
    if (!rep.within(1e-9))
      return {false, "residual " + format_double(rep.max_residual) +
                         " at seed " + std::to_string(seed)};
  }
  return {true, "8 instances, worst residual " + format_double(worst)};
}

// Criterion 4: inner-loop and closed-form directions agree.
std::pair<bool, std::string> criterion_closed_form() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(4000 + seed);
    const int n = 2 + static_cast<int>(seed % 5);
    const int p = 1 + static_cast<int>(seed % 3);
    const auto g = random_balanced_graph(n, 2, 4100 + seed);
    const auto inc = incidence(g);
    const auto weights = CostWeights::uniform(n, p, 1.0, 1.0, 1.0);
    const auto ric = solve_riccati(weights, inc);
    IterationState st;
    st.k = static_cast<int>((7 * seed) % 31);
    st.x = rng.normal_vector(n * p);
    st.e = inc.expanded(p) * st.x;
    st.g = rng.normal_vector(n * p);
    std::vector<MatrixXd> blocks;
    for (int i = 0; i < n; ++i) blocks.push_back(random_spd(p, 0.3, 5.0, rng));
    st.h = block_diag(blocks);
    const double dev =
        max_abs(docmc_direction(st, ric, -1) - docmc_direction_closed(st, ric));
    worst = std::max(worst, dev);
    if (dev > 1e-10)
      return {false, "deviation " + format_double(dev) + " at seed " +
                         std::to_string(seed)};
  }
  return {true, "50 instances, worst deviation " + format_double(worst)};
}

// Criterion 5: spectrum of (Gamma_P + h)^{-1} Gamma_P inside (0, 1).
std::pair<bool, std::string> criterion_spectrum() {
  double lo = 1.0, hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(5000 + seed);
    const int n = 2 + static_cast<int>(seed % 6);
    const auto g = random_balanced_graph(n, 2, 5100 + seed);
    const auto ric =
        solve_riccati(CostWeights::uniform(n, 1, 1.0, 1.0, 1.0), incidence(g));
    const double m1 = rng.uniform(0.02, 1.0);
    const double m2 = m1 + rng.uniform(0.1, 5.0);
    const MatrixXd h = random_spd(n, m1, m2, rng);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(ric.gamma_p,
                                                          ric.gamma_p + h);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
    if (!(es.eigenvalues().minCoeff() > 0.0 &&
          es.eigenvalues().maxCoeff() < 1.0))
      return {false, "spectrum left (0,1) at seed " + std::to_string(seed)};
  }
  return {true, "50 draws, spectrum within [" + format_double(lo) + ", " +
                    format_double(hi) + "]"};
}

// Criterion 6: per-iteration consensus contraction below one.
std::pair<bool, std::string> criterion_contraction() {
  const auto result = run_experiment(load("ring6_docmc.cfg"));
  double sigma = 0.0;
  int usable = 0;
  for (std::size_t k = 0; k + 1 < result.trace.rows.size(); ++k) {
    const double a = result.trace.rows[k].consensus_err;
    const double b = result.trace.rows[k + 1].consensus_err;
    if (a <= kErrorFloor || b <= kErrorFloor) continue;
    ++usable;
    sigma = std::max(sigma, b / a);
  }
  const bool pass = usable >= 10 && sigma < 1.0;
  return {pass, "sigma = " + format_double(sigma) + " over " +
                    std::to_string(usable) + " iterations"};
}

// Criterion 7: superlinear envelope of the central-node method.
std::pair<bool, std::string> criterion_docmc_rate() {
  const auto cfg = load("threecycle_docmc.cfg");
  const auto result = run_experiment(cfg);
  if (result.classification() != "superlinear")
    return {false, "classification " + result.classification()};

  // Independent route to rho: generalized spectrum from the objective set's
  // Hessians at the closed-form optimum.
  const auto obj = cfg.build_objectives();
  const auto ric = solve_riccati(
      CostWeights::uniform(cfg.graph->n(), cfg.p, cfg.weight_q, cfg.weight_r,
                           cfg.weight_h),
      incidence(*cfg.graph));
  const VectorXd x_star = obj.reference_minimizer(1e-12);
  const MatrixXd h_star =
      stacked_average_hessian(obj, x_star, cfg.graph->n());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(ric.gamma_p,
                                                        ric.gamma_p + h_star);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho > 0.0 && rho < 1.0))
    return {false, "rho = " + format_double(rho) + " outside (0,1)"};
  if (std::abs(rho - result.report.rho) > 1e-9)
    return {false, "report rho " + format_double(result.report.rho) +
                       " != recomputed " + format_double(rho)};

  double r1 = 0.0;
  for (std::size_t i = 0; i < result.report.ratios.size(); ++i)
    r1 = std::max(r1, result.report.ratios[i] /
                          std::pow(rho, result.report.ratio_index[i] + 1.0));
  const bool envelope = std::isfinite(r1) && r1 > 0.0 && r1 < 1e6;
  for (std::size_t i = 0; i < result.report.ratios.size(); ++i)
    if (result.report.ratios[i] >
        r1 * std::pow(rho, result.report.ratio_index[i] + 1.0) + 1e-15)
      return {false, "envelope violated"};
  return {envelope, "superlinear, rho = " + format_double(rho) +
                        ", measured r1 = " + format_double(r1)};
}

// Criterion 8: superlinear envelope of the peer-to-peer method at eta = 1/m2.
std::pair<bool, std::string> criterion_doaoc_rate() {
  const auto cfg = load("threecycle_doaoc.cfg");
  const auto result = run_experiment(cfg);
  if (result.classification() != "superlinear")
    return {false, "classification " + result.classification()};

  // Independent route to c = ||I - eta h*||: closed-form quadratic optimum.
  const auto obj = cfg.build_objectives();
  MatrixXd asum = MatrixXd::Zero(cfg.p, cfg.p);
  VectorXd rhs = VectorXd::Zero(cfg.p);
  for (int i = 0; i < obj.n(); ++i) {
    asum += obj.hessian(i, VectorXd::Zero(cfg.p));
    rhs += -obj.gradient(i, VectorXd::Zero(cfg.p));
  }
  const VectorXd x_star = asum.llt().solve(rhs);
  const double eta = 1.0 / obj.m2();
  MatrixXd h_bar = MatrixXd::Zero(cfg.p, cfg.p);
  for (int i = 0; i < obj.n(); ++i) h_bar += obj.hessian(i, x_star);
  h_bar /= obj.n();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      MatrixXd::Identity(cfg.p, cfg.p) - eta * h_bar);
  const double c = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(c < 1.0)) return {false, "c = " + format_double(c) + " not below 1"};
  if (std::abs(c - result.report.c_envelope) > 1e-6)
    return {false, "report c " + format_double(result.report.c_envelope) +
                       " != recomputed " + format_double(c)};

  double r2 = 0.0;
  for (std::size_t i = 0; i < result.report.ratios.size(); ++i)
    r2 = std::max(r2, result.report.ratios[i] /
                          std::pow(c, static_cast<double>(
                                          result.report.ratio_index[i])));
  const bool envelope = std::isfinite(r2) && r2 > 0.0 && r2 < 1e6;
  return {envelope, "superlinear, c = " + format_double(c) +
                        ", measured r2 = " + format_double(r2)};
}

// Criterion 9: the first-order baseline needs at least five times the outer
// iterations of either optimal-control method at tolerance 1e-8. The
// baseline's bias decays like the step c/(k+1), so it cannot reach 1e-8
// within the bundled budget; exhausting the budget certifies the bound.
std::pair<bool, std::string> criterion_baseline_contrast() {
  const double tol = 1e-8;
  const auto docmc = run_experiment(load("threecycle_docmc.cfg"));
  const auto doaoc = run_experiment(load("threecycle_doaoc.cfg"));
  const auto dgd = run_experiment(load("threecycle_dgd.cfg"));
  const long k1 = first_hit(docmc.trace, tol);
  const long k2 = first_hit(doaoc.trace, tol);
  const long k3 = first_hit(dgd.trace, tol);
  if (k1 < 0 || k2 < 0) return {false, "an optimal-control run missed 1e-8"};
  const long budget = dgd.config.max_iters;
  const long dgd_needed = k3 < 0 ? budget + 1 : k3;
  const bool pass = dgd_needed >= 5 * std::max(k1, k2);
  std::string detail = "docmc " + std::to_string(k1) + ", doaoc " +
                       std::to_string(k2) + ", dgd " +
                       (k3 < 0 ? "> " + std::to_string(budget)
                               : std::to_string(k3)) +
                       " iterations";
  return {pass, detail};
}

// Criterion 10: analytic derivatives against finite differences on the
// bundled objective families.
std::pair<bool, std::string> criterion_derivatives() {
  const auto quad = load("threecycle_docmc.cfg").build_objectives();
  const auto logi = load("logistic_doaoc.cfg").build_objectives();
  double worst_g = 0.0, worst_h = 0.0;
  for (const ObjectiveSet* set : {&quad, &logi}) {
    Rng rng(1234);
    for (int i = 0; i < set->n(); ++i)
      for (int t = 0; t < 10; ++t) {
        const VectorXd x = rng.normal_vector(set->dim());
        const double gstep = 1e-6 * (1.0 + x.norm());
        VectorXd fd(set->dim());
        for (int j = 0; j < set->dim(); ++j) {
          VectorXd hi = x, lo = x;
          hi[j] += gstep;
          lo[j] -= gstep;
          fd[j] = (set->value(i, hi) - set->value(i, lo)) / (2 * gstep);
        }
        const VectorXd g = set->gradient(i, x);
        const double gerr = (g - fd).norm() / std::max(1.0, g.norm());
        worst_g = std::max(worst_g, gerr);
        if (gerr > 1e-5)
          return {false, "gradient error " + format_double(gerr)};
        const MatrixXd h = set->hessian(i, x);
        const MatrixXd hfd = set->fd_hessian(i, x, 1e-5 * (1.0 + x.norm()));
        const double herr = max_abs(h - hfd) / std::max(1.0, max_abs(h));
        worst_h = std::max(worst_h, herr);
        if (herr > 1e-3)
          return {false, "hessian error " + format_double(herr)};
      }
  }
  return {true, "worst gradient " + format_double(worst_g) +
                    ", worst hessian " + format_double(worst_h)};
}

// Criterion 11: byte-identical trace files for identical (config, seed).
std::pair<bool, std::string> criterion_determinism() {
  namespace fs = std::filesystem;
  for (const char* name : {"threecycle_docmc.cfg", "ring6_docmc.cfg",
                           "ring4_doaoc_linear.cfg"}) {
    const auto base = fs::temp_directory_path() / "distopt_acceptance_det";
    fs::remove_all(base);
    const auto cfg = load(name);
    write_result(run_experiment(cfg), (base / "a").string());
    write_result(run_experiment(cfg), (base / "b").string());
    for (const char* file : {"trace.csv", "trace.meta"}) {
      std::ifstream fa(base / "a" / file, std::ios::binary);
      std::ifstream fb(base / "b" / file, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str() != sb.str() || sa.str().empty())
        return {false, std::string(name) + ": " + file + " differs"};
    }
    fs::remove_all(base);
  }
  return {true, "3 configs, trace files identical across reruns"};
}

// Criterion 12: message endpoints respect the topology.
std::pair<bool, std::string> criterion_topology() {
  const auto central = run_experiment(load("threecycle_docmc.cfg"));
  if (central.trace.messages.empty())
    return {false, "central run recorded no messages"};
  for (const auto& m : central.trace.messages)
    if (m.from != kServerId && m.to != kServerId)
      return {false, "agent-to-agent message in the central run"};

  const auto peer = run_experiment(load("ring4_doaoc_linear.cfg"));
  if (peer.trace.messages.empty())
    return {false, "peer run recorded no messages"};
  const auto cfg = load("ring4_doaoc_linear.cfg");
  for (const auto& m : peer.trace.messages) {
    if (m.from == kServerId || m.to == kServerId)
      return {false, "server message in the peer run"};
    if (!cfg.graph->adjacent(m.from, m.to))
      return {false, "message between non-adjacent agents"};
  }
  return {true, std::to_string(central.trace.messages.size()) + " central + " +
                    std::to_string(peer.trace.messages.size()) +
                    " peer messages, all endpoints legal"};
}

}  // namespace

int main() {
  run_criterion(1, "averaging sequence reaches (1/n)11^T",
                criterion_averaging_limit);
  run_criterion(2, "stable solution residual and symmetry",
                criterion_riccati_residual);
  run_criterion(3, "finite-horizon equilibrium/costate consistency",
                criterion_fbde);
  run_criterion(4, "inner loop matches the closed form", criterion_closed_form);
  run_criterion(5, "contraction spectrum inside (0,1)", criterion_spectrum);
  run_criterion(6, "consensus contraction below one", criterion_contraction);
  run_criterion(7, "central-node method superlinear envelope",
                criterion_docmc_rate);
  run_criterion(8, "peer-to-peer method superlinear envelope",
                criterion_doaoc_rate);
  run_criterion(9, "baseline needs at least 5x the iterations",
                criterion_baseline_contrast);
  run_criterion(10, "derivatives match finite differences",
                criterion_derivatives);
  run_criterion(11, "identical seeds give byte-identical trace files",
                criterion_determinism);
  run_criterion(12, "messages respect the topology", criterion_topology);

  if (g_failures == 0) {
    std::puts("acceptance: all 12 criteria passed");
  } else {
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  }
  return g_failures;
}
