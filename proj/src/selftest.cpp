#include "distopt/experiment.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace distopt {

namespace {

const char* kThreeCycleDocmc = R"(schema_version 1
algorithm docmc
seed 42
max_iters 30
tol.grad 0
tol.edge 0
graph.n 3
graph.edge 1 2 1
graph.edge 2 3 1
graph.edge 3 1 1
objective.kind quadratic
objective.p 2
objective.seed 7
objective.m1 1
objective.m2 2
init.mode consensus
)";

const char* kThreeCycleDoaoc = R"(schema_version 1
algorithm doaoc
seed 42
max_iters 40
eta auto
tol.grad 0
tol.edge 0
graph.n 3
graph.edge 1 2 1
graph.edge 2 3 1
graph.edge 3 1 1
objective.kind quadratic
objective.p 2
objective.seed 7
objective.m1 1
objective.m2 2
init.mode consensus
)";

class Checker {
 public:
  explicit Checker(std::string& out) : out_(out) {}

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    if (ok) {
      out_ += "ok " + name + "\n";
    } else {
      ++failures_;
      out_ += "FAIL " + name + (detail.empty() ? "" : ": " + detail) + "\n";
    }
  }

  template <typename Fn>
  void run(const std::string& name, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      check(name, false, e.what());
    }
  }

  int failures() const { return failures_; }

 private:
  std::string& out_;
  int failures_ = 0;
};

}  // namespace

int selftest(std::string& out) {
  Checker c(out);

  c.run("graph invariants", [&] {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto g = random_balanced_graph(2 + static_cast<int>(seed), 2, seed);
      const auto diag = g.validate();
      c.check("graph " + std::to_string(seed) + " satisfies the assumptions",
              diag.ok(), diag.witness);
      const MatrixXd l = laplacian(g);
      c.check("laplacian " + std::to_string(seed) + " symmetric zero-row-sum",
              is_symmetric(l, 1e-12) && max_abs(l.rowwise().sum()) <= 1e-12);
      const MatrixXd bt_b = incidence(g).matrix().transpose() *
                            incidence(g).matrix();
      c.check("incidence " + std::to_string(seed) + " reproduces laplacian",
              max_abs(bt_b - l) == 0.0);
      const MatrixXd w = mixing_matrix(g);
      c.check("mixing " + std::to_string(seed) + " doubly stochastic",
              max_abs(w.rowwise().sum() -
                      VectorXd::Ones(g.n())) <= 1e-12 &&
                  max_abs(w.colwise().sum().transpose() -
                          VectorXd::Ones(g.n())) <= 1e-12 &&
                  w.minCoeff() >= 0.0);
      c.check("mixing " + std::to_string(seed) + " contracts",
              mixing_contraction(w) < 1.0);
    }
  });

  c.run("riccati and averaging", [&] {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto g = random_balanced_graph(3 + static_cast<int>(seed), 1, seed);
      const auto inc = incidence(g);
      const auto weights = CostWeights::uniform(g.n(), 1, 1.0, 1.0, 1.0);
      const auto ric = solve_riccati(weights, inc);
      c.check("riccati residual " + std::to_string(seed),
              ric.residual <= 1e-10 && is_symmetric(ric.p, 1e-12));
      const double dist = averaging_distance(weights, ric, 300);
      c.check("averaging limit " + std::to_string(seed), dist <= 1e-8,
              "distance " + format_double(dist));
    }
  });

  c.run("derivative checks", [&] {
    const auto quad = ObjectiveSet::random_quadratic(3, 2, 1.0, 2.0, 7);
    const auto logi = ObjectiveSet::logistic(3, 2, 16, 0.1, 5);
    for (const ObjectiveSet* set : {&quad, &logi}) {
      Rng rng(33);
      for (int i = 0; i < set->n(); ++i)
        for (int t = 0; t < 3; ++t) {
          const VectorXd x = rng.normal_vector(set->dim());
          const double step = 1e-6 * (1.0 + x.norm());
          VectorXd fd(set->dim());
          for (int j = 0; j < set->dim(); ++j) {
            VectorXd hi = x, lo = x;
            hi[j] += step;
            lo[j] -= step;
            fd[j] = (set->value(i, hi) - set->value(i, lo)) / (2 * step);
          }
          const VectorXd g = set->gradient(i, x);
          c.check("gradient vs fd (" + set->kind(i) + ")",
                  (g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
          const MatrixXd h = set->hessian(i, x);
          const MatrixXd hfd = set->fd_hessian(i, x, 1e-5 * (1.0 + x.norm()));
          c.check("hessian vs fd (" + set->kind(i) + ")",
                  max_abs(h - hfd) <= 1e-3 * std::max(1.0, max_abs(h)));
        }
    }
  });

  c.run("direction forms agree", [&] {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed * 97);
      const auto g = random_balanced_graph(2 + seed % 4, 1, seed);
      const int p = 1 + static_cast<int>(seed % 2);
      const auto inc = incidence(g);
      const auto weights = CostWeights::uniform(g.n(), p, 1.0, 1.0, 1.0);
      const auto ric = solve_riccati(weights, inc);
      IterationState st;
      st.k = static_cast<int>(seed % 28);
      st.x = rng.normal_vector(g.n() * p);
      st.e = inc.expanded(p) * st.x;
      st.g = rng.normal_vector(g.n() * p);
      std::vector<MatrixXd> hb;
      for (int i = 0; i < g.n(); ++i)
        hb.push_back(random_spd(p, 0.5, 3.0, rng));
      st.h = block_diag(hb);
      const VectorXd loop = docmc_direction(st, ric, -1);
      const VectorXd closed = docmc_direction_closed(st, ric);
      c.check("closed-form direction seed " + std::to_string(seed),
              max_abs(loop - closed) <= 1e-10,
              format_double(max_abs(loop - closed)));
    }
  });

  c.run("spectral condition", [&] {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed * 131);
      const auto g = random_balanced_graph(2 + seed % 5, 1, seed + 7);
      const auto weights = CostWeights::uniform(g.n(), 1, 1.0, 1.0, 1.0);
      const auto ric = solve_riccati(weights, incidence(g));
      const MatrixXd h = random_spd(g.n(), 0.2, 4.0, rng);
      Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(ric.gamma_p,
                                                            ric.gamma_p + h);
      c.check("spectrum in (0,1) seed " + std::to_string(seed),
              es.eigenvalues().minCoeff() > 0.0 &&
                  es.eigenvalues().maxCoeff() < 1.0);
    }
  });

  c.run("costate consistency", [&] {
    const DirectedGraph g(3, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
    const auto inc = incidence(g);
    const auto weights = CostWeights::uniform(3, 2, 1.0, 1.0, 1.0);
    Rng rng(11);
    std::vector<VectorXd> grads;
    for (int k = 0; k <= 6; ++k) grads.push_back(rng.normal_vector(6));
    const auto traj =
        build_fbde_trajectory(weights, inc, rng.normal_vector(6), grads);
    const auto report = fbde_check(weights, inc, traj);
    c.check("costate residuals", report.within(1e-9),
            format_double(report.max_residual));
  });

  c.run("central-node run", [&] {
    const auto cfg = ExperimentConfig::parse_string(kThreeCycleDocmc);
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    c.check("converges to the optimum",
            a.trace.rows.back().err_to_opt <= 1e-8);
    c.check("superlinear classification", a.classification() == "superlinear");
    c.check("deterministic traces", a.trace.to_csv() == b.trace.to_csv());
    c.check("no agent-to-agent messages",
            check_topology(a.trace, *cfg.graph).empty());
    c.check("run properties hold", a.status == 0);
  });

  c.run("peer run", [&] {
    const auto cfg = ExperimentConfig::parse_string(kThreeCycleDoaoc);
    const auto a = run_experiment(cfg);
    c.check("peer run converges", a.trace.rows.back().err_to_opt <= 1e-8);
    c.check("peer run topology", check_topology(a.trace, *cfg.graph).empty());
  });

  c.run("consensus ops", [&] {
    ConsensusConfig exact;
    std::vector<VectorXd> vals = {VectorXd::Constant(1, 0.0),
                                  VectorXd::Constant(1, 2.0)};
    const auto mean = average_vectors(vals, exact);
    c.check("exact mean", mean[0][0] == 1.0 && mean[1][0] == 1.0);
    ConsensusConfig linear;
    linear.mode = ConsensusConfig::Mode::linear;
    linear.rounds = 3;
    linear.mixing = mixing_matrix(DirectedGraph(2, {{0, 1, 1}, {1, 0, 1}}));
    const auto mixed = average_vectors(vals, linear);
    c.check("linear mode preserves the sum",
            std::abs(mixed[0][0] + mixed[1][0] - 2.0) <= 1e-12);
  });

  return c.failures();
}

}  // namespace distopt
