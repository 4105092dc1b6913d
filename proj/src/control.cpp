#include "distopt/control.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace distopt {

CostWeights::CostWeights(std::vector<MatrixXd> q, std::vector<MatrixXd> r,
                         std::vector<MatrixXd> h)
    : q_(std::move(q)), r_(std::move(r)), h_(std::move(h)) {
  if (q_.empty() || q_.size() != r_.size() || q_.size() != h_.size())
    fail(ErrorCode::invalid, "cost weights: need Q_i, R_i, H_i per agent");
  const int p = static_cast<int>(q_[0].rows());
  auto check_sym_psd = [&](const MatrixXd& m, const char* name) {
    if (m.rows() != p || m.cols() != p)
      fail(ErrorCode::invalid,
           std::string("cost weights: inconsistent block size in ") + name);
    if (!is_symmetric(m, 1e-12))
      fail(ErrorCode::invalid,
           std::string("cost weights: ") + name + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.eigenvalues().minCoeff() < -1e-10)
      fail(ErrorCode::invalid,
           std::string("cost weights: ") + name + " must be positive semidefinite");
  };
  for (std::size_t i = 0; i < q_.size(); ++i) {
    check_sym_psd(q_[i], "Q");
    check_sym_psd(h_[i], "H");
    if (r_[i].rows() != p || r_[i].cols() != p ||
        !is_symmetric(r_[i], 1e-12))
      fail(ErrorCode::invalid, "cost weights: R must be symmetric");
    Eigen::LLT<MatrixXd> llt(r_[i]);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::invalid, "cost weights: R must be positive definite");
  }
}

CostWeights CostWeights::uniform(int n, int p, double q, double r, double h) {
  std::vector<MatrixXd> qs(n, q * MatrixXd::Identity(p, p));
  std::vector<MatrixXd> rs(n, r * MatrixXd::Identity(p, p));
  std::vector<MatrixXd> hs(n, h * MatrixXd::Identity(p, p));
  return CostWeights(std::move(qs), std::move(rs), std::move(hs));
}

CostWeights CostWeights::blocks(std::vector<MatrixXd> q,
                                std::vector<MatrixXd> r,
                                std::vector<MatrixXd> h) {
  return CostWeights(std::move(q), std::move(r), std::move(h));
}

MatrixXd CostWeights::edge_q(const IncidenceMap& inc) const {
  std::vector<MatrixXd> blocks;
  for (const auto& [from, to] : inc.edge_order()) blocks.push_back(q_[from]);
  return block_diag(blocks);
}

MatrixXd CostWeights::edge_h(const IncidenceMap& inc) const {
  std::vector<MatrixXd> blocks;
  for (const auto& [from, to] : inc.edge_order()) blocks.push_back(h_[from]);
  return block_diag(blocks);
}

MatrixXd CostWeights::agent_r() const { return block_diag(r_); }

bool CostWeights::r_is_scaled_identity(double* scale) const {
  const double r0 = r_[0](0, 0);
  for (const auto& r : r_)
    if (max_abs(r - r0 * MatrixXd::Identity(p(), p())) > 1e-14 * std::abs(r0))
      return false;
  if (scale) *scale = r0;
  return true;
}

namespace {

// Orthogonal projector onto range(B ⊗ I_p).
MatrixXd range_projector(const MatrixXd& bp) {
  const MatrixXd gram = bp * bp.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  const double cut = 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
  MatrixXd proj = MatrixXd::Zero(gram.rows(), gram.cols());
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > cut)
      proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  return proj;
}

MatrixXd riccati_step(const MatrixXd& p, const MatrixXd& q, const MatrixXd& r,
                      const MatrixXd& bp, const MatrixXd& proj) {
  const MatrixXd gamma = r + bp.transpose() * p * bp;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gamma);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    fail(ErrorCode::numeric, "Riccati iteration: Gamma is numerically singular");
  const MatrixXd pb = p * bp;
  MatrixXd next =
      q + p - pb * gamma.llt().solve(pb.transpose());
  next = 0.5 * (next + next.transpose());
  return proj * next * proj;
}

}  // namespace

RiccatiSolution solve_riccati(const CostWeights& weights,
                              const IncidenceMap& inc, double tol,
                              int max_iter) {
  if (weights.n() != inc.n())
    fail(ErrorCode::invalid, "cost weights and incidence map disagree on n");
  const int p = weights.p();
  const MatrixXd bp = inc.expanded(p);
  const MatrixXd q = weights.edge_q(inc);
  const MatrixXd h = weights.edge_h(inc);
  const MatrixXd r = weights.agent_r();
  const MatrixXd proj = range_projector(bp);

  MatrixXd cur = proj * h * proj;
  cur = 0.5 * (cur + cur.transpose());
  int it = 0;
  double diff = std::numeric_limits<double>::infinity();
  while (it < max_iter) {
    const MatrixXd next = riccati_step(cur, q, r, bp, proj);
    diff = max_abs(next - cur);
    cur = next;
    ++it;
    if (diff <= tol) break;
  }
  if (diff > tol)
    fail(ErrorCode::numeric,
         "Riccati iteration did not converge within " +
             std::to_string(max_iter) + " iterations (last step " +
             format_double(diff) + ")");

  RiccatiSolution sol;
  sol.p = cur;
  sol.btp = bp.transpose() * cur;
  sol.gamma_p = r + sol.btp * bp;
  sol.gamma_p = 0.5 * (sol.gamma_p + sol.gamma_p.transpose());
  sol.lbar = (sol.btp * bp) * r.inverse();
  sol.residual = max_abs(cur - riccati_step(cur, q, r, bp, proj));
  sol.iterations = it;
  sol.n = inc.n();
  sol.state_dim = p;
  sol.edge_count = inc.edge_count();
  return sol;
}

std::vector<MatrixXd> averaging_sequence(const CostWeights& weights,
                                         const RiccatiSolution& ric,
                                         int count) {
  if (count < 1)
    fail(ErrorCode::invalid, "averaging sequence needs count >= 1");
  const MatrixXd r = weights.agent_r();
  const MatrixXd step =
      (ric.gamma_p.llt().solve(r.transpose())).transpose();  // R Gamma_P^{-1}
  std::vector<MatrixXd> out;
  out.reserve(count);
  out.push_back(MatrixXd::Identity(r.rows(), r.cols()));
  for (int l = 1; l < count; ++l) out.push_back(out.back() * step);
  return out;
}

std::vector<double> averaging_distances(const CostWeights& weights,
                                        const RiccatiSolution& ric,
                                        int count) {
  if (count < 1)
    fail(ErrorCode::invalid, "averaging distances need count >= 1");
  const MatrixXd r = weights.agent_r();
  const MatrixXd step =
      (ric.gamma_p.llt().solve(r.transpose())).transpose();
  const MatrixXd target = averaging_operator(ric.n, ric.state_dim);
  MatrixXd m = MatrixXd::Identity(r.rows(), r.cols());
  std::vector<double> out;
  out.reserve(count);
  out.push_back(max_abs(m - target));
  for (int l = 1; l < count; ++l) {
    m = m * step;
    out.push_back(max_abs(m - target));
  }
  return out;
}

double averaging_distance(const CostWeights& weights,
                          const RiccatiSolution& ric, int l) {
  return averaging_distances(weights, ric, l).back();
}

int lbar_rank(const RiccatiSolution& ric, double tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      0.5 * (ric.lbar + ric.lbar.transpose()));
  const double cut = tol * std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
  int rank = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i]) > cut) ++rank;
  return rank;
}

namespace {

// Backward P(k) and Gamma(k) for the exact finite horizon (no projection,
// no convergence needed).
struct BackwardPass {
  std::vector<MatrixXd> p;      // 0..N+1
  std::vector<MatrixXd> gamma;  // 0..N, Gamma(k) = R + B^T P(k+1) B
};

BackwardPass backward_riccati(const CostWeights& weights,
                              const IncidenceMap& inc, int horizon) {
  const int p_dim = weights.p();
  const MatrixXd bp = inc.expanded(p_dim);
  const MatrixXd q = weights.edge_q(inc);
  const MatrixXd r = weights.agent_r();
  BackwardPass bw;
  bw.p.assign(horizon + 2, MatrixXd());
  bw.gamma.assign(horizon + 1, MatrixXd());
  bw.p[horizon + 1] = weights.edge_h(inc);
  for (int k = horizon; k >= 0; --k) {
    const MatrixXd& pn = bw.p[k + 1];
    bw.gamma[k] = r + bp.transpose() * pn * bp;
    const MatrixXd pb = pn * bp;
    MatrixXd pk = q + pn - pb * bw.gamma[k].llt().solve(pb.transpose());
    bw.p[k] = 0.5 * (pk + pk.transpose());
  }
  return bw;
}

// sum_{l=k+1}^{N+1} M(l) grad(l) with M anchored at k+1:
// M(k+1) = I, M(l) = M(l-1) R Gamma(l-1)^{-1}.
VectorXd averaged_future_gradient(const BackwardPass& bw, const MatrixXd& r,
                                  const std::vector<VectorXd>& grads, int k,
                                  int horizon) {
  VectorXd sum = grads[k + 1];
  MatrixXd m = MatrixXd::Identity(r.rows(), r.cols());
  for (int l = k + 2; l <= horizon + 1; ++l) {
    m = m * (bw.gamma[l - 1].llt().solve(r.transpose())).transpose();
    sum += m * grads[l];
  }
  return sum;
}

}  // namespace

FbdeTrajectory build_fbde_trajectory(const CostWeights& weights,
                                     const IncidenceMap& inc,
                                     const VectorXd& x0,
                                     const std::vector<VectorXd>& grads) {
  const int p_dim = weights.p();
  const int n = inc.n();
  if (x0.size() != static_cast<Eigen::Index>(n) * p_dim)
    fail(ErrorCode::invalid, "fbde: x0 has wrong dimension");
  if (grads.size() < 2)
    fail(ErrorCode::invalid, "fbde: gradient schedule needs at least 2 entries");
  const int horizon = static_cast<int>(grads.size()) - 2;
  for (const auto& g : grads)
    if (g.size() != x0.size())
      fail(ErrorCode::invalid, "fbde: gradient schedule has wrong dimension");

  const MatrixXd bp = inc.expanded(p_dim);
  const MatrixXd r = weights.agent_r();
  const BackwardPass bw = backward_riccati(weights, inc, horizon);

  FbdeTrajectory traj;
  traj.horizon = horizon;
  traj.grad = grads;
  traj.x.resize(horizon + 2);
  traj.e.resize(horizon + 2);
  traj.u.resize(horizon + 1);
  traj.costate.resize(horizon + 1);
  traj.x[0] = x0;
  traj.e[0] = bp * x0;
  for (int k = 0; k <= horizon; ++k) {
    const VectorXd future = averaged_future_gradient(bw, r, grads, k, horizon);
    const VectorXd v =
        bp.transpose() * (bw.p[k + 1] * traj.e[k]) + future;
    traj.u[k] = -bw.gamma[k].llt().solve(v);
    traj.x[k + 1] = traj.x[k] + traj.u[k];
    traj.e[k + 1] = bp * traj.x[k + 1];
    traj.costate[k] =
        bp.transpose() * (bw.p[k + 1] * traj.e[k + 1]) + future;
  }
  return traj;
}

FbdeReport fbde_check(const CostWeights& weights, const IncidenceMap& inc,
                      const FbdeTrajectory& traj) {
  const int horizon = traj.horizon;
  const int p_dim = weights.p();
  const MatrixXd bp = inc.expanded(p_dim);
  const MatrixXd q_edge = weights.edge_q(inc);
  const MatrixXd h_edge = weights.edge_h(inc);
  const MatrixXd r = weights.agent_r();
  const BackwardPass bw = backward_riccati(weights, inc, horizon);

  // Oracle: plain backward substitution of the costate recursion.
  std::vector<VectorXd> oracle(horizon + 1);
  oracle[horizon] =
      bp.transpose() * (h_edge * traj.e[horizon + 1]) + traj.grad[horizon + 1];
  for (int k = horizon; k >= 1; --k)
    oracle[k - 1] =
        bp.transpose() * (q_edge * traj.e[k]) + traj.grad[k] + oracle[k];

  FbdeReport report;
  report.steps.resize(horizon + 1);
  double worst = 0.0;
  for (int k = 0; k <= horizon; ++k) {
    auto& s = report.steps[k];
    s.equilibrium = max_abs(r * traj.u[k] + oracle[k]);
    s.costate = max_abs(traj.costate[k] - oracle[k]);
    const VectorXd future =
        averaged_future_gradient(bw, r, traj.grad, k, horizon);
    s.controller = max_abs(bw.gamma[k] * traj.u[k] +
                           bp.transpose() * (bw.p[k + 1] * traj.e[k]) +
                           future);
    worst = std::max({worst, s.equilibrium, s.costate, s.controller});
  }
  report.terminal =
      max_abs(traj.costate[horizon] -
              bp.transpose() * (h_edge * traj.e[horizon + 1]) -
              traj.grad[horizon + 1]);
  report.max_residual = std::max(worst, report.terminal);
  return report;
}

}  // namespace distopt
