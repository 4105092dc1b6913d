#include "distopt/objective.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace distopt {

namespace {

double softplus(double t) {  // log(1 + e^t), overflow safe
  return t > 30.0 ? t : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                  : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

ObjectiveSet ObjectiveSet::quadratic(std::vector<MatrixXd> a,
                                     std::vector<VectorXd> b) {
  if (a.empty() || a.size() != b.size())
    fail(ErrorCode::invalid, "quadratic objective: need matching A_i, b_i");
  const int p = static_cast<int>(a[0].rows());
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::vector<LocalObjective> agents;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != p || a[i].cols() != p ||
        b[i].size() != p)
      fail(ErrorCode::invalid, "quadratic objective: inconsistent dimensions");
    if (!is_symmetric(a[i], 1e-12))
      fail(ErrorCode::invalid, "quadratic objective: A_i must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a[i]);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
    MatrixXd ai = a[i];
    VectorXd bi = b[i];
    agents.push_back(LocalObjective{
        [ai, bi](const VectorXd& x) {
          const VectorXd d = x - bi;
          return 0.5 * d.dot(ai * d);
        },
        [ai, bi](const VectorXd& x) { return VectorXd(ai * (x - bi)); },
        [ai](const VectorXd&) { return ai; },
        "quadratic"});
  }
  if (!(lo > 0.0))
    fail(ErrorCode::invalid, "quadratic objective: A_i must be positive definite");
  return ObjectiveSet(std::move(agents), p, lo, hi);
}

ObjectiveSet ObjectiveSet::random_quadratic(int n, int p, double m1, double m2,
                                            std::uint64_t seed) {
  if (!(0.0 < m1 && m1 <= m2))
    fail(ErrorCode::invalid, "random quadratic: need 0 < m1 <= m2");
  Rng rng(seed);
  std::vector<MatrixXd> a;
  std::vector<VectorXd> b;
  for (int i = 0; i < n; ++i) {
    a.push_back(random_spd(p, m1, m2, rng));
    b.push_back(rng.normal_vector(p));
  }
  auto set = quadratic(std::move(a), std::move(b));
  // Declared bounds are the requested ones; sampled spectra lie inside.
  set.m1_ = m1;
  set.m2_ = m2;
  return set;
}

ObjectiveSet ObjectiveSet::logistic(int n, int p, int samples_per_agent,
                                    double reg, std::uint64_t seed) {
  if (!(reg > 0.0))
    fail(ErrorCode::invalid, "logistic objective: regularizer must be positive");
  if (samples_per_agent < 0)
    fail(ErrorCode::invalid, "logistic objective: negative sample count");
  Rng rng(seed);
  std::vector<LocalObjective> agents;
  double hi = reg;
  for (int i = 0; i < n; ++i) {
    std::vector<VectorXd> feats;
    std::vector<double> labels;
    MatrixXd gram = MatrixXd::Zero(p, p);
    for (int s = 0; s < samples_per_agent; ++s) {
      VectorXd a = rng.normal_vector(p) / std::sqrt(static_cast<double>(p));
      feats.push_back(a);
      labels.push_back(rng.uniform() < 0.5 ? -1.0 : 1.0);
      gram += a * a.transpose();
    }
    if (samples_per_agent > 0) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.25 * gram);
      hi = std::max(hi, reg + es.eigenvalues().maxCoeff());
    }
    agents.push_back(LocalObjective{
        [feats, labels, reg](const VectorXd& x) {
          double v = 0.5 * reg * x.squaredNorm();
          for (std::size_t s = 0; s < feats.size(); ++s)
            v += softplus(-labels[s] * feats[s].dot(x));
          return v;
        },
        [feats, labels, reg](const VectorXd& x) {
          VectorXd g = reg * x;
          for (std::size_t s = 0; s < feats.size(); ++s) {
            const double z = labels[s] * feats[s].dot(x);
            g -= labels[s] * sigmoid(-z) * feats[s];
          }
          return g;
        },
        [feats, labels, reg](const VectorXd& x) {
          MatrixXd h =
              reg * MatrixXd::Identity(x.size(), x.size());
          for (std::size_t s = 0; s < feats.size(); ++s) {
            const double z = labels[s] * feats[s].dot(x);
            const double w = sigmoid(z) * sigmoid(-z);
            h += w * feats[s] * feats[s].transpose();
          }
          return h;
        },
        "logistic"});
  }
  return ObjectiveSet(std::move(agents), p, reg, hi);
}

ObjectiveSet ObjectiveSet::custom(std::vector<LocalObjective> agents, int p,
                                  double m1, double m2) {
  if (agents.empty()) fail(ErrorCode::invalid, "custom objective: no agents");
  if (!(0.0 < m1 && m1 <= m2))
    fail(ErrorCode::invalid, "custom objective: need 0 < m1 <= m2");
  for (auto& a : agents)
    if (a.kind.empty()) a.kind = "custom";
  return ObjectiveSet(std::move(agents), p, m1, m2);
}

void ObjectiveSet::check_agent(int i) const {
  if (i < 0 || i >= n())
    fail(ErrorCode::invalid,
         "agent index " + std::to_string(i) + " out of range");
}

void ObjectiveSet::check_dim(const VectorXd& x) const {
  if (x.size() != p_)
    fail(ErrorCode::invalid, "state dimension " + std::to_string(x.size()) +
                                 " does not match objective dimension " +
                                 std::to_string(p_));
}

const std::string& ObjectiveSet::kind(int i) const {
  check_agent(i);
  return agents_[i].kind;
}

double ObjectiveSet::value(int i, const VectorXd& x) const {
  check_agent(i);
  check_dim(x);
  return agents_[i].value(x);
}

VectorXd ObjectiveSet::gradient(int i, const VectorXd& x) const {
  check_agent(i);
  check_dim(x);
  return agents_[i].gradient(x);
}

MatrixXd ObjectiveSet::hessian(int i, const VectorXd& x) const {
  check_agent(i);
  check_dim(x);
  return agents_[i].hessian(x);
}

MatrixXd ObjectiveSet::fd_hessian(int i, const VectorXd& x,
                                  double step) const {
  check_agent(i);
  check_dim(x);
  if (!(step > 0.0))
    fail(ErrorCode::invalid, "fd_hessian requires a positive step");
  const VectorXd g0 = agents_[i].gradient(x);
  MatrixXd jac(p_, p_);
  for (int j = 0; j < p_; ++j) {
    VectorXd xj = x;
    xj[j] += step;
    jac.col(j) = (agents_[i].gradient(xj) - g0) / step;
  }
  return 0.5 * (jac + jac.transpose());
}

double ObjectiveSet::total_value(const VectorXd& x) const {
  check_dim(x);
  double v = 0.0;
  for (const auto& a : agents_) v += a.value(x);
  return v;
}

VectorXd ObjectiveSet::total_gradient(const VectorXd& x) const {
  check_dim(x);
  VectorXd g = VectorXd::Zero(p_);
  for (const auto& a : agents_) g += a.gradient(x);
  return g;
}

MatrixXd ObjectiveSet::total_hessian(const VectorXd& x) const {
  check_dim(x);
  MatrixXd h = MatrixXd::Zero(p_, p_);
  for (const auto& a : agents_) h += a.hessian(x);
  return h;
}

VectorXd ObjectiveSet::stacked_gradient(const VectorXd& xs) const {
  if (xs.size() != static_cast<Eigen::Index>(n()) * p_)
    fail(ErrorCode::invalid, "stacked state has wrong dimension");
  VectorXd g(xs.size());
  for (int i = 0; i < n(); ++i)
    g.segment(i * p_, p_) = agents_[i].gradient(xs.segment(i * p_, p_));
  return g;
}

VectorXd ObjectiveSet::reference_minimizer(double tol, int max_iter) const {
  VectorXd x = VectorXd::Zero(p_);
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd g = total_gradient(x);
    if (g.norm() <= tol) return x;
    const MatrixXd h = total_hessian(x);
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::numeric, "reference minimizer: Hessian not positive definite");
    const VectorXd d = -llt.solve(g);
    const double f0 = total_value(x);
    const double slope = g.dot(d);
    double t = 1.0;
    while (t > 1e-12 && total_value(x + t * d) > f0 + 0.25 * t * slope)
      t *= 0.5;
    x += t * d;
  }
  if (total_gradient(x).norm() <= tol) return x;
  fail(ErrorCode::numeric,
       "reference minimizer did not converge within the iteration cap");
}

}  // namespace distopt
