#pragma once

// Local objectives f_i with value / gradient / Hessian oracles, declared
// curvature bounds 0 < m1 <= m2, a finite-difference Hessian, and a damped
// Newton reference minimizer of F(x) = sum_i f_i(x) used as the ground-truth
// x* in convergence measurements.

#include "distopt/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace distopt {

struct LocalObjective {
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;
  std::function<MatrixXd(const VectorXd&)> hessian;
  std::string kind;  // quadratic | logistic | custom
};

class ObjectiveSet {
 public:
  // Quadratics f_i(x) = 0.5 (x-b_i)^T A_i (x-b_i); bounds from the extreme
  // eigenvalues across agents.
  static ObjectiveSet quadratic(std::vector<MatrixXd> a,
                                std::vector<VectorXd> b);
  // Random quadratics with per-agent eigenvalues drawn in [m1, m2].
  static ObjectiveSet random_quadratic(int n, int p, double m1, double m2,
                                       std::uint64_t seed);
  // l2-regularized logistic regression on seeded synthetic data; m1 is the
  // regularizer weight, m2 computed from the data Gram matrices.
  static ObjectiveSet logistic(int n, int p, int samples_per_agent, double reg,
                               std::uint64_t seed);
  static ObjectiveSet custom(std::vector<LocalObjective> agents, int p,
                             double m1, double m2);

  int n() const { return static_cast<int>(agents_.size()); }
  int dim() const { return p_; }
  double m1() const { return m1_; }
  double m2() const { return m2_; }
  const std::string& kind(int i) const;

  double value(int i, const VectorXd& x) const;
  VectorXd gradient(int i, const VectorXd& x) const;
  MatrixXd hessian(int i, const VectorXd& x) const;

  // Symmetrized forward-difference Jacobian of the gradient; step > 0.
  MatrixXd fd_hessian(int i, const VectorXd& x, double step) const;

  double total_value(const VectorXd& x) const;     // F(x) = sum f_i(x)
  VectorXd total_gradient(const VectorXd& x) const;
  MatrixXd total_hessian(const VectorXd& x) const;

  // Per-agent gradients of a stacked state (n blocks of dimension p).
  VectorXd stacked_gradient(const VectorXd& xs) const;

  // x* with ||sum_i grad f_i(x*)|| <= tol by damped Newton iteration.
  VectorXd reference_minimizer(double tol, int max_iter = 200) const;

 private:
  ObjectiveSet(std::vector<LocalObjective> agents, int p, double m1, double m2)
      : agents_(std::move(agents)), p_(p), m1_(m1), m2_(m2) {}
  void check_agent(int i) const;
  void check_dim(const VectorXd& x) const;

  std::vector<LocalObjective> agents_;
  int p_;
  double m1_;
  double m2_;
};

}  // namespace distopt
