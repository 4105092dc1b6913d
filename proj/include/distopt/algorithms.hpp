#pragma once

// Pure step functions for the optimization iterations: the inner-loop and
// closed-form directions of the central-node method (docmc), the scalar-step
// peer-to-peer variant (doaoc), the consensus-only and centralized degenerate
// forms, and the first-order gradient-descent baseline. Each maps explicit
// state to a new state; the simulator owns scheduling and messaging.

#include "distopt/common.hpp"
#include "distopt/control.hpp"

namespace distopt {

// Stacked per-round state: outer index k, agent states x (n blocks of
// dimension p), edge errors e = B x recomputed each round, and the
// consensus-provided average gradient g and block-diagonal average Hessian h.
struct IterationState {
  int k = 0;
  VectorXd x;
  VectorXd e;
  VectorXd g;
  MatrixXd h;
};

struct DgdSchedule {
  enum class Kind { constant, harmonic };
  Kind kind = Kind::constant;
  double value = 0.05;  // constant step, or c in c/(k+1)
  double at(long k) const {
    return kind == Kind::constant ? value
                                  : value / static_cast<double>(k + 1);
  }
};

struct AlgorithmConfig {
  double eta = 0.5;           // scalar step for doaoc / centralized
  bool eta_auto = false;      // resolve eta = 1/m2 from the objective bounds
  int inner_cap = -1;         // <0: inner loop runs the full 1..k
  DgdSchedule dgd;
  double tol_grad = 1e-9;     // <=0 disables the term
  double tol_edge = 1e-9;
  long max_iters = 100;
  bool require_convergence = false;
};

// d_0 = -(Gamma_P + h)^{-1}(g + B^T P e), then
// d_l = -(Gamma_P + h)^{-1}(g - Gamma_P d_{l-1}) for l = 1..min(k, cap).
VectorXd docmc_direction(const IterationState& st, const RiccatiSolution& ric,
                         int inner_cap);

// Closed form of the same direction:
// -(I - T^{k+1}) h^{-1} g - T^{k+1} Gamma_P^{-1} B^T P e,
// with T = (Gamma_P + h)^{-1} Gamma_P.
VectorXd docmc_direction_closed(const IterationState& st,
                                const RiccatiSolution& ric);

// d0 = -eta (g + B^T P e), then d = -eta g + (I - eta h) d.
VectorXd doaoc_direction(const IterationState& st, const RiccatiSolution& ric,
                         double eta, int inner_cap);

// d = -Gamma_P^{-1} B^T P e; the iteration with all f_i absent.
VectorXd consensus_only_direction(const VectorXd& e,
                                  const RiccatiSolution& ric);

// One synchronous baseline round: x_i' = sum_j W_ij x_j - eta grad_i.
// w_expanded is the mixing matrix block-expanded to dimension p.
VectorXd dgd_step(const VectorXd& x, const VectorXd& grads,
                  const MatrixXd& w_expanded, double eta);

enum class CentralizedVariant { exact, eta };

// Edge-free degenerate recursions on a single state of dimension p.
// `exact` uses (R + h)^{-1} with the control weight R; `eta` the scalar step.
VectorXd centralized_step(const VectorXd& y, const VectorXd& g,
                          const MatrixXd& h, CentralizedVariant variant,
                          double eta, int k, const MatrixXd& r,
                          int inner_cap = -1);

// A^pow by binary exponentiation.
MatrixXd matrix_power(const MatrixXd& a, long pow);

}  // namespace distopt
