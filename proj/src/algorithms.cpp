#include "distopt/algorithms.hpp"

#include <Eigen/Dense>

namespace distopt {

namespace {

int loop_count(int k, int inner_cap) {
  if (k < 0) fail(ErrorCode::invalid, "negative iteration index");
  return inner_cap < 0 ? k : std::min(k, inner_cap);
}

Eigen::LLT<MatrixXd> checked_llt(const MatrixXd& m, const char* what) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, std::string(what) + " is not positive definite");
  return llt;
}

}  // namespace

MatrixXd matrix_power(const MatrixXd& a, long pow) {
  if (pow < 0) fail(ErrorCode::invalid, "negative matrix power");
  MatrixXd result = MatrixXd::Identity(a.rows(), a.cols());
  MatrixXd base = a;
  while (pow > 0) {
    if (pow & 1) result = result * base;
    base = base * base;
    pow >>= 1;
  }
  return result;
}

VectorXd docmc_direction(const IterationState& st, const RiccatiSolution& ric,
                         int inner_cap) {
  const auto llt = checked_llt(ric.gamma_p + st.h, "Gamma_P + h");
  const VectorXd pull = ric.btp * st.e;
  VectorXd d = -llt.solve(st.g + pull);
  const int loops = loop_count(st.k, inner_cap);
  for (int l = 1; l <= loops; ++l)
    d = -llt.solve(st.g - ric.gamma_p * d);
  return d;
}

VectorXd docmc_direction_closed(const IterationState& st,
                                const RiccatiSolution& ric) {
  const auto llt = checked_llt(ric.gamma_p + st.h, "Gamma_P + h");
  const MatrixXd t = llt.solve(ric.gamma_p);
  const MatrixXd tp = matrix_power(t, static_cast<long>(st.k) + 1);
  const auto h_llt = checked_llt(st.h, "average Hessian");
  const auto gamma_llt = checked_llt(ric.gamma_p, "Gamma_P");
  const MatrixXd eye = MatrixXd::Identity(t.rows(), t.cols());
  return -(eye - tp) * h_llt.solve(st.g) -
         tp * gamma_llt.solve(ric.btp * st.e);
}

VectorXd doaoc_direction(const IterationState& st, const RiccatiSolution& ric,
                         double eta, int inner_cap) {
  if (!(eta > 0.0)) fail(ErrorCode::invalid, "doaoc requires eta > 0");
  VectorXd d = -eta * (st.g + ric.btp * st.e);
  const int loops = loop_count(st.k, inner_cap);
  for (int l = 1; l <= loops; ++l) d = d - eta * st.g - eta * (st.h * d);
  return d;
}

VectorXd consensus_only_direction(const VectorXd& e,
                                  const RiccatiSolution& ric) {
  const auto llt = checked_llt(ric.gamma_p, "Gamma_P");
  return -llt.solve(ric.btp * e);
}

VectorXd dgd_step(const VectorXd& x, const VectorXd& grads,
                  const MatrixXd& w_expanded, double eta) {
  if (x.size() != grads.size() || w_expanded.rows() != x.size())
    fail(ErrorCode::invalid, "dgd step: dimension mismatch");
  return w_expanded * x - eta * grads;
}

VectorXd centralized_step(const VectorXd& y, const VectorXd& g,
                          const MatrixXd& h, CentralizedVariant variant,
                          double eta, int k, const MatrixXd& r,
                          int inner_cap) {
  const int loops = loop_count(k, inner_cap);
  VectorXd d;
  if (variant == CentralizedVariant::exact) {
    const auto llt = checked_llt(r + h, "R + h");
    d = -llt.solve(g);
    for (int l = 1; l <= loops; ++l) d = -llt.solve(g - r * d);
  } else {
    if (!(eta > 0.0))
      fail(ErrorCode::invalid, "centralized eta variant requires eta > 0");
    d = -eta * g;
    for (int l = 1; l <= loops; ++l) d = d - eta * g - eta * (h * d);
  }
  return y + d;
}

}  // namespace distopt
