#include "distopt/common.hpp"

#include <Eigen/Dense>

#include <cstdio>

namespace distopt {

MatrixXd kron_identity(const MatrixXd& a, int p) {
  if (p == 1) return a;
  MatrixXd out = MatrixXd::Zero(a.rows() * p, a.cols() * p);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0)
        out.block(i * p, j * p, p, p) =
            a(i, j) * MatrixXd::Identity(p, p);
  return out;
}

MatrixXd block_diag(const std::vector<MatrixXd>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  MatrixXd out = MatrixXd::Zero(total, total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

MatrixXd averaging_operator(int n, int p) {
  MatrixXd avg = MatrixXd::Constant(n, n, 1.0 / n);
  return kron_identity(avg, p);
}

MatrixXd random_orthogonal(int dim, Rng& rng) {
  MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  // Fix signs so the factorization is unique.
  MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

MatrixXd random_spd(int dim, double lo, double hi, Rng& rng) {
  const MatrixXd q = random_orthogonal(dim, rng);
  VectorXd eig(dim);
  for (int i = 0; i < dim; ++i) eig[i] = rng.uniform(lo, hi);
  MatrixXd m = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace distopt
