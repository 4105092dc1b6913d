#include "distopt/consensus.hpp"

namespace distopt {

namespace {

void check(const ConsensusConfig& cfg, std::size_t n) {
  if (n == 0) fail(ErrorCode::invalid, "consensus: no values");
  if (cfg.mode == ConsensusConfig::Mode::linear) {
    if (cfg.rounds < 1)
      fail(ErrorCode::invalid, "consensus: linear mode needs rounds >= 1");
    if (cfg.mixing.rows() != static_cast<Eigen::Index>(n) ||
        cfg.mixing.cols() != static_cast<Eigen::Index>(n))
      fail(ErrorCode::invalid, "consensus: mixing matrix has wrong size");
  }
}

}  // namespace

std::vector<VectorXd> average_vectors(const std::vector<VectorXd>& values,
                                      const ConsensusConfig& cfg) {
  check(cfg, values.size());
  const std::size_t n = values.size();
  const Eigen::Index dim = values[0].size();
  for (const auto& v : values)
    if (v.size() != dim)
      fail(ErrorCode::invalid, "consensus: value dimensions differ");

  if (cfg.mode == ConsensusConfig::Mode::exact) {
    VectorXd mean = VectorXd::Zero(dim);
    for (const auto& v : values) mean += v;
    mean /= static_cast<double>(n);
    return std::vector<VectorXd>(n, mean);
  }

  std::vector<VectorXd> cur = values;
  std::vector<VectorXd> next(n);
  for (int r = 0; r < cfg.rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      VectorXd acc = VectorXd::Zero(dim);
      for (std::size_t j = 0; j < n; ++j) {
        const double w = cfg.mixing(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(j));
        if (w != 0.0) acc += w * cur[j];
      }
      next[i] = acc;
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<MatrixXd> average_matrices(const std::vector<MatrixXd>& values,
                                       const ConsensusConfig& cfg) {
  check(cfg, values.size());
  const Eigen::Index rows = values[0].rows();
  const Eigen::Index cols = values[0].cols();
  std::vector<VectorXd> flat;
  flat.reserve(values.size());
  for (const auto& m : values) {
    if (m.rows() != rows || m.cols() != cols)
      fail(ErrorCode::invalid, "consensus: matrix dimensions differ");
    flat.push_back(Eigen::Map<const VectorXd>(m.data(), m.size()));
  }
  const auto mixed = average_vectors(flat, cfg);
  std::vector<MatrixXd> out;
  out.reserve(values.size());
  for (const auto& v : mixed) {
    MatrixXd m = Eigen::Map<const MatrixXd>(v.data(), rows, cols);
    out.push_back(0.5 * (m + m.transpose()));
  }
  return out;
}

}  // namespace distopt
