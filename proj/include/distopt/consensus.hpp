#pragma once

// Average consensus over per-agent values: an exact-average idealization and
// a finite-round linear protocol driven by a doubly stochastic mixing matrix.
// Linear mode contracts the deviation from the mean by the mixing matrix's
// second singular value per round and preserves the global sum.

#include "distopt/common.hpp"

#include <vector>

namespace distopt {

struct ConsensusConfig {
  enum class Mode { exact, linear };
  Mode mode = Mode::exact;
  int rounds = 1;  // linear mode only, >= 1
  MatrixXd mixing;  // n x n doubly stochastic W, required in linear mode
};

std::vector<VectorXd> average_vectors(const std::vector<VectorXd>& values,
                                      const ConsensusConfig& cfg);

std::vector<MatrixXd> average_matrices(const std::vector<MatrixXd>& values,
                                       const ConsensusConfig& cfg);

}  // namespace distopt
