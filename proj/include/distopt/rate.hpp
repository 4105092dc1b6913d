#pragma once

// Convergence-rate measurement over a trace: per-iteration error ratios
// r(k) = err(k+1)/err(k), a deterministic sublinear/linear/superlinear
// classification, the measured consensus contraction, and envelope constants
// against the geometric rate predictions.
//
// Classification is a pure function of the error column so that re-fitting a
// saved trace reproduces it exactly. Rules (documented in the README):
// iterations below the 1e-13 error floor are dropped; the last
// min(8, available) ratios form the decision window; `superlinear` requires
// every consecutive ratio pair in the window to decay by at least 5% and the
// window's log-ratio slope to be below -0.01; otherwise `linear` when the
// window mean is at most 0.995 (reported as c), else `sublinear`.

#include "distopt/common.hpp"

#include <string>
#include <vector>

namespace distopt {

inline constexpr double kErrorFloor = 1e-13;

// Rate context measured from the run (spectra at the reference point);
// NaN fields mean "not applicable".
struct RateContext {
  double rho = std::numeric_limits<double>::quiet_NaN();  // rho((Gamma_P+h*)^{-1}Gamma_P)
  double c = std::numeric_limits<double>::quiet_NaN();    // ||I - eta h*||
};

struct RateReport {
  std::vector<long> ratio_index;  // k of each usable ratio
  std::vector<double> ratios;     // r(k) = err(k+1)/err(k)
  double log_ratio_slope = std::numeric_limits<double>::quiet_NaN();
  std::string classification;     // sublinear | linear | superlinear
  double linear_c = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();  // consensus contraction
  double rho = std::numeric_limits<double>::quiet_NaN();
  double c_envelope = std::numeric_limits<double>::quiet_NaN();
  double r1 = std::numeric_limits<double>::quiet_NaN();  // min r1: r(k) <= r1 rho^{k+1}
  double r2 = std::numeric_limits<double>::quiet_NaN();  // min r2: r(k) <= r2 c^k
  bool envelope_rho_consistent = false;  // slope <= log(rho) + margin
  int usable = 0;
};

// err: per-iteration ||x(k) - x*||; consensus_err may be empty. Throws
// ErrorCode::invalid ("trace too short") with fewer than 3 usable ratios.
RateReport fit_rate(const std::vector<double>& err,
                    const std::vector<double>& consensus_err,
                    const RateContext& ctx = {});

}  // namespace distopt
