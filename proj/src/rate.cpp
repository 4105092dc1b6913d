#include "distopt/rate.hpp"

#include <algorithm>
#include <cmath>

namespace distopt {

namespace {

constexpr int kWindow = 8;
constexpr double kDecay = 0.05;        // required per-ratio decay
constexpr double kSlopeCut = -0.01;    // window log-slope threshold
constexpr double kLinearCut = 0.995;   // window mean above this: sublinear
constexpr double kRhoMargin = 0.5;     // slack (nats) for the envelope slope

bool usable_err(double v) {
  return std::isfinite(v) && v > kErrorFloor;
}

double ls_slope(const std::vector<double>& y) {
  const int m = static_cast<int>(y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += i;
    sy += y[i];
    sxx += static_cast<double>(i) * i;
    sxy += i * y[i];
  }
  const double den = m * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (m * sxy - sx * sy) / den;
}

}  // namespace

RateReport fit_rate(const std::vector<double>& err,
                    const std::vector<double>& consensus_err,
                    const RateContext& ctx) {
  RateReport rep;
  rep.rho = ctx.rho;
  rep.c_envelope = ctx.c;

  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    if (!usable_err(err[k]) || !usable_err(err[k + 1])) continue;
    rep.ratio_index.push_back(static_cast<long>(k));
    rep.ratios.push_back(err[k + 1] / err[k]);
  }
  for (double v : err)
    if (usable_err(v)) ++rep.usable;

  if (rep.ratios.size() < 3)
    fail(ErrorCode::invalid,
         "trace too short: need at least 3 usable error ratios, have " +
             std::to_string(rep.ratios.size()));

  const int w = std::min<int>(kWindow, static_cast<int>(rep.ratios.size()));
  std::vector<double> window(rep.ratios.end() - w, rep.ratios.end());
  std::vector<double> log_window;
  bool logs_ok = true;
  for (double r : window) {
    if (r > 0.0)
      log_window.push_back(std::log(r));
    else
      logs_ok = false;
  }
  rep.log_ratio_slope = logs_ok ? ls_slope(log_window)
                                : std::numeric_limits<double>::quiet_NaN();

  bool decaying = true;
  for (int i = 0; i + 1 < w; ++i)
    if (!(window[i + 1] <= (1.0 - kDecay) * window[i])) decaying = false;

  double mean = 0.0;
  for (double r : window) mean += r;
  mean /= w;

  if (decaying && logs_ok && rep.log_ratio_slope <= kSlopeCut) {
    rep.classification = "superlinear";
  } else if (mean <= kLinearCut) {
    rep.classification = "linear";
    rep.linear_c = mean;
  } else {
    rep.classification = "sublinear";
  }

  if (std::isfinite(ctx.rho) && ctx.rho > 0.0) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rep.ratios.size(); ++i)
      worst = std::max(worst, rep.ratios[i] /
                                  std::pow(ctx.rho, rep.ratio_index[i] + 1.0));
    rep.r1 = worst;
    rep.envelope_rho_consistent =
        logs_ok && rep.log_ratio_slope <= std::log(ctx.rho) + kRhoMargin;
  }
  if (std::isfinite(ctx.c) && ctx.c > 0.0) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rep.ratios.size(); ++i)
      worst = std::max(
          worst, rep.ratios[i] /
                     std::pow(ctx.c, static_cast<double>(rep.ratio_index[i])));
    rep.r2 = worst;
  }

  // Consensus contraction over entries above the floor.
  double sigma = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k + 1 < consensus_err.size(); ++k) {
    if (!usable_err(consensus_err[k]) || !usable_err(consensus_err[k + 1]))
      continue;
    const double r = consensus_err[k + 1] / consensus_err[k];
    sigma = std::isnan(sigma) ? r : std::max(sigma, r);
  }
  rep.sigma = sigma;
  return rep;
}

}  // namespace distopt
