#pragma once

#include <cmath>
#include <iosfwd>
#include <span>
#include <vector>

#include "evcatch/prediction.hpp"

namespace evcatch {

// Result of the weighted regression: the affine trajectory parameters, the
// mean projected impact time (relative to the first pushed frame) and the
// extrapolated impact location. x_impact = intercept + slope * t_bar by
// construction.
struct ImpactEstimate {
  double intercept_m = 0.0;
  double slope_mps = 0.0;
  double t_bar_s = 0.0;
  double x_impact_m = 0.0;
  TimestampUs t_ref_us = 0;

  TimestampUs t_bar_abs_us() const {
    return t_ref_us + static_cast<TimestampUs>(std::llround(t_bar_s * 1e6));
  }
};

// Incremental inverse-variance-weighted least squares for the model
// d = b0 + b1 * t with per-observation weight 1/sigma^2, plus the running
// list of projected impact times t_i + ttc_i.
//
// Accumulation is commutative: sums are kept relative to the first pushed
// timestamp and re-referenced to the minimum timestamp at fit time, so a
// permuted push order yields the same fit. Times are converted to seconds
// internally to keep the 2x2 normal equations well scaled.
class WlsState {
 public:
  // Throws ContractError when obs.sigma_m <= 0.
  void push(const FramePrediction& obs);

  int count() const { return n_; }
  std::span<const double> projected_impacts_us() const {
    return projected_impacts_us_;
  }

  // Throws UnderdeterminedError (fewer than 2 observations or no two
  // distinct timestamps) or DegenerateFitError (eigenvalue ratio of the
  // normal matrix above 1e10).
  ImpactEstimate fit() const;

  // True when scaling every sigma by c leaves beta unchanged within 1e-10;
  // the weights cancel algebraically, this verifies it numerically.
  bool scale_invariance_check(double c) const;

 private:
  ImpactEstimate fit_scaled(double weight_scale) const;

  int n_ = 0;
  bool has_ref_ = false;
  TimestampUs ref_us_ = 0;
  TimestampUs min_t_us_ = 0;
  TimestampUs max_t_us_ = 0;
  double sw_ = 0, st_ = 0, stt_ = 0, sd_ = 0, std_ = 0;
  std::vector<double> projected_impacts_us_;
};

// Value-style wrapper over WlsState::push.
inline WlsState push_observation(WlsState state, const FramePrediction& obs) {
  state.push(obs);
  return state;
}

// CSV export: `t_us,N,x_impact_m,t_bar_us`, one row per replayed frame.
struct FitTraceRow {
  TimestampUs t_us = 0;
  int n = 0;
  double x_impact_m = 0.0;
  TimestampUs t_bar_us = 0;
};

std::vector<FitTraceRow> replay_fit_trace(
    std::span<const FramePrediction> predictions);
void write_fit_trace_csv(std::ostream& out, std::span<const FitTraceRow> rows);

}  // namespace evcatch
