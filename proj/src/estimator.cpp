#include "evcatch/estimator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "evcatch/errors.hpp"

namespace evcatch {

namespace {
constexpr double kConditionLimit = 1e10;
}

void WlsState::push(const FramePrediction& obs) {
  if (!(obs.sigma_m > 0.0)) {
    throw ContractError("rejected observation with sigma " +
                        std::to_string(obs.sigma_m) + " <= 0");
  }
  if (!has_ref_) {
    ref_us_ = obs.t_us;
    min_t_us_ = obs.t_us;
    max_t_us_ = obs.t_us;
    has_ref_ = true;
  }
  min_t_us_ = std::min(min_t_us_, obs.t_us);
  max_t_us_ = std::max(max_t_us_, obs.t_us);

  const double t = static_cast<double>(obs.t_us - ref_us_) * 1e-6;
  const double w = 1.0 / (obs.sigma_m * obs.sigma_m);
  sw_ += w;
  st_ += w * t;
  stt_ += w * t * t;
  sd_ += w * obs.d_m;
  std_ += w * t * obs.d_m;
  projected_impacts_us_.push_back(static_cast<double>(obs.t_us) + obs.ttc_us);
  ++n_;
}

ImpactEstimate WlsState::fit_scaled(double weight_scale) const {
  if (n_ < 2 || min_t_us_ == max_t_us_) {
    throw UnderdeterminedError("fit needs >= 2 observations at distinct times, have " +
                               std::to_string(n_));
  }
  // Re-reference to the earliest timestamp so push order cannot matter.
  const double delta = static_cast<double>(ref_us_ - min_t_us_) * 1e-6;
  const double sw = sw_ * weight_scale;
  const double st = (st_ + delta * sw_) * weight_scale;
  const double stt = (stt_ + 2.0 * delta * st_ + delta * delta * sw_) * weight_scale;
  const double sd = sd_ * weight_scale;
  const double std = (std_ + delta * sd_) * weight_scale;

  // Eigenvalues of the symmetric 2x2 normal matrix [[sw, st], [st, stt]].
  const double half_tr = 0.5 * (sw + stt);
  const double disc = std::sqrt(std::max(0.25 * (sw - stt) * (sw - stt) + st * st, 0.0));
  const double lambda_min = half_tr - disc;
  const double lambda_max = half_tr + disc;
  if (!(lambda_min > 0.0) || lambda_max / lambda_min > kConditionLimit) {
    throw DegenerateFitError("normal equations ill-conditioned (eigen ratio " +
                             std::to_string(lambda_max / std::max(lambda_min, 1e-300)) +
                             ")");
  }

  const double det = sw * stt - st * st;
  ImpactEstimate est;
  est.slope_mps = (sw * std - st * sd) / det;
  est.intercept_m = (sd - est.slope_mps * st) / sw;
  double sum_proj = 0.0;
  for (double p : projected_impacts_us_) sum_proj += p;
  const double mean_proj_us = sum_proj / static_cast<double>(n_);
  est.t_ref_us = min_t_us_;
  est.t_bar_s = (mean_proj_us - static_cast<double>(min_t_us_)) * 1e-6;
  est.x_impact_m = est.intercept_m + est.slope_mps * est.t_bar_s;
  return est;
}

ImpactEstimate WlsState::fit() const { return fit_scaled(1.0); }

bool WlsState::scale_invariance_check(double c) const {
  const ImpactEstimate base = fit();
  const ImpactEstimate scaled = fit_scaled(1.0 / (c * c));
  return std::fabs(base.intercept_m - scaled.intercept_m) <= 1e-10 &&
         std::fabs(base.slope_mps - scaled.slope_mps) <= 1e-10;
}

std::vector<FitTraceRow> replay_fit_trace(
    std::span<const FramePrediction> predictions) {
  std::vector<FitTraceRow> rows;
  WlsState state;
  for (const FramePrediction& p : predictions) {
    state.push(p);
    FitTraceRow row;
    row.t_us = p.t_us;
    row.n = state.count();
    try {
      const ImpactEstimate est = state.fit();
      row.x_impact_m = est.x_impact_m;
      row.t_bar_us = est.t_bar_abs_us();
    } catch (const Error&) {
      row.x_impact_m = std::numeric_limits<double>::quiet_NaN();
      row.t_bar_us = 0;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_fit_trace_csv(std::ostream& out, std::span<const FitTraceRow> rows) {
  out << "t_us,N,x_impact_m,t_bar_us\n";
  char buf[96];
  for (const FitTraceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.9g,%lld",
                  static_cast<long long>(r.t_us), r.n, r.x_impact_m,
                  static_cast<long long>(r.t_bar_us));
    out << buf << '\n';
  }
}

}  // namespace evcatch
