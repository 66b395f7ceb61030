#include "evcatch/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "evcatch/errors.hpp"

namespace evcatch {

namespace {

MetricStat stat_of(const std::vector<double>& abs_errors) {
  MetricStat s;
  s.n = static_cast<std::int64_t>(abs_errors.size());
  if (s.n == 0) return s;
  double sum = 0;
  for (double e : abs_errors) sum += e;
  s.mae = sum / static_cast<double>(s.n);
  double var = 0;
  for (double e : abs_errors) var += (e - s.mae) * (e - s.mae);
  s.std_dev = std::sqrt(var / static_cast<double>(s.n));
  return s;
}

}  // namespace

double loss_l1(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw ContractError("L1 loss length mismatch: " + std::to_string(pred.size()) +
                        " vs " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw ContractError("L1 loss needs at least one element");
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += std::fabs(pred[i] - truth[i]);
  }
  return sum / static_cast<double>(pred.size());
}

double loss_nll(std::span<const double> d, std::span<const double> sigma,
                std::span<const double> d_hat) {
  if (d.size() != sigma.size() || d.size() != d_hat.size()) {
    throw ContractError("NLL loss length mismatch");
  }
  if (d.empty()) throw ContractError("NLL loss needs at least one element");
  double sum = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(sigma[i] > 0)) {
      throw ContractError("NLL loss requires sigma > 0");
    }
    const double r = (d[i] - d_hat[i]) / sigma[i];
    sum += std::log(sigma[i]) + r * r;
  }
  return sum / (2.0 * static_cast<double>(d.size()));
}

double nll_minimizing_sigma(std::span<const double> residuals) {
  if (residuals.empty()) throw ContractError("need residuals");
  double sum_sq = 0;
  for (double r : residuals) sum_sq += r * r;
  return std::sqrt(2.0 * sum_sq / static_cast<double>(residuals.size()));
}

double loss_combined(double pos_loss, double time_loss, double nll,
                     double lambda) {
  return pos_loss + time_loss + lambda * nll;
}

MetricsReport compute_metrics(std::span<const EpisodeResult> episodes,
                              std::span<const GroundTruth> truths,
                              TimestampUs deadline_us, double bucket_width_m) {
  if (episodes.empty()) throw ContractError("no episodes to evaluate");
  if (episodes.size() != truths.size()) {
    throw ContractError("episode/truth list size mismatch");
  }

  MetricsReport report;
  report.episodes = static_cast<int>(episodes.size());

  std::vector<double> frame_pos_mm, frame_ttc_ms, impact_mm, impact_eq_mm,
      collision_ms;

  double min_x = 0, max_x = 0;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    min_x = std::min(min_x, episodes[i].impact_x_true_m);
    max_x = std::max(max_x, episodes[i].impact_x_true_m);
  }
  const int first_bucket = static_cast<int>(std::floor(min_x / bucket_width_m + 1e-9));
  const int last_bucket = static_cast<int>(std::ceil(max_x / bucket_width_m - 1e-9));
  for (int b = first_bucket; b < std::max(last_bucket, first_bucket + 1); ++b) {
    report.buckets.push_back(BucketRate{b * bucket_width_m, (b + 1) * bucket_width_m, 0, 0});
  }

  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const EpisodeResult& ep = episodes[i];
    const GroundTruth& truth = truths[i];

    for (const FramePrediction& p : ep.predictions) {
      if (p.t_us - ep.trigger_us >= deadline_us) continue;
      const std::int64_t span = p.t_us - truth.trigger_us;
      const std::int64_t period =
          truth.t_us.size() > 1 ? truth.t_us[1] - truth.t_us[0]
                                : (truth.t_us.empty() ? 1 : truth.t_us[0] - truth.trigger_us);
      const std::int64_t idx = span / std::max<std::int64_t>(period, 1) - 1;
      if (idx < 0 || idx >= static_cast<std::int64_t>(truth.t_us.size())) continue;
      frame_pos_mm.push_back(std::fabs(p.d_m - truth.x_m[idx]) * 1e3);
      frame_ttc_ms.push_back(
          std::fabs(p.ttc_us - static_cast<double>(truth.ttc_us[idx])) * 1e-3);
    }

    if (ep.have_estimate) {
      impact_mm.push_back(std::fabs(ep.x_impact_m - ep.impact_x_true_m) * 1e3);
      impact_eq_mm.push_back(
          std::fabs(ep.x_impact_equal_weight_m - ep.impact_x_true_m) * 1e3);
      // Collision time: flight duration from trigger, estimated vs true.
      const double est_ms =
          static_cast<double>(ep.t_bar_abs_us - ep.trigger_us) * 1e-3;
      const double true_ms =
          static_cast<double>(ep.impact_time_us - ep.trigger_us) * 1e-3;
      collision_ms.push_back(std::fabs(est_ms - true_ms));
    }

    const bool caught = ep.outcome == EpisodeOutcome::caught;
    report.caught += caught ? 1 : 0;
    switch (ep.outcome) {
      case EpisodeOutcome::missed_x: ++report.missed_x; break;
      case EpisodeOutcome::missed_z: ++report.missed_z; break;
      case EpisodeOutcome::missed_deadline: ++report.missed_deadline; break;
      case EpisodeOutcome::missed_no_perception: ++report.missed_no_perception; break;
      default: break;
    }
    const int b = std::clamp(
        static_cast<int>(std::floor(ep.impact_x_true_m / bucket_width_m + 1e-9)) -
            first_bucket,
        0, static_cast<int>(report.buckets.size()) - 1);
    ++report.buckets[b].episodes;
    report.buckets[b].caught += caught ? 1 : 0;
  }

  report.frame_position_mm = stat_of(frame_pos_mm);
  report.frame_ttc_ms = stat_of(frame_ttc_ms);
  report.impact_position_mm = stat_of(impact_mm);
  report.impact_equal_weight_mm = stat_of(impact_eq_mm);
  report.collision_time_ms = stat_of(collision_ms);
  report.success_rate =
      static_cast<double>(report.caught) / static_cast<double>(report.episodes);
  return report;
}

}  // namespace evcatch
