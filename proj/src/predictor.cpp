#include "evcatch/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "evcatch/rng.hpp"

namespace evcatch {

namespace {

constexpr int kTtcWindow = 12;           // measurements used for the looming fit
constexpr double kMaxTtcS = 2.0;         // reject implausible looming estimates
constexpr double kMinSigmaM = 1e-12;

struct PixelAccum {
  std::int64_t count = 0;
  std::int64_t sum_x = 0, sum_y = 0;
  int min_x = 1 << 30, max_x = -1, min_y = 1 << 30, max_y = -1;

  void add(int x, int y) {
    ++count;
    sum_x += x;
    sum_y += y;
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
  double centroid_u() const {
    return static_cast<double>(sum_x) / static_cast<double>(count) + 0.5;
  }
  double centroid_v() const {
    return static_cast<double>(sum_y) / static_cast<double>(count) + 0.5;
  }
};

}  // namespace

void validate_predictor_config(const PredictorConfig& cfg) {
  if (cfg.early_sigma_m < 0 || cfg.late_sigma_m < 0 || cfg.ttc_sigma_us < 0) {
    throw BoundsError("noise stds must be non-negative");
  }
  if (cfg.early_sigma_m < cfg.late_sigma_m) {
    throw BoundsError("early-frame std must be >= late-frame std");
  }
  if (cfg.profile_frames < 2) {
    throw BoundsError("noise profile needs at least 2 frames");
  }
  if (!(cfg.pixel_sigma_px >= 0) || !(cfg.assumed_ball_radius_m > 0)) {
    throw BoundsError("invalid analytic predictor parameters");
  }
}

Predictor::Predictor(PredictorConfig cfg) : cfg_(cfg) {
  validate_predictor_config(cfg_);
}

double Predictor::sigma_for_frame(int frame_index) const {
  const double f = std::clamp(
      static_cast<double>(frame_index - 1) /
          static_cast<double>(cfg_.profile_frames - 1),
      0.0, 1.0);
  return cfg_.early_sigma_m + (cfg_.late_sigma_m - cfg_.early_sigma_m) * f;
}

std::optional<AnalyticMeasurement> Predictor::measure(
    const Behi& image, const Behi* previous) const {
  const SensorGeometry& g = image.geometry();
  const int w = g.width, h = g.height;

  // Largest 8-connected component of the trail.
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::int32_t> stack;
  std::vector<std::int32_t> component, best_component;
  PixelAccum best;

  const auto bytes = image.bytes();
  for (std::size_t byte_idx = 0; byte_idx < bytes.size(); ++byte_idx) {
    if (bytes[byte_idx] == 0) continue;
    for (int bit = 0; bit < 8; ++bit) {
      if (!(bytes[byte_idx] & (0x80u >> bit))) continue;
      const auto idx = static_cast<std::int32_t>(byte_idx * 8 + bit);
      if (idx >= w * h || visited[idx]) continue;

      PixelAccum acc;
      component.clear();
      stack.assign(1, idx);
      visited[idx] = 1;
      while (!stack.empty()) {
        const std::int32_t p = stack.back();
        stack.pop_back();
        const int px = p % w, py = p / w;
        acc.add(px, py);
        component.push_back(p);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = px + dx, ny = py + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const std::int32_t n = ny * w + nx;
            if (!visited[n] && image.test(nx, ny)) {
              visited[n] = 1;
              stack.push_back(n);
            }
          }
        }
      }
      if (acc.count > best.count) {
        best = acc;
        best_component.swap(component);
      }
    }
  }
  if (best.count == 0) return std::nullopt;

  // Newest pixels inside the component locate the leading edge and carry
  // the current disk geometry: a growth ring spans the full disk, a drift
  // crescent spans the full disk extent perpendicular to the motion.
  PixelAccum delta;
  bool use_prev = previous != nullptr;
  for (std::int32_t p : best_component) {
    const int px = p % w, py = p / w;
    if (!use_prev || !previous->test(px, py)) delta.add(px, py);
  }
  if (delta.count == 0) {
    delta = best;
    use_prev = false;
  }

  const double d_half_w = 0.5 * (delta.max_x - delta.min_x);
  const double d_half_h = 0.5 * (delta.max_y - delta.min_y);
  const double d_center_u = 0.5 * (delta.min_x + delta.max_x) + 0.5;
  const double d_center_v = 0.5 * (delta.min_y + delta.max_y) + 0.5;

  // Sub-pixel radius for the ring case: furthest newest pixel from the
  // newest-pixel bbox center tracks the boundary without the half-pixel
  // quantization of the bbox extents.
  double max_dist = 0.0;
  for (std::int32_t p : best_component) {
    const int px = p % w, py = p / w;
    if (use_prev && previous->test(px, py)) continue;
    const double du = (px + 0.5) - d_center_u;
    const double dv = (py + 0.5) - d_center_v;
    max_dist = std::max(max_dist, std::sqrt(du * du + dv * dv));
  }
  const double ext = std::max(d_half_w, d_half_h);
  const double squareness = ext > 0.0 ? std::min(d_half_w, d_half_h) / ext : 1.0;
  double rho = squareness * (max_dist + 0.35) + (1.0 - squareness) * ext;

  const double half_w = 0.5 * (best.max_x - best.min_x);
  const double half_h = 0.5 * (best.max_y - best.min_y);
  rho = std::clamp(rho, 0.5,
                   std::max(0.5, std::min(half_w, half_h) + 1.0));
  const double center_u = 0.5 * (best.min_x + best.max_x) + 0.5;
  const double center_v = 0.5 * (best.min_y + best.max_y) + 0.5;

  // The current disk sits at the end of the trail the newest pixels point
  // to; with pure growth the offset vanishes and the bbox center is exact.
  const double dir_u = std::clamp(
      (delta.centroid_u() - best.centroid_u()) / (0.5 * std::max(rho, 1.0)),
      -1.0, 1.0);
  const double dir_v = std::clamp(
      (delta.centroid_v() - best.centroid_v()) / (0.5 * std::max(rho, 1.0)),
      -1.0, 1.0);

  AnalyticMeasurement m;
  m.u = center_u + dir_u * std::max(half_w - rho, 0.0);
  m.v = center_v + dir_v * std::max(half_h - rho, 0.0);
  m.rho = rho;
  return m;
}

std::optional<FramePrediction> Predictor::predict_oracle(
    const GroundTruth& truth, int frame_index, TimestampUs frame_time_us) const {
  const std::size_t idx = static_cast<std::size_t>(frame_index) - 1;
  if (idx >= truth.t_us.size()) return std::nullopt;  // ball already landed

  const double sigma = sigma_for_frame(frame_index);
  FramePrediction pred;
  pred.t_us = frame_time_us;
  pred.d_m = truth.x_m[idx] +
             sigma * hash_gaussian(cfg_.seed, static_cast<std::uint64_t>(frame_index), 0);
  pred.sigma_m = std::max(sigma, kMinSigmaM);
  const double ttc =
      static_cast<double>(truth.ttc_us[idx]) +
      cfg_.ttc_sigma_us *
          hash_gaussian(cfg_.seed, static_cast<std::uint64_t>(frame_index), 1);
  pred.ttc_us = std::max(ttc, 0.0);
  return pred;
}

std::optional<FramePrediction> Predictor::predict_analytic(
    const CameraModel& cam, FrameHistory& history) const {
  if (history.measurements.size() < 2) return std::nullopt;
  const AnalyticMeasurement& m = history.measurements.back();

  const double depth = cam.focal_px * cfg_.assumed_ball_radius_m / m.rho;
  const double offset = (m.u - cam.cx) / m.rho;
  const double d = cam.position.x + offset * cfg_.assumed_ball_radius_m;
  const double sigma =
      std::max((depth / cam.focal_px) * cfg_.pixel_sigma_px *
                   std::sqrt(1.0 + offset * offset),
               1e-6);

  // Looming: 1/rho is affine in time for constant approach speed, so a
  // weighted line fit gives the remaining time to rho -> infinity. Weights
  // rho^4 reflect the quantization variance of 1/rho.
  const std::size_t n = history.measurements.size();
  const std::size_t first = n > kTtcWindow ? n - kTtcWindow : 0;
  const TimestampUs t_ref = history.measurements[first].t_us;
  double sw = 0, st = 0, stt = 0, sq = 0, stq = 0;
  for (std::size_t i = first; i < n; ++i) {
    const AnalyticMeasurement& mi = history.measurements[i];
    const double t = static_cast<double>(mi.t_us - t_ref) * 1e-6;
    const double q = 1.0 / mi.rho;
    const double w = mi.rho * mi.rho * mi.rho * mi.rho;
    sw += w;
    st += w * t;
    stt += w * t * t;
    sq += w * q;
    stq += w * t * q;
  }
  const double det = sw * stt - st * st;
  double ttc_us = -1.0;
  if (std::fabs(det) > 1e-30) {
    const double slope = (sw * stq - st * sq) / det;
    const double intercept = (sq - slope * st) / sw;
    const double t_now = static_cast<double>(m.t_us - t_ref) * 1e-6;
    const double q_now = intercept + slope * t_now;
    if (slope < -1e-9 && q_now > 1e-6) {
      const double ttc_s = -q_now / slope;
      if (ttc_s > 0.0 && ttc_s <= kMaxTtcS) ttc_us = ttc_s * 1e6;
    }
  }
  if (ttc_us < 0.0) {
    // Keep the position observation flowing by decaying the last estimate.
    if (history.last_ttc_us < 0.0) return std::nullopt;
    ttc_us = std::max(
        history.last_ttc_us -
            static_cast<double>(m.t_us - history.last_ttc_t_us),
        0.0);
  }
  history.last_ttc_us = ttc_us;
  history.last_ttc_t_us = m.t_us;

  FramePrediction pred;
  pred.t_us = m.t_us;
  pred.d_m = d;
  pred.sigma_m = sigma;
  pred.ttc_us = ttc_us;
  return pred;
}

std::optional<FramePrediction> Predictor::predict(
    const Behi& image, const Behi* previous_image, const CameraModel& cam,
    FrameHistory& history, const GroundTruth* truth, int frame_index,
    TimestampUs frame_time_us) const {
  if (cfg_.kind == PredictorKind::noisy_oracle) {
    if (truth == nullptr) {
      throw ContractError("noisy oracle predictor requires ground truth");
    }
    return predict_oracle(*truth, frame_index, frame_time_us);
  }

  auto m = measure(image, previous_image);
  if (!m) return std::nullopt;  // no detection, pipeline skips the frame
  m->t_us = frame_time_us;
  history.measurements.push_back(*m);
  return predict_analytic(cam, history);
}

double reference_frame_mae_m(const PredictorConfig& cfg,
                             const CalibrationCampaign& campaign) {
  validate_predictor_config(cfg);
  double sum = 0.0;
  std::int64_t n = 0;
  for (int e = 0; e < campaign.episodes; ++e) {
    const std::uint64_t ep_seed = episode_seed(campaign.seed, e);
    const LaunchSpec launch = sample_launch(campaign.launcher, ep_seed);
    const BallisticTrajectory traj = trajectory_from_launch(launch);
    const GroundTruth truth = ground_truth_labels(traj, campaign.frame_period_us);
    const std::uint64_t noise_seed = mix_seed(cfg.seed, ep_seed);
    const int frames = std::min<int>(campaign.batch_frames,
                                     static_cast<int>(truth.t_us.size()));
    for (int k = 1; k <= frames; ++k) {
      if (truth.t_us[k - 1] - truth.trigger_us >= campaign.deadline_us) break;
      const double f = std::clamp(
          static_cast<double>(k - 1) / static_cast<double>(cfg.profile_frames - 1),
          0.0, 1.0);
      const double sigma =
          cfg.early_sigma_m + (cfg.late_sigma_m - cfg.early_sigma_m) * f;
      sum += sigma * std::fabs(hash_gaussian(noise_seed, k, 0));
      ++n;
    }
  }
  if (n == 0) throw Error("reference campaign produced no frames");
  return sum / static_cast<double>(n);
}

PredictorConfig calibrate_noise_profile(double target_m,
                                        const PredictorConfig& base,
                                        const CalibrationCampaign& campaign) {
  if (target_m < 0) throw BoundsError("calibration target must be >= 0");
  PredictorConfig cfg = base;
  cfg.kind = PredictorKind::noisy_oracle;
  if (target_m == 0.0) {
    cfg.early_sigma_m = 0.0;
    cfg.late_sigma_m = 0.0;
    cfg.ttc_sigma_us = 0.0;
    return cfg;
  }
  // Realized error is linear in the profile scale, so one measurement
  // against the same noise draws lands exactly on the target.
  const double base_mae = reference_frame_mae_m(cfg, campaign);
  const double scale = target_m / base_mae;
  cfg.early_sigma_m *= scale;
  cfg.late_sigma_m *= scale;
  cfg.ttc_sigma_us *= scale;
  return cfg;
}

}  // namespace evcatch
