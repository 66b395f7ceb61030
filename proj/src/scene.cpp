#include "evcatch/scene.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "evcatch/rng.hpp"

namespace evcatch {

namespace {

constexpr TimestampUs kMicroStepUs = 1000;

double speed_of(const Vec3& v) {
  return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

// Solves a symmetric 3x3 system by Gaussian elimination with partial
// pivoting; small enough that no library is warranted.
void solve3(double a[3][4]) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    if (std::fabs(a[col][col]) < 1e-300) {
      throw UnderdeterminedError("singular normal equations in quadratic fit");
    }
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  for (int r = 0; r < 3; ++r) a[r][3] /= a[r][r];
}

struct RowSpan {
  int lo = 0;
  int hi = -1;  // inclusive; empty when hi < lo
  bool empty() const { return hi < lo; }
};

// Pixel (x,y) is covered when its center lies inside the jittered disk.
std::vector<RowSpan> disk_row_spans(double uc, double vc, double rho,
                                    const SensorGeometry& g) {
  std::vector<RowSpan> spans(g.height);
  if (rho <= 0.0) return spans;
  const int y_lo = std::max(0, static_cast<int>(std::floor(vc - rho - 0.5)));
  const int y_hi =
      std::min(g.height - 1, static_cast<int>(std::ceil(vc + rho + 0.5)));
  for (int y = y_lo; y <= y_hi; ++y) {
    const double dy = (y + 0.5) - vc;
    const double rem = rho * rho - dy * dy;
    if (rem < 0.0) continue;
    const double half = std::sqrt(rem);
    int x_lo = static_cast<int>(std::ceil(uc - half - 0.5));
    int x_hi = static_cast<int>(std::floor(uc + half - 0.5));
    x_lo = std::max(x_lo, 0);
    x_hi = std::min(x_hi, g.width - 1);
    if (x_lo <= x_hi) spans[y] = RowSpan{x_lo, x_hi};
  }
  return spans;
}

void emit_range(std::vector<Event>& out, int x0, int x1, int y, int polarity,
                TimestampUs t_prev, TimestampUs t_now, Rng& rng) {
  for (int x = x0; x <= x1; ++x) {
    const TimestampUs span = t_now - t_prev;
    const TimestampUs t =
        t_prev + 1 +
        static_cast<TimestampUs>(rng.uniform() * static_cast<double>(span));
    out.push_back(Event{x, y, std::min(t, t_now), polarity});
  }
}

// Interval difference new \ old, up to two pieces per side.
void diff_spans(std::vector<Event>& out, const RowSpan& oldspan,
                const RowSpan& newspan, int y, TimestampUs t_prev,
                TimestampUs t_now, Rng& rng) {
  if (oldspan.empty() && newspan.empty()) return;
  if (oldspan.empty()) {
    emit_range(out, newspan.lo, newspan.hi, y, +1, t_prev, t_now, rng);
    return;
  }
  if (newspan.empty()) {
    emit_range(out, oldspan.lo, oldspan.hi, y, -1, t_prev, t_now, rng);
    return;
  }
  if (newspan.lo < oldspan.lo) {
    emit_range(out, newspan.lo, std::min(newspan.hi, oldspan.lo - 1), y, +1,
               t_prev, t_now, rng);
  }
  if (newspan.hi > oldspan.hi) {
    emit_range(out, std::max(newspan.lo, oldspan.hi + 1), newspan.hi, y, +1,
               t_prev, t_now, rng);
  }
  if (oldspan.lo < newspan.lo) {
    emit_range(out, oldspan.lo, std::min(oldspan.hi, newspan.lo - 1), y, -1,
               t_prev, t_now, rng);
  }
  if (oldspan.hi > newspan.hi) {
    emit_range(out, std::max(oldspan.lo, newspan.hi + 1), oldspan.hi, y, -1,
               t_prev, t_now, rng);
  }
}

struct BackgroundBlob {
  double x0, y0;        // top-left at t=0, pixels
  double w, h;          // size, pixels
  double vx, vy;        // pixels/second
};

}  // namespace

void validate_launch(const LaunchSpec& spec) {
  const double speed = speed_of(spec.velocity);
  if (!(speed > 0.0) || speed > 20.0) {
    throw BoundsError("launch speed " + std::to_string(speed) +
                      " m/s outside (0, 20]");
  }
  if (!(spec.ball_radius_m > 0.0) || spec.ball_radius_m > 0.1) {
    throw BoundsError("ball radius " + std::to_string(spec.ball_radius_m) +
                      " m outside (0, 0.1]");
  }
  if (spec.launch_time_us < 0) {
    throw BoundsError("launch time must be non-negative");
  }
}

void validate_camera(const CameraModel& cam) {
  validate_geometry(cam.geometry);
  if (!(cam.focal_px > 0.0)) throw BoundsError("focal length must be positive");
  if (cam.cx < 0 || cam.cx > cam.geometry.width || cam.cy < 0 ||
      cam.cy > cam.geometry.height) {
    throw BoundsError("principal point outside the image");
  }
}

void validate_noise(const NoiseSpec& spec) {
  if (spec.pixel_rate_hz < 0 || spec.contour_jitter_px < 0 ||
      spec.background_rate_hz < 0) {
    throw BoundsError("noise rates must be non-negative");
  }
  if (spec.background_x1 < spec.background_x0 ||
      spec.background_y1 < spec.background_y0) {
    throw BoundsError("background region is inverted");
  }
}

void validate_launcher(const LauncherConfig& cfg) {
  if (!(cfg.distance_m > 0)) throw BoundsError("launcher distance must be positive");
  if (cfg.target_x_max_m < cfg.target_x_min_m) {
    throw BoundsError("empty target x range");
  }
  if (!(cfg.speed_min_mps > 0) || cfg.speed_max_mps < cfg.speed_min_mps ||
      cfg.speed_max_mps > 20.0) {
    throw BoundsError("speed range must satisfy 0 < min <= max <= 20 m/s");
  }
  if (!(cfg.ball_radius_m > 0) || cfg.ball_radius_m > 0.1) {
    throw BoundsError("ball radius outside (0, 0.1]");
  }
}

LaunchSpec sample_launch(const LauncherConfig& cfg, std::uint64_t seed) {
  validate_launcher(cfg);
  Rng rng(seed);
  const double target_x = rng.uniform(cfg.target_x_min_m, cfg.target_x_max_m);
  const double dx = target_x - cfg.launch_x_m;
  const double dz = cfg.catch_height_m - cfg.launch_height_m;
  const double dist2 = dx * dx + cfg.distance_m * cfg.distance_m + dz * dz;
  const double g_eff = kGravity - cfg.spin_accel_z;

  double flight_s = 0.0;
  double speed = 0.0;
  if (std::fabs(g_eff) < 1e-9) {
    speed = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps);
    flight_s = std::sqrt(dist2) / speed;
  } else {
    // |v|^2 = dist2/T^2 + dz*g_eff + g_eff^2*T^2/4; solve for T^2 and take
    // the flat (small-T) root like a ball launcher would.
    const double s_min = std::sqrt(g_eff * (dz + std::sqrt(dist2)));
    if (cfg.speed_max_mps < s_min) {
      throw InfeasibleLaunchError(
          "no ballistic arc reaches target x=" + std::to_string(target_x) +
          " within " + std::to_string(cfg.speed_max_mps) + " m/s (needs " +
          std::to_string(s_min) + " m/s)");
    }
    const double lo = std::max(cfg.speed_min_mps, s_min * (1.0 + 1e-9));
    speed = rng.uniform(lo, cfg.speed_max_mps);
    const double b = 0.25 * g_eff * g_eff;
    const double c = dz * g_eff;
    const double disc = (speed * speed - c) * (speed * speed - c) -
                        4.0 * b * dist2;
    const double u = (speed * speed - c - std::sqrt(std::max(disc, 0.0))) /
                     (2.0 * b);
    flight_s = std::sqrt(u);
  }

  LaunchSpec spec;
  spec.position = {cfg.launch_x_m, cfg.distance_m, cfg.launch_height_m};
  spec.velocity = {dx / flight_s, -cfg.distance_m / flight_s,
                   dz / flight_s + 0.5 * g_eff * flight_s};
  spec.ball_radius_m = cfg.ball_radius_m;
  spec.launch_time_us = 0;
  spec.spin_accel_z = cfg.spin_accel_z;
  return spec;
}

BallisticTrajectory trajectory_from_launch(const LaunchSpec& spec) {
  validate_launch(spec);
  if (!(spec.velocity.y < 0.0) || !(spec.position.y > 0.0)) {
    throw NoImpactError("ball never reaches the camera plane (y velocity " +
                        std::to_string(spec.velocity.y) + ")");
  }
  BallisticTrajectory traj;
  traj.t_start_us = spec.launch_time_us;
  traj.ball_radius_m = spec.ball_radius_m;
  traj.x = {spec.position.x, spec.velocity.x, 0.0};
  traj.y = {spec.position.y, spec.velocity.y, 0.0};
  traj.z = {spec.position.z, spec.velocity.z,
            -0.5 * (kGravity - spec.spin_accel_z)};
  const double flight_s = -spec.position.y / spec.velocity.y;
  traj.t_impact_us =
      spec.launch_time_us + static_cast<TimestampUs>(std::llround(flight_s * 1e6));
  return traj;
}

EventStream synthesize_events(const BallisticTrajectory& traj,
                              const CameraModel& cam, const NoiseSpec& noise,
                              std::uint64_t seed) {
  validate_camera(cam);
  validate_noise(noise);

  Rng ball_rng(mix_seed(seed, 1));
  EventStream stream;
  stream.geometry = cam.geometry;

  // Baseline: the disk as it looks at launch. A static ball emits nothing.
  const TimestampUs t_end_nominal = traj.t_impact_us;
  auto spans_at = [&](TimestampUs t) -> std::optional<std::vector<RowSpan>> {
    const Vec3 p = traj.position_at(t);
    const auto proj = cam.project(p);
    if (!proj || proj->depth <= traj.ball_radius_m) return std::nullopt;
    double uc = proj->u, vc = proj->v;
    if (noise.contour_jitter_px > 0.0) {
      uc += noise.contour_jitter_px * ball_rng.gaussian();
      vc += noise.contour_jitter_px * ball_rng.gaussian();
    }
    const double rho = cam.apparent_radius(proj->depth, traj.ball_radius_m);
    return disk_row_spans(uc, vc, rho, cam.geometry);
  };

  auto prev = spans_at(traj.t_start_us);
  TimestampUs t_prev = traj.t_start_us;
  TimestampUs t_last_emitted = traj.t_start_us;
  for (TimestampUs t = traj.t_start_us + kMicroStepUs;; t += kMicroStepUs) {
    const TimestampUs t_step = std::min(t, t_end_nominal);
    auto cur = spans_at(t_step);
    if (!cur) break;
    if (prev) {
      for (int y = 0; y < cam.geometry.height; ++y) {
        diff_spans(stream.events, (*prev)[y], (*cur)[y], y, t_prev, t_step,
                   ball_rng);
      }
    }
    prev = std::move(cur);
    t_prev = t_step;
    t_last_emitted = t_step;
    if (t_step >= t_end_nominal) break;
  }
  const TimestampUs duration_us =
      std::max<TimestampUs>(t_last_emitted - traj.t_start_us, 0);
  const double duration_s = static_cast<double>(
                                std::max<TimestampUs>(
                                    t_end_nominal - traj.t_start_us, 0)) *
                            1e-6;

  // Spurious per-pixel noise, independent stream.
  if (noise.pixel_rate_hz > 0.0 && duration_us > 0) {
    Rng rng(mix_seed(seed, 2));
    const double expected = noise.pixel_rate_hz *
                            static_cast<double>(cam.geometry.pixel_count()) *
                            duration_s;
    const auto count = static_cast<std::int64_t>(std::llround(expected));
    for (std::int64_t i = 0; i < count; ++i) {
      Event e;
      e.t = traj.t_start_us + rng.uniform_int(0, duration_us);
      e.x = static_cast<int>(rng.uniform_int(0, cam.geometry.width - 1));
      e.y = static_cast<int>(rng.uniform_int(0, cam.geometry.height - 1));
      e.polarity = rng.uniform() < 0.5 ? 1 : -1;
      stream.events.push_back(e);
    }
  }

  // Background clutter: translating rectangular blobs inside the region.
  if (noise.background_rate_hz > 0.0 && duration_us > 0) {
    Rng rng(mix_seed(seed, 3));
    const int rx0 = std::clamp(noise.background_x0, 0, cam.geometry.width - 1);
    const int ry0 = std::clamp(noise.background_y0, 0, cam.geometry.height - 1);
    const int rx1 = std::clamp(noise.background_x1, rx0 + 1, cam.geometry.width);
    const int ry1 = std::clamp(noise.background_y1, ry0 + 1, cam.geometry.height);
    const double rw = rx1 - rx0, rh = ry1 - ry0;

    constexpr int kBlobs = 3;
    std::vector<BackgroundBlob> blobs;
    for (int b = 0; b < kBlobs; ++b) {
      BackgroundBlob blob;
      blob.w = rng.uniform(20.0, std::max(21.0, rw * 0.25));
      blob.h = rng.uniform(20.0, std::max(21.0, rh * 0.25));
      blob.x0 = rng.uniform(0.0, std::max(1.0, rw - blob.w));
      blob.y0 = rng.uniform(0.0, std::max(1.0, rh - blob.h));
      blob.vx = rng.uniform(-150.0, 150.0);
      blob.vy = rng.uniform(-150.0, 150.0);
      blobs.push_back(blob);
    }
    const auto count = static_cast<std::int64_t>(
        std::llround(noise.background_rate_hz * duration_s));
    for (std::int64_t i = 0; i < count; ++i) {
      const TimestampUs t = traj.t_start_us + rng.uniform_int(0, duration_us);
      const double ts = static_cast<double>(t - traj.t_start_us) * 1e-6;
      const BackgroundBlob& blob =
          blobs[static_cast<std::size_t>(rng.uniform_int(0, kBlobs - 1))];
      auto wrap = [](double v, double span) {
        const double m = std::fmod(v, span);
        return m < 0 ? m + span : m;
      };
      const double bx = wrap(blob.x0 + blob.vx * ts, std::max(1.0, rw - blob.w));
      const double by = wrap(blob.y0 + blob.vy * ts, std::max(1.0, rh - blob.h));
      Event e;
      e.x = std::clamp(rx0 + static_cast<int>(bx + rng.uniform(0.0, blob.w)),
                       rx0, rx1 - 1);
      e.y = std::clamp(ry0 + static_cast<int>(by + rng.uniform(0.0, blob.h)),
                       ry0, ry1 - 1);
      e.t = t;
      e.polarity = rng.uniform() < 0.5 ? 1 : -1;
      stream.events.push_back(e);
    }
  }

  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return stream;
}

BallisticTrajectory fit_poly2(std::span<const TimedSample> samples,
                              double ball_radius_m) {
  std::vector<TimestampUs> distinct;
  for (const TimedSample& s : samples) distinct.push_back(s.t_us);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw UnderdeterminedError("quadratic fit needs >= 3 distinct timestamps, got " +
                               std::to_string(distinct.size()));
  }
  const TimestampUs t0 = distinct.front();

  BallisticTrajectory traj;
  traj.t_start_us = t0;
  traj.ball_radius_m = ball_radius_m;

  for (int axis = 0; axis < 3; ++axis) {
    double a[3][4] = {};
    for (const TimedSample& s : samples) {
      const double t = static_cast<double>(s.t_us - t0) * 1e-6;
      const double v =
          axis == 0 ? s.position.x : (axis == 1 ? s.position.y : s.position.z);
      const double pw[3] = {1.0, t, t * t};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) a[r][c] += pw[r] * pw[c];
        a[r][3] += pw[r] * v;
      }
    }
    solve3(a);
    AxisQuadratic q{a[0][3], a[1][3], a[2][3]};
    if (axis == 0) traj.x = q;
    if (axis == 1) traj.y = q;
    if (axis == 2) traj.z = q;
  }

  // Impact = earliest forward crossing of y=0 with the ball approaching.
  const double c2 = traj.y.c2, c1 = traj.y.c1, c0 = traj.y.c0;
  double root = -1.0;
  if (std::fabs(c2) < 1e-9) {
    if (c1 < 0.0) root = -c0 / c1;
  } else {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double cand : {(-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)}) {
        if (cand > 0.0 && traj.y.rate(cand) < 0.0 &&
            (root < 0.0 || cand < root)) {
          root = cand;
        }
      }
    }
  }
  const TimestampUs last_t =
      samples.empty() ? t0 : std::max_element(samples.begin(), samples.end(),
                                              [](auto& a, auto& b) {
                                                return a.t_us < b.t_us;
                                              })
                                 ->t_us;
  traj.t_impact_us =
      root > 0.0 ? t0 + static_cast<TimestampUs>(std::llround(root * 1e6))
                 : last_t;
  return traj;
}

GroundTruth ground_truth_labels(const BallisticTrajectory& traj,
                                TimestampUs frame_period_us) {
  if (frame_period_us <= 0) throw BoundsError("frame period must be positive");
  GroundTruth truth;
  truth.trigger_us = traj.t_start_us;
  truth.impact_time_us = traj.t_impact_us;
  truth.impact_x_m = traj.impact_x();
  truth.impact_z_m = traj.impact_z();
  for (TimestampUs t = traj.t_start_us + frame_period_us; t <= traj.t_impact_us;
       t += frame_period_us) {
    truth.t_us.push_back(t);
    truth.x_m.push_back(traj.x.eval(traj.seconds_from_start(t)));
    truth.ttc_us.push_back(traj.t_impact_us - t);
    truth.positions.push_back(traj.position_at(t));
  }
  return truth;
}

void write_ground_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "t_us,x_m,ttc_us\n";
  char buf[64];
  for (std::size_t i = 0; i < truth.t_us.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%lld",
                  static_cast<long long>(truth.t_us[i]), truth.x_m[i],
                  static_cast<long long>(truth.ttc_us[i]));
    out << buf << '\n';
  }
}

}  // namespace evcatch
