#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "evcatch/events.hpp"

namespace evcatch {

inline constexpr double kGravity = 9.81;  // m/s^2

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

// World frame: the camera/rail plane is y=0, the rail runs along x, gravity
// acts along -z. Balls launch from y>0 and fly toward the plane.
struct LaunchSpec {
  Vec3 position;        // meters
  Vec3 velocity;        // m/s, velocity.y < 0 for a shot toward the plane
  double ball_radius_m = 0.02;
  TimestampUs launch_time_us = 0;
  double spin_accel_z = 0.0;  // spin-induced lift, m/s^2, acts against gravity
};

void validate_launch(const LaunchSpec& spec);

struct AxisQuadratic {
  double c0 = 0, c1 = 0, c2 = 0;  // c0 + c1*t + c2*t^2, t in seconds

  double eval(double t) const { return c0 + t * (c1 + t * c2); }
  double rate(double t) const { return c1 + 2.0 * c2 * t; }
};

// Closed-form flight of one launch. Time arguments to the axis polynomials
// are seconds since t_start_us; x is exactly affine in t.
struct BallisticTrajectory {
  AxisQuadratic x, y, z;
  TimestampUs t_start_us = 0;
  TimestampUs t_impact_us = 0;  // ball center crosses the y=0 plane
  double ball_radius_m = 0.02;

  double seconds_from_start(TimestampUs t) const {
    return static_cast<double>(t - t_start_us) * 1e-6;
  }
  Vec3 position_at(TimestampUs t) const {
    const double s = seconds_from_start(t);
    return {x.eval(s), y.eval(s), z.eval(s)};
  }
  double impact_x() const { return x.eval(seconds_from_start(t_impact_us)); }
  double impact_z() const { return z.eval(seconds_from_start(t_impact_us)); }
  double flight_seconds() const {
    return seconds_from_start(t_impact_us);
  }
};

// Pinhole camera embedded in the y=0 plane looking along +y toward the
// launcher. Image u grows with world x, image v grows downward (against z).
struct CameraModel {
  double focal_px = 320.0;
  double cx = 320.0;
  double cy = 240.0;
  SensorGeometry geometry{640, 480};
  Vec3 position{0.0, 0.0, 0.5};

  struct Projection {
    double u = 0, v = 0, depth = 0;
  };

  // Empty when the point is on or behind the camera plane.
  std::optional<Projection> project(const Vec3& p) const {
    const double depth = p.y - position.y;
    if (depth <= 0.0) return std::nullopt;
    return Projection{cx + focal_px * (p.x - position.x) / depth,
                      cy + focal_px * (position.z - p.z) / depth, depth};
  }
  double apparent_radius(double depth, double ball_radius) const {
    return focal_px * ball_radius / depth;
  }
};

void validate_camera(const CameraModel& cam);

struct NoiseSpec {
  double pixel_rate_hz = 0.0;        // spurious events per pixel per second
  double contour_jitter_px = 0.0;    // std of per-step disk center jitter
  double background_rate_hz = 0.0;   // clutter events per second
  int background_x0 = 0, background_y0 = 0;
  int background_x1 = 640, background_y1 = 480;
};

void validate_noise(const NoiseSpec& spec);

// Per-frame labels equivalent to a motion-capture pipeline: world x and
// time-to-collision at each frame boundary until impact.
struct GroundTruth {
  TimestampUs trigger_us = 0;
  std::vector<TimestampUs> t_us;
  std::vector<double> x_m;
  std::vector<TimestampUs> ttc_us;
  std::vector<Vec3> positions;
  double impact_x_m = 0;
  double impact_z_m = 0;
  TimestampUs impact_time_us = 0;
};

// Launcher/campaign geometry; defaults reproduce the fastest-flight regime
// of roughly 310 ms at full speed.
struct LauncherConfig {
  double distance_m = 4.0;      // launcher to camera plane
  double launch_x_m = 0.0;
  double launch_height_m = 0.5;
  double catch_height_m = 0.5;  // aimed arrival height at the plane
  double target_x_min_m = -0.3;
  double target_x_max_m = 0.3;
  double speed_min_mps = 5.0;
  double speed_max_mps = 13.0;
  double ball_radius_m = 0.02;
  double spin_accel_z = 0.0;
};

void validate_launcher(const LauncherConfig& cfg);

// Deterministic per seed. The sampled arc arrives exactly at the drawn
// target x at catch height; speeds below the ballistic minimum for the drawn
// target are clamped up to it. Throws InfeasibleLaunchError when even the
// maximum speed cannot reach the target.
LaunchSpec sample_launch(const LauncherConfig& cfg, std::uint64_t seed);

BallisticTrajectory trajectory_from_launch(const LaunchSpec& spec);

// Contour-change event model: the projected ball disk is rendered at 1 ms
// micro-steps; pixels that switch between covered/uncovered emit one event
// (+ newly covered, - newly uncovered) at a uniformly drawn time inside the
// step. Clutter events are appended from independent RNG streams and the
// stream is re-sorted by time.
EventStream synthesize_events(const BallisticTrajectory& traj,
                              const CameraModel& cam, const NoiseSpec& noise,
                              std::uint64_t seed);

struct TimedSample {
  TimestampUs t_us = 0;
  Vec3 position;
};

// Least-squares quadratic per axis over possibly gappy samples; needs at
// least 3 distinct timestamps.
BallisticTrajectory fit_poly2(std::span<const TimedSample> samples,
                              double ball_radius_m = 0.02);

GroundTruth ground_truth_labels(const BallisticTrajectory& traj,
                                TimestampUs frame_period_us);

// CSV export: `t_us,x_m,ttc_us`.
void write_ground_truth_csv(std::ostream& out, const GroundTruth& truth);

}  // namespace evcatch
