#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "evcatch/errors.hpp"

namespace evcatch {

// Linear rail with a net, jerk-limited motion. Defaults follow the reference
// actuator: 600 mm span, 10 m/s, 50 m/s^2, +/-1300 m/s^3, 240 x 400 mm net.
struct RailSpec {
  double half_span_m = 0.300;
  double v_max_mps = 10.0;
  double a_max_mps2 = 50.0;
  double j_max_mps3 = 1300.0;
  double net_width_m = 0.240;
  double net_height_m = 0.400;
  double net_center_z_m = 0.5;  // vertical center of the net opening
};

void validate_rail(const RailSpec& spec);

struct MotionState {
  double position_m = 0.0;
  double velocity_mps = 0.0;
  double accel_mps2 = 0.0;
};

// Minimum-time rest-to-rest S-curve honoring the jerk/accel/velocity caps.
// Seven phases (jerk, hold, jerk, cruise, jerk, hold, jerk); hold and cruise
// can degenerate to zero when their cap does not bind.
class MotionPlan {
 public:
  MotionPlan() = default;

  double displacement_m() const { return displacement_m_; }
  double duration_s() const { return duration_s_; }
  double t_jerk_s() const { return t_jerk_s_; }
  double t_hold_s() const { return t_hold_s_; }
  double t_cruise_s() const { return t_cruise_s_; }

  // Closed-form state at time t (clamped to [0, duration]).
  MotionState sample(double t) const;

 private:
  friend MotionPlan plan_move(const RailSpec& spec, double displacement_m);

  double displacement_m_ = 0.0;
  double t_jerk_s_ = 0.0;
  double t_hold_s_ = 0.0;
  double t_cruise_s_ = 0.0;
  double duration_s_ = 0.0;

  struct Segment {
    double t_end;  // cumulative time at segment end
    double x0, v0, a0, jerk;
  };
  std::array<Segment, 7> segments_{};
  int segment_count_ = 0;
};

MotionPlan plan_move(const RailSpec& spec, double displacement_m);

// Position-command lookup table at fixed spacing, symmetric about center.
struct MotionTable {
  std::vector<double> targets_m;  // ascending, includes 0
  std::vector<MotionPlan> plans;
  double spacing_m = 0.1;

  std::size_t size() const { return targets_m.size(); }
};

MotionTable build_table(const RailSpec& spec, double spacing_m);

// Nearest table entry to the clamped impact estimate; ties go to the entry
// closer to center.
int select_command(const MotionTable& table, double x_impact_m);

enum class CatchOutcome { caught, missed_x, missed_z };

// Boundary-inclusive: a ball on the rim still counts.
CatchOutcome catch_outcome(double net_center_x_m, double ball_impact_x_m,
                           double ball_impact_z_m, const RailSpec& spec);

// CSV export: `index,target_m,duration_s`.
void write_motion_table_csv(std::ostream& out, const MotionTable& table);

}  // namespace evcatch
