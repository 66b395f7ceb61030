#include "evcatch/actuation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace evcatch {

void validate_rail(const RailSpec& spec) {
  if (!(spec.half_span_m > 0) || !(spec.v_max_mps > 0) ||
      !(spec.a_max_mps2 > 0) || !(spec.j_max_mps3 > 0) ||
      !(spec.net_width_m > 0) || !(spec.net_height_m > 0)) {
    throw BoundsError("rail parameters must be positive");
  }
}

MotionState MotionPlan::sample(double t) const {
  t = std::clamp(t, 0.0, duration_s_);
  double t_prev = 0.0;
  for (int i = 0; i < segment_count_; ++i) {
    const Segment& s = segments_[i];
    if (t <= s.t_end || i == segment_count_ - 1) {
      const double dt = std::min(t, s.t_end) - t_prev;
      MotionState out;
      out.position_m = s.x0 + dt * (s.v0 + dt * (0.5 * s.a0 + dt * s.jerk / 6.0));
      out.velocity_mps = s.v0 + dt * (s.a0 + 0.5 * dt * s.jerk);
      out.accel_mps2 = s.a0 + dt * s.jerk;
      return out;
    }
    t_prev = s.t_end;
  }
  return MotionState{displacement_m_, 0.0, 0.0};
}

MotionPlan plan_move(const RailSpec& spec, double displacement_m) {
  validate_rail(spec);
  const double reach = 2.0 * spec.half_span_m;
  if (std::fabs(displacement_m) > reach + 1e-12) {
    throw ContractError("displacement " + std::to_string(displacement_m) +
                        " m beyond reachable span " + std::to_string(reach) + " m");
  }

  const double d = std::fabs(displacement_m);
  const double sgn = displacement_m < 0 ? -1.0 : 1.0;
  const double j = spec.j_max_mps3;
  const double a = spec.a_max_mps2;
  const double v = spec.v_max_mps;

  double tj = 0.0, th = 0.0, tv = 0.0;
  if (d > 0.0) {
    // Try the pure jerk-bound triangle first, then let accel and velocity
    // caps bind in turn.
    const double tj_c = std::cbrt(d / (2.0 * j));
    bool cruise = false;
    if (j * tj_c <= a && j * tj_c * tj_c <= v) {
      tj = tj_c;
    } else if (j * tj_c > a) {
      tj = a / j;
      // Accel cap binds: d = a*(tj+th)*(2tj+th) when no cruise.
      th = 0.5 * (-3.0 * tj + std::sqrt(tj * tj + 4.0 * d / a));
      if (a * (tj + th) > v) cruise = true;
    } else {
      cruise = true;  // velocity cap binds before accel
    }
    if (cruise) {
      // Shortest ramp to exactly v_max, then cruise.
      if (v * j >= a * a) {
        tj = a / j;
        th = v / a - a / j;
      } else {
        tj = std::sqrt(v / j);
        th = 0.0;
      }
      const double d_acc = v * (2.0 * tj + th) / 2.0;
      tv = (d - 2.0 * d_acc) / v;
    }
  }

  MotionPlan plan;
  plan.displacement_m_ = displacement_m;
  plan.t_jerk_s_ = tj;
  plan.t_hold_s_ = th;
  plan.t_cruise_s_ = tv;
  plan.duration_s_ = 4.0 * tj + 2.0 * th + tv;

  // Build the closed-form segment table.
  const double jerks[7] = {j, 0.0, -j, 0.0, -j, 0.0, j};
  const double durations[7] = {tj, th, tj, tv, tj, th, tj};
  double t_cum = 0.0, x = 0.0, vel = 0.0, acc = 0.0;
  plan.segment_count_ = 0;
  for (int i = 0; i < 7; ++i) {
    const double dt = durations[i];
    if (dt <= 0.0) continue;
    const double jerk = sgn * jerks[i];
    MotionPlan::Segment seg;
    t_cum += dt;
    seg.t_end = t_cum;
    seg.x0 = x;
    seg.v0 = vel;
    seg.a0 = acc;
    seg.jerk = jerk;
    plan.segments_[plan.segment_count_++] = seg;
    x += dt * (vel + dt * (0.5 * acc + dt * jerk / 6.0));
    vel += dt * (acc + 0.5 * dt * jerk);
    acc += dt * jerk;
  }
  plan.duration_s_ = t_cum;
  return plan;
}

MotionTable build_table(const RailSpec& spec, double spacing_m) {
  validate_rail(spec);
  if (!(spacing_m > 0)) throw BoundsError("table spacing must be positive");
  MotionTable table;
  table.spacing_m = spacing_m;
  const int steps = static_cast<int>(std::floor(spec.half_span_m / spacing_m + 1e-9));
  for (int k = -steps; k <= steps; ++k) {
    table.targets_m.push_back(k * spacing_m);
  }
  for (double target : table.targets_m) {
    table.plans.push_back(plan_move(spec, target));
  }
  return table;
}

int select_command(const MotionTable& table, double x_impact_m) {
  if (table.targets_m.empty()) throw ContractError("empty motion table");
  const double x = std::clamp(x_impact_m, table.targets_m.front(),
                              table.targets_m.back());
  int best = 0;
  double best_dist = std::fabs(x - table.targets_m[0]);
  for (int i = 1; i < static_cast<int>(table.targets_m.size()); ++i) {
    const double dist = std::fabs(x - table.targets_m[i]);
    if (dist < best_dist - 1e-12) {
      best = i;
      best_dist = dist;
    } else if (dist < best_dist + 1e-12 &&
               std::fabs(table.targets_m[i]) <
                   std::fabs(table.targets_m[best]) - 1e-12) {
      best = i;  // tie toward center
      best_dist = dist;
    }
  }
  return best;
}

CatchOutcome catch_outcome(double net_center_x_m, double ball_impact_x_m,
                           double ball_impact_z_m, const RailSpec& spec) {
  if (std::fabs(ball_impact_x_m - net_center_x_m) >
      0.5 * spec.net_width_m + 1e-12) {
    return CatchOutcome::missed_x;
  }
  if (std::fabs(ball_impact_z_m - spec.net_center_z_m) >
      0.5 * spec.net_height_m + 1e-12) {
    return CatchOutcome::missed_z;
  }
  return CatchOutcome::caught;
}

void write_motion_table_csv(std::ostream& out, const MotionTable& table) {
  out << "index,target_m,duration_s\n";
  char buf[64];
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g", i, table.targets_m[i],
                  table.plans[i].duration_s());
    out << buf << '\n';
  }
}

}  // namespace evcatch
