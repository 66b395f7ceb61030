#pragma once

#include <iosfwd>
#include <span>

#include "evcatch/events.hpp"

namespace evcatch {

// Per-frame output of the prediction stage and input of the motion
// estimator: world-frame x location with its standard deviation, and the
// predicted time-to-collision measured from the frame timestamp.
struct FramePrediction {
  TimestampUs t_us = 0;
  double d_m = 0.0;
  double sigma_m = 1.0;   // > 0
  double ttc_us = 0.0;    // >= 0
};

// CSV export: `t_us,d_m,sigma_m,ttc_us`.
void write_prediction_csv(std::ostream& out,
                          std::span<const FramePrediction> predictions);

}  // namespace evcatch
