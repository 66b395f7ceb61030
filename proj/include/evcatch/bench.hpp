#pragma once

#include <cstdint>
#include <vector>

#include "evcatch/events.hpp"

namespace evcatch {

struct ScalingPoint {
  std::size_t events = 0;
  double seconds_per_update = 0.0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  double fitted_exponent = 0.0;  // log-log slope of cost vs batch size
};

// Times behi_update over batches of random events spanning 1e2..1e6 events
// and fits the cost exponent; linear scaling in the batch size is the
// contract under test.
ScalingResult bench_behi_update_scaling(const SensorGeometry& geometry,
                                        std::uint64_t seed);

struct FrameCycleResult {
  double behi_update_us_mean = 0.0;
  double behi_update_us_max = 0.0;
  double estimator_push_us_mean = 0.0;
  double total_us_mean = 0.0;
  double total_us_max = 0.0;
  std::size_t events_per_frame = 0;
  int frames = 0;
};

// One perception step: update a full-resolution image with a frame's worth
// of events and push one observation into the estimator. The whole step has
// to fit comfortably inside the frame period.
FrameCycleResult bench_frame_cycle(const SensorGeometry& geometry,
                                   std::size_t events_per_frame, int frames,
                                   std::uint64_t seed);

}  // namespace evcatch
