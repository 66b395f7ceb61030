#include "evcatch/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "evcatch/estimator.hpp"
#include "evcatch/representations.hpp"
#include "evcatch/rng.hpp"

namespace evcatch {

namespace {

using Clock = std::chrono::steady_clock;

EventStream random_batch(const SensorGeometry& g, std::size_t count,
                         TimestampUs t0, TimestampUs t1, Rng& rng) {
  EventStream s;
  s.geometry = g;
  s.events.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Event e;
    e.x = static_cast<int>(rng.uniform_int(0, g.width - 1));
    e.y = static_cast<int>(rng.uniform_int(0, g.height - 1));
    e.t = t0 + static_cast<TimestampUs>(
                   (t1 - 1 - t0) * static_cast<double>(i) /
                   static_cast<double>(std::max<std::size_t>(count, 2) - 1));
    e.polarity = rng.uniform() < 0.5 ? 1 : -1;
    s.events.push_back(e);
  }
  return s;
}

}  // namespace

ScalingResult bench_behi_update_scaling(const SensorGeometry& geometry,
                                        std::uint64_t seed) {
  Rng rng(seed);
  ScalingResult result;
  const std::size_t sizes[] = {100, 1000, 10000, 100000, 1000000};
  constexpr TimestampUs kPeriod = 10000;

  for (std::size_t n : sizes) {
    // A long stream of advancing-window updates on one image, the same
    // pattern the pipeline uses; no allocations inside the timed loop.
    const int reps = static_cast<int>(
        std::clamp<std::size_t>(2000000 / n, 3, 20000));
    std::vector<EventStream> batches;
    batches.reserve(reps);
    for (int k = 0; k < reps; ++k) {
      batches.push_back(
          random_batch(geometry, n, k * kPeriod, (k + 1) * kPeriod, rng));
    }

    double best = 1e300;
    for (int round = 0; round < 3; ++round) {
      Behi image(geometry, 0);
      const auto start = Clock::now();
      for (int k = 0; k < reps; ++k) {
        image = behi_update(std::move(image), batches[k], (k + 1) * kPeriod);
      }
      const auto stop = Clock::now();
      if (image.bytes().empty()) std::abort();  // keep the optimizer honest
      const double per_update =
          std::chrono::duration<double>(stop - start).count() / reps;
      best = std::min(best, per_update);
    }
    result.points.push_back(ScalingPoint{n, best});
  }

  // Log-log least squares over the measured points.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(result.points.size());
  for (const ScalingPoint& p : result.points) {
    const double lx = std::log(static_cast<double>(p.events));
    const double ly = std::log(p.seconds_per_update);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  result.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return result;
}

FrameCycleResult bench_frame_cycle(const SensorGeometry& geometry,
                                   std::size_t events_per_frame, int frames,
                                   std::uint64_t seed) {
  Rng rng(seed);
  FrameCycleResult result;
  result.events_per_frame = events_per_frame;
  result.frames = frames;

  std::vector<EventStream> batches;
  for (int b = 0; b < 16; ++b) {
    batches.push_back(random_batch(geometry, events_per_frame, 0, 1, rng));
  }

  Behi image(geometry, 0);
  WlsState state;
  double update_sum = 0, push_sum = 0, total_max = 0, update_max = 0;
  for (int k = 1; k <= frames; ++k) {
    EventStream& batch = batches[k % batches.size()];
    for (Event& e : batch.events) e.t = image.horizon();  // stay in window

    const auto t0 = Clock::now();
    image = behi_update(std::move(image), batch,
                        image.horizon() + 10000);
    const auto t1 = Clock::now();
    FramePrediction obs;
    obs.t_us = k * 10000;
    obs.d_m = rng.uniform(-0.3, 0.3);
    obs.sigma_m = 0.01;
    obs.ttc_us = 1e5;
    state.push(obs);
    const auto t2 = Clock::now();

    const double update_us =
        std::chrono::duration<double, std::micro>(t1 - t0).count();
    const double push_us =
        std::chrono::duration<double, std::micro>(t2 - t1).count();
    update_sum += update_us;
    push_sum += push_us;
    update_max = std::max(update_max, update_us);
    total_max = std::max(total_max, update_us + push_us);
  }
  result.behi_update_us_mean = update_sum / frames;
  result.behi_update_us_max = update_max;
  result.estimator_push_us_mean = push_sum / frames;
  result.total_us_mean = (update_sum + push_sum) / frames;
  result.total_us_max = total_max;
  return result;
}

}  // namespace evcatch
