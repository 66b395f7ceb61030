#pragma once

#include <span>
#include <vector>

#include "evcatch/episode.hpp"
#include "evcatch/scene.hpp"

namespace evcatch {

// Mean absolute difference.
double loss_l1(std::span<const double> pred, std::span<const double> truth);

// Negative log-likelihood in the form (1/2n) * sum[log(sigma) + (r/sigma)^2]
// with the constant dropped. Note the 1/2 factor spans both terms, so the
// per-term minimizer over sigma sits at sigma^2 = 2 r^2; the textbook
// Gaussian NLL (log sigma with unit coefficient) has its minimum at
// sigma^2 = r^2 instead. nll_minimizing_sigma() follows the implemented form.
double loss_nll(std::span<const double> d, std::span<const double> sigma,
                std::span<const double> d_hat);

// Closed-form sigma minimizing loss_nll for the given residuals:
// sqrt(2 * mean(r^2)).
double nll_minimizing_sigma(std::span<const double> residuals);

// pos + time + lambda * nll.
double loss_combined(double pos_loss, double time_loss, double nll,
                     double lambda = 0.1);

struct MetricStat {
  double mae = 0.0;
  double std_dev = 0.0;  // population std of the absolute errors
  std::int64_t n = 0;
};

struct BucketRate {
  double lo_m = 0.0;
  double hi_m = 0.0;
  int episodes = 0;
  int caught = 0;

  double rate() const { return episodes ? static_cast<double>(caught) / episodes : 0.0; }
};

// Units follow the report headers: positions in mm, times in ms.
struct MetricsReport {
  MetricStat frame_position_mm;
  MetricStat frame_ttc_ms;
  MetricStat impact_position_mm;
  MetricStat collision_time_ms;
  MetricStat impact_equal_weight_mm;  // same episodes, uncertainty ignored
  double success_rate = 0.0;
  std::vector<BucketRate> buckets;  // 100 mm impact-location buckets
  int episodes = 0;
  int caught = 0;
  int missed_x = 0, missed_z = 0, missed_deadline = 0, missed_no_perception = 0;
};

// Per-frame metrics use only frames before the decision deadline
// (measured from the trigger); per-trajectory metrics use the final
// impact estimate and mean projected collision time.
MetricsReport compute_metrics(std::span<const EpisodeResult> episodes,
                              std::span<const GroundTruth> truths,
                              TimestampUs deadline_us = 160000,
                              double bucket_width_m = 0.1);

}  // namespace evcatch
