#pragma once

#include <string>
#include <vector>

#include "evcatch/prediction.hpp"

namespace evcatch {

enum class TriggerMode { hardware, ttc_threshold };

// Timing model of the perception-action loop. Latencies are fixed costs so
// episodes are reproducible; a separate bench command measures real encoder
// and estimator throughput on the host.
struct PipelineConfig {
  TimestampUs frame_period_us = 10000;
  int batch_size = 12;
  TimestampUs inference_latency_us = 20000;  // per batched inference call
  TimestampUs perception_budget_us = 150000;
  TriggerMode trigger = TriggerMode::hardware;
  TimestampUs ttc_threshold_us = 210000;
  TimestampUs overhead_latency_us = 1000;  // estimation + command selection
  bool use_uncertainty = true;
};

void validate_pipeline_config(const PipelineConfig& cfg);

struct LatencyLedger {
  TimestampUs accumulation_us = 0;
  TimestampUs inference_us = 0;
  TimestampUs estimation_us = 0;

  TimestampUs total_us() const {
    return accumulation_us + inference_us + estimation_us;
  }
};

enum class EpisodeOutcome {
  caught,
  missed_x,
  missed_z,
  missed_deadline,
  missed_no_perception,
};

std::string to_string(EpisodeOutcome outcome);
EpisodeOutcome episode_outcome_from_string(const std::string& s);

// Full timeline of one launch.
struct EpisodeResult {
  int index = 0;
  std::uint64_t seed = 0;

  TimestampUs trigger_us = 0;
  TimestampUs frame_period_us = 10000;
  TimestampUs impact_time_us = 0;
  double impact_x_true_m = 0.0;
  double impact_z_true_m = 0.0;

  int frames_processed = 0;
  std::vector<FramePrediction> predictions;

  bool command_issued = false;
  TimestampUs command_time_us = 0;
  int table_index = -1;
  double table_target_m = 0.0;
  double plan_duration_s = 0.0;
  TimestampUs rail_arrival_us = 0;

  bool have_estimate = false;
  double x_impact_m = 0.0;             // inverse-variance weighted
  double x_impact_equal_weight_m = 0.0;
  TimestampUs t_bar_abs_us = 0;

  EpisodeOutcome outcome = EpisodeOutcome::missed_no_perception;
  LatencyLedger ledger;
};

struct TraceRow {
  TimestampUs t_us = 0;
  std::string stage;
  std::string detail;
};

}  // namespace evcatch
