#pragma once

#include <iosfwd>
#include <optional>

#include "evcatch/actuation.hpp"
#include "evcatch/episode.hpp"
#include "evcatch/metrics.hpp"
#include "evcatch/predictor.hpp"

namespace evcatch {

struct WorldConfig {
  LauncherConfig launcher;
  CameraModel camera;
  NoiseSpec noise;
};

// Returns fire=true when the command decision should be taken: hardware
// trigger fires at launch detection, the TTC trigger fires once the last
// predicted TTC falls to or below the threshold (inclusive).
bool trigger_decision(TriggerMode mode,
                      std::span<const FramePrediction> predictions,
                      const PipelineConfig& cfg);

// One launch -> perceive -> command -> move -> outcome cycle.
//
// Hardware mode: frames accumulate from the trigger for batch_size periods,
// one batched inference at its modeled latency, then fit and a single-shot
// rail command. TTC mode: inference runs every frame (one batch latency per
// frame, pipelined) until the last predicted TTC is inside the threshold,
// then fit over everything so far. In both modes the command must be issued
// no later than (impact time - plan duration) or the episode is a deadline
// miss.
EpisodeResult run_episode(const LaunchSpec& launch, const WorldConfig& world,
                          const PredictorConfig& predictor_cfg,
                          const RailSpec& rail, const MotionTable& table,
                          const PipelineConfig& pipe, int episode_index = 0,
                          std::uint64_t seed = 0,
                          bool random_command = false,
                          std::vector<TraceRow>* trace = nullptr,
                          GroundTruth* truth_out = nullptr);

struct CampaignConfig {
  int episodes = 120;
  std::uint64_t seed = 7;
  bool random_command = false;  // baseline: ignore predictions entirely
  LauncherConfig launcher;
  CameraModel camera;
  NoiseSpec noise;
  PredictorConfig predictor;
  RailSpec rail;
  double table_spacing_m = 0.1;
  PipelineConfig pipeline;
  TimestampUs metrics_deadline_us = 160000;
};

struct CampaignReport {
  std::vector<EpisodeResult> episodes;
  std::vector<GroundTruth> truths;
  MetricsReport metrics;
};

// Deterministic per seed; episode i draws its launch and noise from
// episode_seed(config.seed, i).
CampaignReport run_campaign(const CampaignConfig& config);

// Writers for the campaign artifacts.
void write_episode_csv(std::ostream& out,
                       std::span<const EpisodeResult> episodes);
void write_campaign_predictions_csv(std::ostream& out,
                                    std::span<const EpisodeResult> episodes,
                                    std::span<const GroundTruth> truths);
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

// Round-trip readers used by the `metrics` subcommand.
struct PredictionRecord {
  int episode = 0;
  FramePrediction prediction;
  double d_true_m = 0.0;
  double ttc_true_us = 0.0;
};
std::vector<EpisodeResult> read_episode_csv(std::istream& in);
std::vector<PredictionRecord> read_campaign_predictions_csv(std::istream& in);

// Rebuilds a MetricsReport from previously written campaign CSV files.
MetricsReport metrics_from_csv(std::span<const EpisodeResult> episodes,
                               std::span<const PredictionRecord> predictions,
                               TimestampUs deadline_us = 160000);

}  // namespace evcatch
