#include "evcatch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "evcatch/estimator.hpp"
#include "evcatch/representations.hpp"
#include "evcatch/rng.hpp"

namespace evcatch {

namespace {

void trace_add(std::vector<TraceRow>* trace, TimestampUs t, const char* stage,
               std::string detail) {
  if (trace) trace->push_back(TraceRow{t, stage, std::move(detail)});
}

std::string fmt(const char* format, ...) {
  char buf[160];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

}  // namespace

void validate_pipeline_config(const PipelineConfig& cfg) {
  if (cfg.frame_period_us <= 0 || cfg.inference_latency_us <= 0 ||
      cfg.perception_budget_us <= 0 || cfg.ttc_threshold_us <= 0) {
    throw BoundsError("pipeline durations must be positive");
  }
  if (cfg.overhead_latency_us < 0) {
    throw BoundsError("overhead latency must be non-negative");
  }
  if (cfg.batch_size < 1) throw BoundsError("batch size must be >= 1");
}

std::string to_string(EpisodeOutcome outcome) {
  switch (outcome) {
    case EpisodeOutcome::caught: return "caught";
    case EpisodeOutcome::missed_x: return "missed_x";
    case EpisodeOutcome::missed_z: return "missed_z";
    case EpisodeOutcome::missed_deadline: return "missed_deadline";
    case EpisodeOutcome::missed_no_perception: return "missed_no_perception";
  }
  return "unknown";
}

EpisodeOutcome episode_outcome_from_string(const std::string& s) {
  if (s == "caught") return EpisodeOutcome::caught;
  if (s == "missed_x") return EpisodeOutcome::missed_x;
  if (s == "missed_z") return EpisodeOutcome::missed_z;
  if (s == "missed_deadline") return EpisodeOutcome::missed_deadline;
  if (s == "missed_no_perception") return EpisodeOutcome::missed_no_perception;
  throw ParseError("unknown outcome '" + s + "'", 0);
}

bool trigger_decision(TriggerMode mode,
                      std::span<const FramePrediction> predictions,
                      const PipelineConfig& cfg) {
  if (mode == TriggerMode::hardware) return true;
  if (predictions.empty()) {
    throw ContractError("TTC trigger decision needs at least one prediction");
  }
  return predictions.back().ttc_us <=
         static_cast<double>(cfg.ttc_threshold_us);
}

EpisodeResult run_episode(const LaunchSpec& launch, const WorldConfig& world,
                          const PredictorConfig& predictor_cfg,
                          const RailSpec& rail, const MotionTable& table,
                          const PipelineConfig& pipe, int episode_index,
                          std::uint64_t seed, bool random_command,
                          std::vector<TraceRow>* trace,
                          GroundTruth* truth_out) {
  validate_pipeline_config(pipe);
  validate_rail(rail);

  const BallisticTrajectory traj = trajectory_from_launch(launch);
  const GroundTruth truth = ground_truth_labels(traj, pipe.frame_period_us);
  if (truth_out) *truth_out = truth;

  EpisodeResult ep;
  ep.index = episode_index;
  ep.seed = seed;
  ep.trigger_us = launch.launch_time_us;
  ep.frame_period_us = pipe.frame_period_us;
  ep.impact_time_us = traj.t_impact_us;
  ep.impact_x_true_m = traj.impact_x();
  ep.impact_z_true_m = traj.impact_z();

  const EventStream events =
      synthesize_events(traj, world.camera, world.noise, mix_seed(seed, 5));

  PredictorConfig per_episode_cfg = predictor_cfg;
  per_episode_cfg.seed = mix_seed(predictor_cfg.seed, seed);
  const Predictor predictor(per_episode_cfg);
  const bool analytic = per_episode_cfg.kind == PredictorKind::analytic;

  trace_add(trace, ep.trigger_us, "trigger",
            pipe.trigger == TriggerMode::hardware ? "hardware" : "launch");

  // Frame loop: hardware mode accumulates a fixed batch, TTC mode runs until
  // the trigger decision fires or the ball lands.
  const int max_frames =
      pipe.trigger == TriggerMode::hardware
          ? pipe.batch_size
          : static_cast<int>(truth.t_us.size());

  Behi image(world.camera.geometry, ep.trigger_us);
  Behi prev_image = image;
  FrameHistory history;
  std::size_t cursor = 0;
  int fired_frame = -1;

  for (int k = 1; k <= max_frames; ++k) {
    const TimestampUs horizon = ep.trigger_us + k * pipe.frame_period_us;
    EventStream slice;
    slice.geometry = world.camera.geometry;
    while (cursor < events.events.size() &&
           events.events[cursor].t < horizon) {
      if (events.events[cursor].t >= image.horizon()) {
        slice.events.push_back(events.events[cursor]);
      }
      ++cursor;
    }
    if (analytic) prev_image = image;
    image = behi_update(std::move(image), slice, horizon);
    ep.frames_processed = k;
    trace_add(trace, horizon, "frame",
              fmt("k=%d events=%zu", k, slice.events.size()));

    const auto pred =
        predictor.predict(image, analytic ? &prev_image : nullptr,
                          world.camera, history, &truth, k, horizon);
    if (pred) {
      ep.predictions.push_back(*pred);
      trace_add(trace, horizon, "prediction",
                fmt("d=%.6g sigma=%.6g ttc_ms=%.6g", pred->d_m, pred->sigma_m,
                    pred->ttc_us * 1e-3));
      if (pipe.trigger == TriggerMode::ttc_threshold &&
          trigger_decision(pipe.trigger, ep.predictions, pipe)) {
        fired_frame = k;
        trace_add(trace, horizon, "fire",
                  fmt("ttc_ms=%.6g <= %.6g", pred->ttc_us * 1e-3,
                      static_cast<double>(pipe.ttc_threshold_us) * 1e-3));
        break;
      }
    }
  }

  // Fit both weighted and equal-weight estimates over the same predictions.
  if (!ep.predictions.empty()) {
    WlsState weighted, equal;
    for (const FramePrediction& p : ep.predictions) {
      weighted.push(p);
      FramePrediction flat = p;
      flat.sigma_m = 1.0;
      equal.push(flat);
    }
    try {
      const ImpactEstimate est_w = weighted.fit();
      const ImpactEstimate est_e = equal.fit();
      ep.have_estimate = true;
      ep.x_impact_m = est_w.x_impact_m;
      ep.x_impact_equal_weight_m = est_e.x_impact_m;
      ep.t_bar_abs_us = est_w.t_bar_abs_us();
      trace_add(trace, ep.predictions.back().t_us, "fit",
                fmt("N=%d x_impact=%.6g t_bar_ms=%.6g", weighted.count(),
                    est_w.x_impact_m,
                    static_cast<double>(est_w.t_bar_abs_us() - ep.trigger_us) *
                        1e-3));
    } catch (const Error& e) {
      ep.have_estimate = false;  // fall back to the center command
      trace_add(trace, ep.predictions.back().t_us, "fit",
                std::string("degenerate: ") + e.what());
    }
  }

  const bool can_command =
      pipe.trigger == TriggerMode::hardware
          ? !ep.predictions.empty()
          : fired_frame > 0;
  if (!can_command) {
    ep.outcome = ep.predictions.empty() ? EpisodeOutcome::missed_no_perception
                                        : EpisodeOutcome::missed_deadline;
    trace_add(trace, ep.impact_time_us, "impact",
              fmt("x=%.6g", ep.impact_x_true_m));
    trace_add(trace, ep.impact_time_us, "outcome", to_string(ep.outcome));
    return ep;
  }

  const TimestampUs accumulation =
      (pipe.trigger == TriggerMode::hardware ? pipe.batch_size : fired_frame) *
      pipe.frame_period_us;
  ep.ledger = LatencyLedger{accumulation, pipe.inference_latency_us,
                            pipe.overhead_latency_us};
  ep.command_time_us = ep.trigger_us + ep.ledger.total_us();
  trace_add(trace, ep.trigger_us + accumulation + pipe.inference_latency_us,
            "inference_done", fmt("frames=%d", ep.frames_processed));

  const double x_command =
      ep.have_estimate
          ? (pipe.use_uncertainty ? ep.x_impact_m : ep.x_impact_equal_weight_m)
          : 0.0;
  if (random_command) {
    Rng rng(mix_seed(seed, 9));
    ep.table_index = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(table.size()) - 1));
  } else {
    ep.table_index = select_command(table, x_command);
  }
  ep.table_target_m = table.targets_m[ep.table_index];
  const MotionPlan& plan = table.plans[ep.table_index];
  ep.plan_duration_s = plan.duration_s();
  ep.command_issued = true;
  ep.rail_arrival_us =
      ep.command_time_us +
      static_cast<TimestampUs>(std::llround(plan.duration_s() * 1e6));
  trace_add(trace, ep.command_time_us, "command",
            fmt("index=%d target=%.6g budget_used_us=%lld of %lld",
                ep.table_index, ep.table_target_m,
                static_cast<long long>(ep.ledger.total_us()),
                static_cast<long long>(pipe.perception_budget_us)));
  trace_add(trace, ep.rail_arrival_us, "rail_arrival",
            fmt("duration_ms=%.6g", plan.duration_s() * 1e3));

  if (ep.rail_arrival_us > ep.impact_time_us) {
    ep.outcome = EpisodeOutcome::missed_deadline;
  } else {
    switch (catch_outcome(ep.table_target_m, ep.impact_x_true_m,
                          ep.impact_z_true_m, rail)) {
      case CatchOutcome::caught: ep.outcome = EpisodeOutcome::caught; break;
      case CatchOutcome::missed_x: ep.outcome = EpisodeOutcome::missed_x; break;
      case CatchOutcome::missed_z: ep.outcome = EpisodeOutcome::missed_z; break;
    }
  }
  trace_add(trace, ep.impact_time_us, "impact", fmt("x=%.6g", ep.impact_x_true_m));
  trace_add(trace, ep.impact_time_us, "outcome", to_string(ep.outcome));
  return ep;
}

CampaignReport run_campaign(const CampaignConfig& config) {
  if (config.episodes < 1) throw BoundsError("campaign needs >= 1 episode");
  const MotionTable table = build_table(config.rail, config.table_spacing_m);
  const WorldConfig world{config.launcher, config.camera, config.noise};

  CampaignReport report;
  report.episodes.reserve(config.episodes);
  report.truths.reserve(config.episodes);
  for (int i = 0; i < config.episodes; ++i) {
    const std::uint64_t seed = episode_seed(config.seed, i);
    const LaunchSpec launch = sample_launch(config.launcher, seed);
    GroundTruth truth;
    report.episodes.push_back(run_episode(
        launch, world, config.predictor, config.rail, table, config.pipeline,
        i, seed, config.random_command, nullptr, &truth));
    report.truths.push_back(std::move(truth));
  }
  report.metrics = compute_metrics(report.episodes, report.truths,
                                   config.metrics_deadline_us);
  return report;
}

namespace {
constexpr const char* kEpisodeHeader =
    "index,seed,trigger_us,frame_period_us,impact_time_us,impact_x_true_m,"
    "impact_z_true_m,frames,n_predictions,command_issued,command_time_us,"
    "table_index,table_target_m,plan_duration_s,rail_arrival_us,have_estimate,"
    "x_impact_m,x_impact_equal_weight_m,t_bar_abs_us,outcome,"
    "accumulation_us,inference_us,estimation_us";
}

void write_episode_csv(std::ostream& out,
                       std::span<const EpisodeResult> episodes) {
  out << kEpisodeHeader << '\n';
  char buf[512];
  for (const EpisodeResult& ep : episodes) {
    std::snprintf(
        buf, sizeof(buf),
        "%d,%llu,%lld,%lld,%lld,%.9g,%.9g,%d,%zu,%d,%lld,%d,%.9g,%.9g,%lld,"
        "%d,%.9g,%.9g,%lld,%s,%lld,%lld,%lld",
        ep.index, static_cast<unsigned long long>(ep.seed),
        static_cast<long long>(ep.trigger_us),
        static_cast<long long>(ep.frame_period_us),
        static_cast<long long>(ep.impact_time_us), ep.impact_x_true_m,
        ep.impact_z_true_m, ep.frames_processed, ep.predictions.size(),
        ep.command_issued ? 1 : 0, static_cast<long long>(ep.command_time_us),
        ep.table_index, ep.table_target_m, ep.plan_duration_s,
        static_cast<long long>(ep.rail_arrival_us), ep.have_estimate ? 1 : 0,
        ep.x_impact_m, ep.x_impact_equal_weight_m,
        static_cast<long long>(ep.t_bar_abs_us),
        to_string(ep.outcome).c_str(),
        static_cast<long long>(ep.ledger.accumulation_us),
        static_cast<long long>(ep.ledger.inference_us),
        static_cast<long long>(ep.ledger.estimation_us));
    out << buf << '\n';
  }
}

void write_campaign_predictions_csv(std::ostream& out,
                                    std::span<const EpisodeResult> episodes,
                                    std::span<const GroundTruth> truths) {
  out << "episode,t_us,d_m,sigma_m,ttc_us,d_true_m,ttc_true_us\n";
  char buf[224];
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const EpisodeResult& ep = episodes[i];
    const GroundTruth& truth = truths[i];
    const TimestampUs period =
        truth.t_us.empty() ? 10000 : truth.t_us.front() - truth.trigger_us;
    for (const FramePrediction& p : ep.predictions) {
      const std::int64_t idx =
          (p.t_us - truth.trigger_us) / std::max<TimestampUs>(period, 1) - 1;
      double d_true = 0.0, ttc_true = 0.0;
      if (idx >= 0 && idx < static_cast<std::int64_t>(truth.t_us.size())) {
        d_true = truth.x_m[idx];
        ttc_true = static_cast<double>(truth.ttc_us[idx]);
      }
      std::snprintf(buf, sizeof(buf), "%d,%lld,%.9g,%.9g,%.9g,%.9g,%.9g",
                    ep.index, static_cast<long long>(p.t_us), p.d_m, p.sigma_m,
                    p.ttc_us, d_true, ttc_true);
      out << buf << '\n';
    }
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "t_us,stage,detail\n";
  for (const TraceRow& r : rows) {
    out << r.t_us << ',' << r.stage << ',' << r.detail << '\n';
  }
}

std::vector<EpisodeResult> read_episode_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty episode CSV", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEpisodeHeader) {
    throw ParseError("unexpected episode CSV header", 1);
  }
  std::vector<EpisodeResult> episodes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 23) {
      throw ParseError("episode row has " + std::to_string(cells.size()) +
                           " cells, expected 23",
                       line_no);
    }
    EpisodeResult ep;
    int c = 0;
    ep.index = std::stoi(cells[c++]);
    ep.seed = std::stoull(cells[c++]);
    ep.trigger_us = std::stoll(cells[c++]);
    ep.frame_period_us = std::stoll(cells[c++]);
    ep.impact_time_us = std::stoll(cells[c++]);
    ep.impact_x_true_m = std::stod(cells[c++]);
    ep.impact_z_true_m = std::stod(cells[c++]);
    ep.frames_processed = std::stoi(cells[c++]);
    c++;  // n_predictions, rebuilt from the predictions file
    ep.command_issued = cells[c++] == "1";
    ep.command_time_us = std::stoll(cells[c++]);
    ep.table_index = std::stoi(cells[c++]);
    ep.table_target_m = std::stod(cells[c++]);
    ep.plan_duration_s = std::stod(cells[c++]);
    ep.rail_arrival_us = std::stoll(cells[c++]);
    ep.have_estimate = cells[c++] == "1";
    ep.x_impact_m = std::stod(cells[c++]);
    ep.x_impact_equal_weight_m = std::stod(cells[c++]);
    ep.t_bar_abs_us = std::stoll(cells[c++]);
    ep.outcome = episode_outcome_from_string(cells[c++]);
    ep.ledger.accumulation_us = std::stoll(cells[c++]);
    ep.ledger.inference_us = std::stoll(cells[c++]);
    ep.ledger.estimation_us = std::stoll(cells[c++]);
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

std::vector<PredictionRecord> read_campaign_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty predictions CSV", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "episode,t_us,d_m,sigma_m,ttc_us,d_true_m,ttc_true_us") {
    throw ParseError("unexpected predictions CSV header", 1);
  }
  std::vector<PredictionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ParseError("bad predictions row", line_no);
    PredictionRecord r;
    r.episode = std::stoi(cells[0]);
    r.prediction.t_us = std::stoll(cells[1]);
    r.prediction.d_m = std::stod(cells[2]);
    r.prediction.sigma_m = std::stod(cells[3]);
    r.prediction.ttc_us = std::stod(cells[4]);
    r.d_true_m = std::stod(cells[5]);
    r.ttc_true_us = std::stod(cells[6]);
    records.push_back(r);
  }
  return records;
}

MetricsReport metrics_from_csv(std::span<const EpisodeResult> episodes,
                               std::span<const PredictionRecord> predictions,
                               TimestampUs deadline_us) {
  // Rebuild episode prediction lists and ground-truth skeletons, then reuse
  // the canonical aggregation path.
  std::vector<EpisodeResult> eps(episodes.begin(), episodes.end());
  std::vector<GroundTruth> truths(eps.size());

  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i].predictions.clear();
    truths[i].trigger_us = eps[i].trigger_us;
    truths[i].impact_time_us = eps[i].impact_time_us;
    truths[i].impact_x_m = eps[i].impact_x_true_m;
  }
  for (const PredictionRecord& r : predictions) {
    if (r.episode < 0 || r.episode >= static_cast<int>(eps.size())) {
      throw ParseError("prediction row references unknown episode " +
                           std::to_string(r.episode),
                       0);
    }
    EpisodeResult& ep = eps[r.episode];
    GroundTruth& truth = truths[r.episode];
    ep.predictions.push_back(r.prediction);
    const TimestampUs period = std::max<TimestampUs>(ep.frame_period_us, 1);
    const std::int64_t idx =
        (r.prediction.t_us - truth.trigger_us) / period - 1;
    if (idx >= 0) {
      const auto need = static_cast<std::size_t>(idx) + 1;
      if (truth.t_us.size() < need) {
        const std::size_t old = truth.t_us.size();
        truth.t_us.resize(need);
        truth.x_m.resize(need, 0.0);
        truth.ttc_us.resize(need, 0);
        for (std::size_t k = old; k < need; ++k) {
          truth.t_us[k] =
              truth.trigger_us + static_cast<TimestampUs>(k + 1) * period;
        }
      }
      truth.x_m[idx] = r.d_true_m;
      truth.ttc_us[idx] = static_cast<TimestampUs>(std::llround(r.ttc_true_us));
    }
  }
  return compute_metrics(eps, truths, deadline_us);
}

}  // namespace evcatch
