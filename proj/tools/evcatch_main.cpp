// evcatch: event-camera ball interception simulator and evaluation CLI.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "evcatch/bench.hpp"
#include "evcatch/config.hpp"
#include "evcatch/estimator.hpp"
#include "evcatch/pipeline.hpp"
#include "evcatch/representations.hpp"
#include "evcatch/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace evcatch;

namespace {

struct GlobalOptions {
  std::string config_path = "default";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
  std::string format = "csv";
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

json stat_json(const MetricStat& s) {
  return json{{"mae", s.mae}, {"std", s.std_dev}, {"n", s.n}};
}

json metrics_json(const MetricsReport& m) {
  json buckets = json::array();
  for (const BucketRate& b : m.buckets) {
    buckets.push_back(json{{"lo_m", b.lo_m},
                           {"hi_m", b.hi_m},
                           {"episodes", b.episodes},
                           {"caught", b.caught},
                           {"rate", b.rate()}});
  }
  return json{
      {"episodes", m.episodes},
      {"success_rate", m.success_rate},
      {"caught", m.caught},
      {"missed_x", m.missed_x},
      {"missed_z", m.missed_z},
      {"missed_deadline", m.missed_deadline},
      {"missed_no_perception", m.missed_no_perception},
      {"frame_position_mae_mm", stat_json(m.frame_position_mm)},
      {"frame_ttc_mae_ms", stat_json(m.frame_ttc_ms)},
      {"impact_position_mae_mm", stat_json(m.impact_position_mm)},
      {"impact_equal_weight_mae_mm", stat_json(m.impact_equal_weight_mm)},
      {"collision_time_mae_ms", stat_json(m.collision_time_ms)},
      {"buckets", buckets},
  };
}

std::string metrics_csv(const MetricsReport& m) {
  std::ostringstream out;
  out << "metric,value,std,n\n";
  char buf[160];
  auto row = [&](const char* name, const MetricStat& s) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%lld", name, s.mae, s.std_dev,
                  static_cast<long long>(s.n));
    out << buf << '\n';
  };
  row("frame_position_mae_mm", m.frame_position_mm);
  row("frame_ttc_mae_ms", m.frame_ttc_ms);
  row("impact_position_mae_mm", m.impact_position_mm);
  row("impact_equal_weight_mae_mm", m.impact_equal_weight_mm);
  row("collision_time_mae_ms", m.collision_time_ms);
  std::snprintf(buf, sizeof(buf), "success_rate,%.9g,0,%d", m.success_rate,
                m.episodes);
  out << buf << '\n';
  for (const BucketRate& b : m.buckets) {
    std::snprintf(buf, sizeof(buf), "bucket_%.9g_%.9g,%.9g,0,%d", b.lo_m,
                  b.hi_m, b.rate(), b.episodes);
    out << buf << '\n';
  }
  return out.str();
}

CampaignConfig make_campaign(const GlobalOptions& g) {
  AppConfig app = load_app_config(g.config_path);
  if (g.seed_set) app.campaign.seed = g.seed;
  return finalize_campaign(app);
}

int cmd_simulate(const GlobalOptions& g) {
  CampaignConfig cfg = make_campaign(g);
  const MotionTable table = build_table(cfg.rail, cfg.table_spacing_m);
  const std::uint64_t seed = episode_seed(cfg.seed, 0);
  const LaunchSpec launch = sample_launch(cfg.launcher, seed);
  const WorldConfig world{cfg.launcher, cfg.camera, cfg.noise};

  std::vector<TraceRow> trace;
  GroundTruth truth;
  const EpisodeResult ep =
      run_episode(launch, world, cfg.predictor, cfg.rail, table, cfg.pipeline,
                  0, seed, cfg.random_command, &trace, &truth);

  const fs::path out(g.out_dir);
  fs::create_directories(out);
  {
    std::ostringstream s;
    write_trace_csv(s, trace);
    write_file(out / "episode_trace.csv", s.str());
  }
  {
    std::ostringstream s;
    write_prediction_csv(s, ep.predictions);
    write_file(out / "predictions.csv", s.str());
  }
  {
    std::ostringstream s;
    write_fit_trace_csv(s, replay_fit_trace(ep.predictions));
    write_file(out / "fit_trace.csv", s.str());
  }
  {
    std::ostringstream s;
    write_ground_truth_csv(s, truth);
    write_file(out / "ground_truth.csv", s.str());
  }
  {
    std::ostringstream s;
    write_motion_table_csv(s, table);
    write_file(out / "motion_table.csv", s.str());
  }

  json summary{
      {"outcome", to_string(ep.outcome)},
      {"impact_x_true_m", ep.impact_x_true_m},
      {"x_impact_m", ep.x_impact_m},
      {"flight_ms", (ep.impact_time_us - ep.trigger_us) * 1e-3},
      {"command_time_ms", ep.command_issued
                              ? (ep.command_time_us - ep.trigger_us) * 1e-3
                              : -1.0},
      {"table_target_m", ep.table_target_m},
      {"predictions", ep.predictions.size()},
  };
  if (g.format == "json") {
    std::cout << summary.dump(2) << '\n';
  } else {
    std::cout << "outcome=" << to_string(ep.outcome)
              << " impact_x_true_m=" << ep.impact_x_true_m
              << " x_impact_m=" << ep.x_impact_m
              << " target_m=" << ep.table_target_m << '\n';
  }
  return 0;
}

int cmd_campaign(const GlobalOptions& g) {
  CampaignConfig cfg = make_campaign(g);
  const CampaignReport report = run_campaign(cfg);

  const fs::path out(g.out_dir);
  fs::create_directories(out);
  {
    std::ostringstream s;
    write_episode_csv(s, report.episodes);
    write_file(out / "episodes.csv", s.str());
  }
  {
    std::ostringstream s;
    write_campaign_predictions_csv(s, report.episodes, report.truths);
    write_file(out / "campaign_predictions.csv", s.str());
  }
  if (g.format == "json") {
    json j{{"seed", cfg.seed},
           {"episodes", cfg.episodes},
           {"metrics", metrics_json(report.metrics)}};
    write_file(out / "report.json", j.dump(2) + "\n");
  } else {
    write_file(out / "report.csv", metrics_csv(report.metrics));
  }
  std::cout << "episodes=" << report.metrics.episodes
            << " success_rate=" << report.metrics.success_rate
            << " impact_mae_mm=" << report.metrics.impact_position_mm.mae
            << '\n';
  return 0;
}

int cmd_encode(const GlobalOptions& g, const std::string& input, int width,
               int height, int bins) {
  const SensorGeometry geometry{width, height};
  const EventStream stream = read_event_csv_file(input, geometry);
  const fs::path out(g.out_dir);
  fs::create_directories(out);

  const TimestampUs horizon =
      stream.events.empty() ? 1 : stream.events.back().t + 1;
  const Behi image = behi_from_events(stream, horizon);
  const std::vector<std::uint8_t> blob = behi_serialize(image);
  write_file(out / "image.behi",
             std::string(blob.begin(), blob.end()));

  bool volume_written = false;
  if (stream.events.size() >= 2 &&
      stream.events.back().t > stream.events.front().t) {
    const EventVolume vol = event_volume_from_events(stream, bins);
    std::vector<float> wire(vol.data.begin(), vol.data.end());
    std::ofstream vout(out / "volume.f32", std::ios::binary);
    vout.write(reinterpret_cast<const char*>(wire.data()),
               static_cast<std::streamsize>(wire.size() * sizeof(float)));
    volume_written = true;
  }

  json sizes{
      {"events", stream.events.size()},
      {"behi_bits", representation_size_bits(RepresentationKind::behi, geometry, 1)},
      {"behi_set_pixels", image.count_set()},
      {"event_volume_bits",
       representation_size_bits(RepresentationKind::event_volume, geometry, bins)},
      {"grayscale_stack_bits_n8",
       representation_size_bits(RepresentationKind::grayscale_stack, geometry, 8)},
      {"volume_written", volume_written},
  };
  if (g.format == "json") {
    write_file(out / "sizes.json", sizes.dump(2) + "\n");
  } else {
    std::ostringstream s;
    s << "kind,bits\n";
    s << "behi," << sizes["behi_bits"].get<std::uint64_t>() << '\n';
    s << "event_volume," << sizes["event_volume_bits"].get<std::uint64_t>() << '\n';
    s << "grayscale_stack_n8,"
      << sizes["grayscale_stack_bits_n8"].get<std::uint64_t>() << '\n';
    write_file(out / "sizes.csv", s.str());
  }
  std::cout << "events=" << stream.events.size()
            << " set_pixels=" << image.count_set() << '\n';
  return 0;
}

int cmd_bench(const GlobalOptions& g) {
  CampaignConfig cfg = make_campaign(g);
  const std::uint64_t seed = g.seed_set ? g.seed : 42;

  const ScalingResult scaling =
      bench_behi_update_scaling(cfg.camera.geometry, seed);
  const FrameCycleResult cycle =
      bench_frame_cycle(cfg.camera.geometry, 5000, 500, seed);

  std::cout << "behi_update scaling (events -> us/update):\n";
  for (const ScalingPoint& p : scaling.points) {
    std::printf("  %8zu %12.3f\n", p.events, p.seconds_per_update * 1e6);
  }
  std::printf("fitted exponent: %.3f\n", scaling.fitted_exponent);
  std::printf(
      "frame cycle (%zu events): update mean %.1f us max %.1f us, "
      "push mean %.3f us, total mean %.1f us max %.1f us\n",
      cycle.events_per_frame, cycle.behi_update_us_mean,
      cycle.behi_update_us_max, cycle.estimator_push_us_mean,
      cycle.total_us_mean, cycle.total_us_max);

  const fs::path out(g.out_dir);
  fs::create_directories(out);
  if (g.format == "json") {
    json points = json::array();
    for (const ScalingPoint& p : scaling.points) {
      points.push_back(json{{"events", p.events},
                            {"us_per_update", p.seconds_per_update * 1e6}});
    }
    json j{{"scaling", points},
           {"fitted_exponent", scaling.fitted_exponent},
           {"frame_cycle",
            json{{"events_per_frame", cycle.events_per_frame},
                 {"behi_update_us_mean", cycle.behi_update_us_mean},
                 {"behi_update_us_max", cycle.behi_update_us_max},
                 {"estimator_push_us_mean", cycle.estimator_push_us_mean},
                 {"total_us_mean", cycle.total_us_mean},
                 {"total_us_max", cycle.total_us_max}}}};
    write_file(out / "bench.json", j.dump(2) + "\n");
  } else {
    std::ostringstream s;
    s << "events,us_per_update\n";
    for (const ScalingPoint& p : scaling.points) {
      s << p.events << ',' << p.seconds_per_update * 1e6 << '\n';
    }
    s << "exponent," << scaling.fitted_exponent << '\n';
    write_file(out / "bench.csv", s.str());
  }
  return 0;
}

int cmd_metrics(const GlobalOptions& g, const std::string& episodes_path,
                const std::string& predictions_path) {
  std::ifstream eps_in(episodes_path);
  if (!eps_in) throw Error("cannot open '" + episodes_path + "'");
  std::ifstream pred_in(predictions_path);
  if (!pred_in) throw Error("cannot open '" + predictions_path + "'");

  const auto episodes = read_episode_csv(eps_in);
  const auto predictions = read_campaign_predictions_csv(pred_in);
  const MetricsReport report = metrics_from_csv(episodes, predictions);

  if (g.format == "json") {
    std::cout << metrics_json(report).dump(2) << '\n';
  } else {
    std::cout << metrics_csv(report);
  }
  return 0;
}

int cmd_plotdata(const GlobalOptions& g) {
  CampaignConfig cfg = make_campaign(g);
  const CampaignReport report = run_campaign(cfg);
  const fs::path out(g.out_dir);
  fs::create_directories(out);

  // Impact location and flight time per episode.
  {
    std::ostringstream s;
    s << "episode,impact_x_m,flight_ms,outcome\n";
    char buf[128];
    for (const EpisodeResult& ep : report.episodes) {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%s", ep.index,
                    ep.impact_x_true_m,
                    (ep.impact_time_us - ep.trigger_us) * 1e-3,
                    to_string(ep.outcome).c_str());
      s << buf << '\n';
    }
    write_file(out / "impact_flight.csv", s.str());
  }
  // Success rate per impact-location bucket.
  {
    std::ostringstream s;
    s << "lo_m,hi_m,episodes,caught,rate\n";
    char buf[128];
    for (const BucketRate& b : report.metrics.buckets) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%d,%d,%.9g", b.lo_m, b.hi_m,
                    b.episodes, b.caught, b.rate());
      s << buf << '\n';
    }
    write_file(out / "success_buckets.csv", s.str());
  }
  // Per-frame location error for the first episodes.
  {
    std::ostringstream s;
    s << "episode,frame,error_m\n";
    char buf[96];
    const int shown = std::min<int>(8, static_cast<int>(report.episodes.size()));
    for (int i = 0; i < shown; ++i) {
      const EpisodeResult& ep = report.episodes[i];
      const GroundTruth& truth = report.truths[i];
      int frame = 0;
      for (const FramePrediction& p : ep.predictions) {
        const std::int64_t idx =
            (p.t_us - truth.trigger_us) / std::max<TimestampUs>(ep.frame_period_us, 1) - 1;
        if (idx < 0 || idx >= static_cast<std::int64_t>(truth.x_m.size())) continue;
        std::snprintf(buf, sizeof(buf), "%d,%d,%.9g", ep.index, ++frame,
                      std::fabs(p.d_m - truth.x_m[idx]));
        s << buf << '\n';
      }
    }
    write_file(out / "frame_error_series.csv", s.str());
  }
  // Estimator replay of the first episode.
  if (!report.episodes.empty()) {
    std::ostringstream s;
    write_fit_trace_csv(s, replay_fit_trace(report.episodes[0].predictions));
    write_file(out / "fit_trace.csv", s.str());
  }
  std::cout << "wrote plot data for " << report.episodes.size()
            << " episodes to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOptions g;
  CLI::App app{"event-camera ball interception simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.add_option("--config", g.config_path,
                 "config file path, or 'default' for built-ins");
  app.add_option("--seed", g.seed, "campaign seed override")
      ->each([&g](const std::string&) { g.seed_set = true; });
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* simulate = app.add_subcommand("simulate", "run one episode with trace");
  auto* campaign = app.add_subcommand("campaign", "run an episode campaign");

  std::string encode_input;
  int encode_w = 640, encode_h = 480, encode_bins = 10;
  auto* encode =
      app.add_subcommand("encode", "encode an event CSV into representations");
  encode->add_option("input", encode_input, "event CSV file")->required();
  encode->add_option("--width", encode_w, "sensor width");
  encode->add_option("--height", encode_h, "sensor height");
  encode->add_option("--bins", encode_bins, "event volume temporal bins");

  auto* bench = app.add_subcommand("bench", "encoder/estimator throughput");

  std::string metrics_episodes, metrics_predictions;
  auto* metrics =
      app.add_subcommand("metrics", "recompute a report from campaign CSVs");
  metrics->add_option("episodes", metrics_episodes, "episodes.csv")->required();
  metrics->add_option("predictions", metrics_predictions,
                      "campaign_predictions.csv")
      ->required();

  auto* plotdata =
      app.add_subcommand("plotdata", "emit plot-ready CSV series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(g);
    if (campaign->parsed()) return cmd_campaign(g);
    if (encode->parsed())
      return cmd_encode(g, encode_input, encode_w, encode_h, encode_bins);
    if (bench->parsed()) return cmd_bench(g);
    if (metrics->parsed())
      return cmd_metrics(g, metrics_episodes, metrics_predictions);
    if (plotdata->parsed()) return cmd_plotdata(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
