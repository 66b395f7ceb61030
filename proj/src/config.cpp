#include "evcatch/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace evcatch {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Typed setter table per section; unknown keys throw.
class SectionBinder {
 public:
  void bind(const std::string& key, double* target) {
    setters_[key] = [target](const std::string& v) { *target = std::stod(v); };
  }
  void bind(const std::string& key, int* target) {
    setters_[key] = [target](const std::string& v) { *target = std::stoi(v); };
  }
  void bind(const std::string& key, TimestampUs* target) {
    setters_[key] = [target](const std::string& v) { *target = std::stoll(v); };
  }
  void bind(const std::string& key, std::uint64_t* target) {
    setters_[key] = [target](const std::string& v) { *target = std::stoull(v); };
  }
  void bind(const std::string& key, bool* target) {
    setters_[key] = [target](const std::string& v) {
      if (v == "true" || v == "1") *target = true;
      else if (v == "false" || v == "0") *target = false;
      else throw ConfigError("expected boolean, got '" + v + "'");
    };
  }
  void bind_enum(const std::string& key,
                 std::function<void(const std::string&)> setter) {
    setters_[key] = std::move(setter);
  }

  void apply(const std::string& section,
             const std::map<std::string, std::string>& values) const {
    for (const auto& [key, value] : values) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      }
      try {
        it->second(value);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception&) {
        throw ConfigError("invalid value '" + value + "' for key '" + key +
                          "' in section [" + section + "]");
      }
    }
  }

 private:
  std::map<std::string, std::function<void(const std::string&)>> setters_;
};

}  // namespace

IniFile IniFile::parse(std::istream& in) {
  IniFile ini;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("unterminated section header '" + line + "'", line_no);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line_no);
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    }
    if (section.empty()) {
      throw ParseError("key outside any section: '" + line + "'", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    ini.sections[section][key] = value;
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in);
}

AppConfig default_app_config() { return AppConfig{}; }

AppConfig app_config_from_ini(const IniFile& ini) {
  AppConfig config;
  CampaignConfig& c = config.campaign;

  std::map<std::string, SectionBinder> binders;

  SectionBinder& launcher = binders["launcher"];
  launcher.bind("distance_m", &c.launcher.distance_m);
  launcher.bind("launch_x_m", &c.launcher.launch_x_m);
  launcher.bind("launch_height_m", &c.launcher.launch_height_m);
  launcher.bind("catch_height_m", &c.launcher.catch_height_m);
  launcher.bind("target_x_min_m", &c.launcher.target_x_min_m);
  launcher.bind("target_x_max_m", &c.launcher.target_x_max_m);
  launcher.bind("speed_min_mps", &c.launcher.speed_min_mps);
  launcher.bind("speed_max_mps", &c.launcher.speed_max_mps);
  launcher.bind("ball_radius_m", &c.launcher.ball_radius_m);
  launcher.bind("spin_accel_z", &c.launcher.spin_accel_z);

  SectionBinder& camera = binders["camera"];
  camera.bind("width", &c.camera.geometry.width);
  camera.bind("height", &c.camera.geometry.height);
  camera.bind("focal_px", &c.camera.focal_px);
  camera.bind("cx", &c.camera.cx);
  camera.bind("cy", &c.camera.cy);
  camera.bind("position_x_m", &c.camera.position.x);
  camera.bind("position_z_m", &c.camera.position.z);

  SectionBinder& noise = binders["noise"];
  noise.bind("pixel_rate_hz", &c.noise.pixel_rate_hz);
  noise.bind("contour_jitter_px", &c.noise.contour_jitter_px);
  noise.bind("background_rate_hz", &c.noise.background_rate_hz);
  noise.bind("background_x0", &c.noise.background_x0);
  noise.bind("background_y0", &c.noise.background_y0);
  noise.bind("background_x1", &c.noise.background_x1);
  noise.bind("background_y1", &c.noise.background_y1);

  SectionBinder& predictor = binders["predictor"];
  predictor.bind_enum("kind", [&c](const std::string& v) {
    if (v == "analytic") c.predictor.kind = PredictorKind::analytic;
    else if (v == "noisy_oracle") c.predictor.kind = PredictorKind::noisy_oracle;
    else throw ConfigError("unknown predictor kind '" + v + "'");
  });
  predictor.bind("early_sigma_m", &c.predictor.early_sigma_m);
  predictor.bind("late_sigma_m", &c.predictor.late_sigma_m);
  predictor.bind("ttc_sigma_us", &c.predictor.ttc_sigma_us);
  predictor.bind("profile_frames", &c.predictor.profile_frames);
  predictor.bind("seed", &c.predictor.seed);
  predictor.bind("pixel_sigma_px", &c.predictor.pixel_sigma_px);
  predictor.bind("assumed_ball_radius_m", &c.predictor.assumed_ball_radius_m);
  predictor.bind("calibrate_target_mm", &config.calibrate_target_mm);

  SectionBinder& rail = binders["rail"];
  rail.bind("half_span_m", &c.rail.half_span_m);
  rail.bind("v_max_mps", &c.rail.v_max_mps);
  rail.bind("a_max_mps2", &c.rail.a_max_mps2);
  rail.bind("j_max_mps3", &c.rail.j_max_mps3);
  rail.bind("net_width_m", &c.rail.net_width_m);
  rail.bind("net_height_m", &c.rail.net_height_m);
  rail.bind("net_center_z_m", &c.rail.net_center_z_m);
  rail.bind("table_spacing_m", &c.table_spacing_m);

  SectionBinder& pipeline = binders["pipeline"];
  pipeline.bind("frame_period_us", &c.pipeline.frame_period_us);
  pipeline.bind("batch_size", &c.pipeline.batch_size);
  pipeline.bind("inference_latency_us", &c.pipeline.inference_latency_us);
  pipeline.bind("perception_budget_us", &c.pipeline.perception_budget_us);
  pipeline.bind_enum("trigger", [&c](const std::string& v) {
    if (v == "hardware") c.pipeline.trigger = TriggerMode::hardware;
    else if (v == "ttc_threshold") c.pipeline.trigger = TriggerMode::ttc_threshold;
    else throw ConfigError("unknown trigger mode '" + v + "'");
  });
  pipeline.bind("ttc_threshold_us", &c.pipeline.ttc_threshold_us);
  pipeline.bind("overhead_latency_us", &c.pipeline.overhead_latency_us);
  pipeline.bind("use_uncertainty", &c.pipeline.use_uncertainty);

  SectionBinder& campaign = binders["campaign"];
  campaign.bind("episodes", &c.episodes);
  campaign.bind("seed", &c.seed);
  campaign.bind("random_command", &c.random_command);
  campaign.bind("metrics_deadline_us", &c.metrics_deadline_us);

  for (const auto& [name, values] : ini.sections) {
    const auto it = binders.find(name);
    if (it == binders.end()) {
      throw ConfigError("unknown config section [" + name + "]");
    }
    it->second.apply(name, values);
  }

  // Keep the clutter region aligned with the sensor unless set explicitly.
  if (!ini.sections.count("noise") ||
      (!ini.sections.at("noise").count("background_x1") &&
       !ini.sections.at("noise").count("background_y1"))) {
    c.noise.background_x1 = c.camera.geometry.width;
    c.noise.background_y1 = c.camera.geometry.height;
  }
  return config;
}

AppConfig load_app_config(const std::string& path) {
  if (path.empty() || path == "default") return default_app_config();
  return app_config_from_ini(IniFile::parse_file(path));
}

CampaignConfig finalize_campaign(const AppConfig& config) {
  CampaignConfig campaign = config.campaign;
  if (config.calibrate_target_mm > 0.0) {
    CalibrationCampaign reference;
    reference.launcher = campaign.launcher;
    reference.frame_period_us = campaign.pipeline.frame_period_us;
    reference.batch_frames = campaign.pipeline.batch_size;
    reference.deadline_us = campaign.metrics_deadline_us;
    reference.seed = campaign.seed;
    reference.episodes = std::max(campaign.episodes, 50);
    campaign.predictor = calibrate_noise_profile(
        config.calibrate_target_mm * 1e-3, campaign.predictor, reference);
  }
  return campaign;
}

}  // namespace evcatch
