#pragma once

#include <map>
#include <string>

#include "evcatch/pipeline.hpp"

namespace evcatch {

// Minimal INI reader: `[section]` headers, `key = value` pairs, `#` or `;`
// comments. Unknown sections or keys are errors so typos fail loudly.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniFile parse(std::istream& in);
  static IniFile parse_file(const std::string& path);
};

// Whole-application configuration with defaults; the campaign config file
// overrides individual keys. Sections: [launcher], [camera], [noise],
// [predictor], [rail], [pipeline], [campaign].
struct AppConfig {
  CampaignConfig campaign;
  // When > 0 the oracle noise profile is rescaled at load time so the
  // reference per-frame location error matches this target (mm).
  double calibrate_target_mm = 0.0;
};

AppConfig default_app_config();
AppConfig load_app_config(const std::string& path);  // "default" = built-ins
AppConfig app_config_from_ini(const IniFile& ini);

// Applies the calibration request, if any, and returns the ready-to-run
// campaign configuration.
CampaignConfig finalize_campaign(const AppConfig& config);

}  // namespace evcatch
