#pragma once

#include <optional>
#include <vector>

#include "evcatch/prediction.hpp"
#include "evcatch/representations.hpp"
#include "evcatch/scene.hpp"

namespace evcatch {

enum class PredictorKind { analytic, noisy_oracle };

// The prediction stage is pluggable behind the FramePrediction contract.
// The noisy oracle replays ground truth through a calibrated heteroscedastic
// noise model and reports the generating std as its sigma. The analytic
// predictor measures the ball disk in the binary image and estimates TTC
// from the apparent-radius growth rate (looming).
struct PredictorConfig {
  PredictorKind kind = PredictorKind::noisy_oracle;
  // Noise profile, linear in frame index from early to late over
  // profile_frames frames, constant afterwards.
  double early_sigma_m = 0.024;
  double late_sigma_m = 0.003;
  double ttc_sigma_us = 11000.0;
  int profile_frames = 12;
  std::uint64_t seed = 0;
  // Analytic back-projection model.
  double pixel_sigma_px = 1.0;
  double assumed_ball_radius_m = 0.02;
};

void validate_predictor_config(const PredictorConfig& cfg);

// Disk estimate extracted from one frame's image.
struct AnalyticMeasurement {
  TimestampUs t_us = 0;
  double u = 0, v = 0;  // disk center, pixels
  double rho = 0;       // apparent radius, pixels
};

// Carried explicitly by the caller so predictors stay stateless.
struct FrameHistory {
  std::vector<AnalyticMeasurement> measurements;
  double last_ttc_us = -1.0;
  TimestampUs last_ttc_t_us = 0;
};

class Predictor {
 public:
  explicit Predictor(PredictorConfig cfg);

  const PredictorConfig& config() const { return cfg_; }

  // Analytic disk measurement from the current image and, when available,
  // the previous frame's image (their difference isolates the newest pixels).
  // Empty when the image holds no set pixels.
  std::optional<AnalyticMeasurement> measure(const Behi& image,
                                             const Behi* previous) const;

  // One frame of prediction. frame_index counts from 1 at the first frame
  // after the trigger. For the analytic kind the measurement is appended to
  // `history`; a prediction needs at least two retained measurements. For
  // the noisy oracle `truth` is required. Empty result = no detection, the
  // caller skips the frame.
  std::optional<FramePrediction> predict(const Behi& image,
                                         const Behi* previous_image,
                                         const CameraModel& cam,
                                         FrameHistory& history,
                                         const GroundTruth* truth,
                                         int frame_index,
                                         TimestampUs frame_time_us) const;

  double sigma_for_frame(int frame_index) const;

 private:
  std::optional<FramePrediction> predict_oracle(const GroundTruth& truth,
                                                int frame_index,
                                                TimestampUs frame_time_us) const;
  std::optional<FramePrediction> predict_analytic(const CameraModel& cam,
                                                  FrameHistory& history) const;

  PredictorConfig cfg_;
};

// Reference campaign used to tune the oracle noise level: hardware-trigger
// cadence, per-frame errors restricted to the decision deadline.
struct CalibrationCampaign {
  LauncherConfig launcher;
  int episodes = 200;
  std::uint64_t seed = 20260810;
  TimestampUs frame_period_us = 10000;
  int batch_frames = 12;
  TimestampUs deadline_us = 160000;
};

// Scales the base noise profile so the realized mean absolute per-frame
// location error over the reference campaign equals target_m. Exact up to
// floating point because the realized error is linear in the profile scale.
PredictorConfig calibrate_noise_profile(double target_m,
                                        const PredictorConfig& base,
                                        const CalibrationCampaign& campaign);

// Mean absolute per-frame location error the oracle would realize on the
// reference campaign with this config.
double reference_frame_mae_m(const PredictorConfig& cfg,
                             const CalibrationCampaign& campaign);

}  // namespace evcatch
