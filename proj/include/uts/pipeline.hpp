#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uts/association.hpp"
#include "uts/detection.hpp"
#include "uts/estimation.hpp"
#include "uts/eval.hpp"
#include "uts/geometry.hpp"
#include "uts/synth.hpp"

namespace uts {

struct BadConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every tunable constant in one place. Field names match the JSON
/// config file (snake_case).
struct PipelineConfig {
  double detection_sigma_px = 2.0;
  double border_px = 10.0;
  double iou_gate = 0.1;
  int confirm_hits = 3;
  int max_misses = 5;
  double promotion_phi_deg = 15.0;
  double promotion_displacement_sigma = 3.0;

  // Process noise spectral densities.
  double accel_noise_density = 50.0;     // px^2/s^5, 2D stage
  double log_scale_noise_density = 0.1;  // 1/s^3, 2D stage
  double velocity_noise_density = 2.0;   // (m/s)^2/s, 3D stage
  double turn_rate_noise_density = 0.3;  // (rad/s)^2/s, 3D stage
  double shape_noise_density = 0.01;     // m^2/s per shape axis, 3D stage

  double omega_init_sigma = 0.3;  // rad/s, prior std at 3D initialization

  double ut_alpha = 0.5;
  double ut_beta = 2.0;
  double ut_kappa = 0.0;

  std::string priors_path;
  std::string mask_path;
  std::string calibration_path;

  UTParams ut_params() const { return {ut_alpha, ut_beta, ut_kappa}; }

  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig load(const std::string& path);
  void validate() const;
};

struct TrackOutputRecord {
  int frame = 0;
  double time = 0.0;
  int track_id = 0;
  TrackStage stage = TrackStage::TwoD;
  VehicleClass class_label = VehicleClass::CAR;
  Box2D box2d;
  std::optional<OrientedBox3D> box3d;  // present iff stage == ThreeD
  double v = 0.0;
  double omega = 0.0;
  std::vector<double> cov_diag;
};

std::string records_to_jsonl(const std::vector<TrackOutputRecord>& records);
std::vector<TrackOutputRecord> load_records(const std::string& path);

/// Per-camera-stream tracker: association, EKF (2D stage) / UKF (3D stage)
/// updates, lifecycle and 2D -> 3D promotion. One logical thread owns an
/// instance.
class Pipeline {
 public:
  Pipeline(CameraModel camera, SceneMask mask,
           std::map<VehicleClass, ShapePrior> priors, PipelineConfig config);

  /// Ingests one frame. Per-track failures degrade that track to coasting;
  /// the frame itself never aborts.
  std::vector<TrackOutputRecord> process_frame(
      const std::vector<Detection>& raw_detections, double t_now, int frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  const CameraModel& camera() const { return camera_; }
  int tracks_created() const { return next_track_id_; }

 private:
  void predict_track(Track& track, double t_now);
  std::optional<Box2D> predicted_box(const Track& track) const;
  void update_track(Track& track, const Detection& det);
  void try_promote(Track& track);
  GaussianState initial_state_2d(const Detection& det) const;

  CameraModel camera_;
  SceneMask mask_;
  std::map<VehicleClass, ShapePrior> priors_;
  PipelineConfig config_;
  std::vector<Track> tracks_;
  int next_track_id_ = 0;
  double last_frame_time_ = -std::numeric_limits<double>::infinity();
};

struct RunSummary {
  int frames = 0;
  int tracks_created = 0;
  int tracks_confirmed = 0;
  int tracks_dead = 0;
  double mean_frame_ms = 0.0;
  int parse_warnings = 0;
};

/// Streams a detections file through a Pipeline and writes JSON Lines
/// records to `output_path`.
RunSummary run_sequence(const PipelineConfig& config, const CameraModel& camera,
                        const SceneMask& mask,
                        const std::map<VehicleClass, ShapePrior>& priors,
                        const std::string& detections_path,
                        const std::string& output_path);

/// Joins tracker records (3D stage only) with ground truth into per-frame
/// evaluation input. When a camera and mask are given, truth boxes whose
/// center does not project into the detection area are dropped.
std::vector<EvalFrame> build_eval_frames(
    const std::vector<TrackOutputRecord>& records,
    const std::vector<TruthBox>& truth, const CameraModel* camera = nullptr,
    const SceneMask* mask = nullptr);

}  // namespace uts
