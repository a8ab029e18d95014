#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uts/detection.hpp"
#include "uts/geometry.hpp"

namespace uts {

/// Builds a camera from a pose: position, ground target, focal length in
/// pixels and image size. Image y points downward in the world.
CameraModel make_lookat_camera(const Eigen::Vector3d& position,
                               const Eigen::Vector3d& look_at, double focal_px,
                               int image_width, int image_height);

struct MotionSegment {
  double duration = 0.0;
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
};

struct ScenarioVehicle {
  VehicleClass class_label = VehicleClass::CAR;
  Eigen::Vector3d shape = {4.5, 1.8, 1.5};  // (l, w, h)
  double spawn_time = 0.0;
  Eigen::Vector3d initial_pose = Eigen::Vector3d::Zero();  // (x, y, phi)
  std::vector<MotionSegment> segments;

  double despawn_time() const;
};

struct Scenario {
  CameraModel camera;
  double duration = 10.0;
  double fps = 20.0;
  double noise_sigma_px = 0.0;
  bool truncate_at_occluders = false;
  SceneMask mask;
  std::vector<ScenarioVehicle> vehicles;

  static Scenario from_json_text(const std::string& text);
  static Scenario load(const std::string& path);
};

struct TruthBox {
  int frame = 0;
  double time = 0.0;
  int id = 0;
  VehicleClass class_label = VehicleClass::CAR;
  OrientedBox3D box;
  double v = 0.0;
  double omega = 0.0;
};

/// Pose (x, y, phi) of a vehicle at `t` seconds after spawn, integrating the
/// piecewise-constant coordinated-turn segments exactly.
Eigen::Vector3d vehicle_pose_at(const ScenarioVehicle& vehicle, double t);

/// Exact ground-truth boxes at every frame timestamp.
std::vector<TruthBox> generate_truth(const Scenario& scenario);

/// Renders truth boxes to noisy 2D detections via the scenario camera.
/// Boxes that fail to project (corner behind the camera) are omitted.
std::vector<Detection> render_detections(const Scenario& scenario,
                                         const std::vector<TruthBox>& truth,
                                         uint64_t seed);

std::string detections_to_jsonl(const std::vector<Detection>& detections);
std::string truth_to_jsonl(const std::vector<TruthBox>& truth);
std::vector<TruthBox> load_truth(const std::string& path);

/// Serializes the scenario's camera as a calibration file and its mask.
std::string camera_to_json(const CameraModel& cam);
std::string mask_to_json(const SceneMask& mask);

}  // namespace uts
