#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uts/geometry.hpp"

namespace uts {

enum class VehicleClass { CAR, TRUCK, BUS, OTHER };

std::string to_string(VehicleClass c);
VehicleClass vehicle_class_from_string(const std::string& s);

/// One detector output. edge_valid flags (t, l, b, r) mark whether the edge
/// genuinely bounds the vehicle.
struct Detection {
  Box2D box;
  VehicleClass class_label = VehicleClass::OTHER;
  double score = 1.0;
  std::array<bool, 4> edge_valid = {true, true, true, true};
  double timestamp = 0.0;
  int frame = 0;

  bool fully_valid() const {
    return edge_valid[0] && edge_valid[1] && edge_valid[2] && edge_valid[3];
  }
  int valid_edge_count() const {
    return int(edge_valid[0]) + int(edge_valid[1]) + int(edge_valid[2]) +
           int(edge_valid[3]);
  }
};

/// Class specific Gaussian prior over (length, width, height).
struct ShapePrior {
  Eigen::Vector3d mean_shape = Eigen::Vector3d::Ones();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

using Polygon = std::vector<Eigen::Vector2d>;

/// Static scene annotations in pixel coordinates: the detection/tracking area
/// and regions that may occlude vehicles.
struct SceneMask {
  Polygon detection_area;  // empty -> whole image
  std::vector<Polygon> occluder_regions;

  static SceneMask from_json_text(const std::string& text);
  static SceneMask load(const std::string& path);
};

/// Even-odd point-in-polygon test; points on the boundary count as inside.
bool point_in_polygon(const Eigen::Vector2d& p, const Polygon& poly);

/// Length fraction of the segment [a, b] covered by the union of polygons.
double segment_fraction_inside(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const std::vector<Polygon>& polys);

/// Keeps detections classified CAR/TRUCK/BUS whose box center lies inside the
/// detection area; order preserved.
std::vector<Detection> filter_detections(const std::vector<Detection>& raw,
                                         const SceneMask& mask);

/// Invalidates edges that are closer than border_px to their image border or
/// overlap an occluder region by more than half their length.
Detection mark_edge_validity(Detection det, const SceneMask& mask,
                             int image_width, int image_height, double border_px);

/// Shipped per-class shape priors (configuration defaults).
std::map<VehicleClass, ShapePrior> default_priors();

/// Applies JSON overrides ({"CAR": {"mean": [l,w,h], "cov": [9 numbers]}, ...})
/// on top of the defaults.
std::map<VehicleClass, ShapePrior> load_priors(const std::string& path);

/// Reads a JSON Lines detections file. Malformed lines are skipped;
/// `bad_lines`, when given, receives the number skipped.
std::vector<Detection> load_detections(const std::string& path,
                                       int* bad_lines = nullptr);

}  // namespace uts
