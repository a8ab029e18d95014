#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace uts {

struct PointBehindCamera : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RayParallelToPlane : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntersectionBehindCamera : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadCalibration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Axis-aligned 2D box in pixel coordinates. The image origin is the top-left
/// corner and v grows downward, so t <= b and l <= r.
struct Box2D {
  double t = 0.0;
  double l = 0.0;
  double b = 0.0;
  double r = 0.0;

  double width() const { return r - l; }
  double height() const { return b - t; }
  Eigen::Vector2d center() const { return {0.5 * (l + r), 0.5 * (t + b)}; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
};

/// Oriented 3D box in the world coordinate system. The yaw rotates about the
/// WCS z axis (the street-plane normal); shape is (length, width, height).
struct OrientedBox3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d shape = Eigen::Vector3d::Ones();
  double yaw = 0.0;
};

/// Calibrated pinhole camera. K is the intrinsic matrix; P = [R | t] maps
/// homogeneous CCS points to the WCS. The WCS -> CCS inverse is cached and
/// validated on construction (R orthonormal, det +1, K invertible).
class CameraModel {
 public:
  CameraModel(const Eigen::Matrix3d& K, const Eigen::Matrix<double, 3, 4>& P,
              int image_width, int image_height);

  static CameraModel from_json_text(const std::string& text);
  static CameraModel load(const std::string& path);

  const Eigen::Matrix3d& K() const { return K_; }
  const Eigen::Matrix3d& K_inv() const { return K_inv_; }
  const Eigen::Matrix3d& rotation() const { return R_; }
  const Eigen::Vector3d& camera_center() const { return t_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  Eigen::Vector3d world_to_camera(const Eigen::Vector3d& x_wcs) const {
    return R_.transpose() * (x_wcs - t_);
  }
  Eigen::Vector3d camera_to_world(const Eigen::Vector3d& x_ccs) const {
    return R_ * x_ccs + t_;
  }

 private:
  Eigen::Matrix3d K_;
  Eigen::Matrix3d K_inv_;
  Eigen::Matrix3d R_;
  Eigen::Vector3d t_;
  int width_;
  int height_;
};

/// Projects a WCS point through the camera. Throws PointBehindCamera when the
/// CCS depth is <= 1e-9.
Eigen::Vector2d project_point(const CameraModel& cam, const Eigen::Vector3d& x_wcs);

/// Intersects the viewing ray through `pixel` with the horizontal plane
/// z = z0 and returns the WCS intersection point.
Eigen::Vector3d back_project_to_height(const CameraModel& cam,
                                       const Eigen::Vector2d& pixel, double z0);

/// The eight box corners in a fixed order: corner index i has sign pattern
/// (sigma_l, sigma_w, sigma_h) = (bit0, bit1, bit2) with bit set -> +1.
std::array<Eigen::Vector3d, 8> box_corners(const OrientedBox3D& box);

struct BoxOutline {
  Box2D box;
  // Index of the corner attaining each extremum, in (t, l, b, r) order.
  // Ties go to the lowest corner index.
  std::array<int, 4> active_corners;
};

/// Axis-aligned frame of the eight projected corners plus the corner indices
/// that attain each edge.
BoxOutline project_box_outline(const CameraModel& cam, const OrientedBox3D& box);

}  // namespace uts
