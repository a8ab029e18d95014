#include "uts/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uts {

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

CameraModel::CameraModel(const Eigen::Matrix3d& K,
                         const Eigen::Matrix<double, 3, 4>& P, int image_width,
                         int image_height)
    : K_(K),
      R_(P.leftCols<3>()),
      t_(P.col(3)),
      width_(image_width),
      height_(image_height) {
  if (std::abs(K_(2, 2) - 1.0) > 1e-12) {
    throw BadCalibration("K[2][2] must be 1");
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(K_);
  if (!lu.isInvertible()) {
    throw BadCalibration("K is singular");
  }
  K_inv_ = lu.inverse();
  if ((R_.transpose() * R_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw BadCalibration("rotation part of P is not orthonormal");
  }
  if (R_.determinant() < 0.0) {
    throw BadCalibration("rotation part of P has negative determinant");
  }
}

CameraModel CameraModel::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BadCalibration(std::string("calibration parse error: ") + e.what());
  }
  if (!j.contains("K") || !j.contains("P") || !j.contains("image_size")) {
    throw BadCalibration("calibration must contain K, P and image_size");
  }
  auto K_vals = j.at("K").get<std::vector<double>>();
  auto P_vals = j.at("P").get<std::vector<double>>();
  auto size = j.at("image_size").get<std::vector<int>>();
  if (K_vals.size() != 9 || P_vals.size() != 12 || size.size() != 2) {
    throw BadCalibration("calibration has wrong element counts");
  }
  Eigen::Matrix3d K;
  Eigen::Matrix<double, 3, 4> P;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) K(i, k) = K_vals[3 * i + k];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) P(i, k) = P_vals[4 * i + k];
  return CameraModel(K, P, size[0], size[1]);
}

CameraModel CameraModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadCalibration("cannot open calibration file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Eigen::Vector2d project_point(const CameraModel& cam, const Eigen::Vector3d& x_wcs) {
  const Eigen::Vector3d x_ccs = cam.world_to_camera(x_wcs);
  if (x_ccs.z() <= 1e-9) {
    throw PointBehindCamera("point has non-positive CCS depth");
  }
  const Eigen::Vector3d h = cam.K() * x_ccs;
  return {h.x() / h.z(), h.y() / h.z()};
}

Eigen::Vector3d back_project_to_height(const CameraModel& cam,
                                       const Eigen::Vector2d& pixel, double z0) {
  const Eigen::Vector3d dir_ccs = cam.K_inv() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
  const Eigen::Vector3d dir_wcs = cam.rotation() * dir_ccs;
  if (std::abs(dir_wcs.z()) < 1e-12) {
    throw RayParallelToPlane("viewing ray is parallel to plane z = z0");
  }
  const double s = (z0 - cam.camera_center().z()) / dir_wcs.z();
  // CCS depth of the intersection is s * dir_ccs.z = s (dir_ccs.z == 1).
  if (s * dir_ccs.z() <= 1e-9) {
    throw IntersectionBehindCamera("plane intersection lies behind the camera");
  }
  return cam.camera_center() + s * dir_wcs;
}

std::array<Eigen::Vector3d, 8> box_corners(const OrientedBox3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  std::array<Eigen::Vector3d, 8> corners;
  for (int i = 0; i < 8; ++i) {
    const double sl = (i & 1) ? 0.5 : -0.5;
    const double sw = (i & 2) ? 0.5 : -0.5;
    const double sh = (i & 4) ? 0.5 : -0.5;
    const double dx = sl * box.shape.x();
    const double dy = sw * box.shape.y();
    corners[i] = box.center + Eigen::Vector3d(c * dx - s * dy, s * dx + c * dy,
                                              sh * box.shape.z());
  }
  return corners;
}

BoxOutline project_box_outline(const CameraModel& cam, const OrientedBox3D& box) {
  const auto corners = box_corners(box);
  std::array<Eigen::Vector2d, 8> px;
  for (int i = 0; i < 8; ++i) px[i] = project_point(cam, corners[i]);

  BoxOutline out;
  out.box = {px[0].y(), px[0].x(), px[0].y(), px[0].x()};
  out.active_corners = {0, 0, 0, 0};
  for (int i = 1; i < 8; ++i) {
    if (px[i].y() < out.box.t) { out.box.t = px[i].y(); out.active_corners[0] = i; }
    if (px[i].x() < out.box.l) { out.box.l = px[i].x(); out.active_corners[1] = i; }
    if (px[i].y() > out.box.b) { out.box.b = px[i].y(); out.active_corners[2] = i; }
    if (px[i].x() > out.box.r) { out.box.r = px[i].x(); out.active_corners[3] = i; }
  }
  return out;
}

}  // namespace uts
