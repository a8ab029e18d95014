#pragma once

#include <random>

#include <Eigen/Dense>

#include "uts/geometry.hpp"
#include "uts/synth.hpp"

namespace test_util {

inline uts::CameraModel identity_camera() {
  Eigen::Matrix<double, 3, 4> P = Eigen::Matrix<double, 3, 4>::Zero();
  P.leftCols<3>().setIdentity();
  return uts::CameraModel(Eigen::Matrix3d::Identity(), P, 1000, 1000);
}

// Straight-down camera at (0, 0, height); the principal ray hits the origin.
inline uts::CameraModel nadir_camera(double height, double focal = 800.0,
                                     int w = 960, int h = 600) {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = K(1, 1) = focal;
  K(0, 2) = 0.5 * w;
  K(1, 2) = 0.5 * h;
  Eigen::Matrix<double, 3, 4> P;
  P.col(0) = Eigen::Vector3d(1, 0, 0);
  P.col(1) = Eigen::Vector3d(0, -1, 0);
  P.col(2) = Eigen::Vector3d(0, 0, -1);
  P.col(3) = Eigen::Vector3d(0, 0, height);
  return uts::CameraModel(K, P, w, h);
}

// Elevated surveillance-style camera looking down at the ground plane.
inline uts::CameraModel oblique_camera() {
  return uts::make_lookat_camera({0.0, -25.0, 8.0}, {5.0, 10.0, 0.0}, 900.0,
                                 960, 600);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline uts::CameraModel random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> focal(400.0, 1500.0);
  std::uniform_real_distribution<double> pp(200.0, 800.0);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = focal(rng);
  K(1, 1) = focal(rng);
  K(0, 2) = pp(rng);
  K(1, 2) = pp(rng);
  Eigen::Matrix<double, 3, 4> P;
  P.leftCols<3>() = random_rotation(rng);
  P.col(3) = Eigen::Vector3d(pos(rng), pos(rng), pos(rng));
  return uts::CameraModel(K, P, 1000, 1000);
}

// A world point guaranteed to be in front of the camera.
inline Eigen::Vector3d point_in_front(const uts::CameraModel& cam,
                                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lateral(-3.0, 3.0);
  std::uniform_real_distribution<double> depth(2.0, 40.0);
  const Eigen::Vector3d ccs(lateral(rng), lateral(rng), depth(rng));
  return cam.camera_to_world(ccs);
}

}  // namespace test_util
