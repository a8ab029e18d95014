#pragma once

#include <array>

#include <Eigen/Dense>

#include "uts/geometry.hpp"

namespace uts {

struct DegenerateBox : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoValidEdges : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 2D stage state layout (dimension 10):
//   [cx, cy, sw, sh, vx, vy, dsw, dsh, ax, ay]
// c: box center px, s: box width/height px, v: px/s, ds: logarithmic scale
// rate 1/s, a: px/s^2.
namespace s2d {
constexpr int kDim = 10;
constexpr int CX = 0, CY = 1, SW = 2, SH = 3, VX = 4, VY = 5, DSW = 6, DSH = 7,
              AX = 8, AY = 9;
}  // namespace s2d

// 3D stage state layout (dimension 8):
//   [cx, cy, l, w, h, phi, v, omega]
// Planar WCS center (z is slaved to h/2), shape in meters, heading phi from
// the WCS +x axis (counterclockwise), speed m/s, turn rate rad/s.
namespace s3d {
constexpr int kDim = 8;
constexpr int CX = 0, CY = 1, L = 2, W = 3, H = 4, PHI = 5, V = 6, OMEGA = 7;
}  // namespace s3d

using Vec10 = Eigen::Matrix<double, 10, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

/// Constant-acceleration translation with exponential scale change.
Vec10 transition_2d(const Vec10& x, double tau);

/// Jacobian of transition_2d at x.
Eigen::Matrix<double, 10, 10> transition_2d_jacobian(const Vec10& x, double tau);

/// Extracts (cx, cy, sw, sh) from the 2D state.
Eigen::Vector4d observe_2d(const Vec10& x);

/// The constant 4x10 selector matrix of observe_2d.
Eigen::Matrix<double, 4, 10> observe_2d_jacobian();

Box2D box_from_cs(const Eigen::Vector2d& c, const Eigen::Vector2d& s);
/// Returns (center, size); throws DegenerateBox on zero-area boxes.
std::pair<Eigen::Vector2d, Eigen::Vector2d> cs_from_box(const Box2D& box);

/// Coordinated turn model with polar velocity: constant speed and turn rate
/// on a circular arc. Below |omega| = 1e-6 rad/s a second-order
/// midpoint-heading expansion replaces the exact arc to avoid dividing by
/// omega. phi is normalized to (-pi, pi].
Vec8 transition_3d(const Vec8& x, double tau);

/// Assembles the oriented 3D box of a 3D state (ground contact: center z = h/2).
OrientedBox3D box_from_state(const Vec8& x);

/// Projected outline (t, l, b, r) of the state's 3D box.
Eigen::Vector4d observe_3d(const CameraModel& cam, const Vec8& x);
BoxOutline observe_3d_outline(const CameraModel& cam, const Vec8& x);

/// Valid-edge subset of observe_3d, in (t, l, b, r) order.
Eigen::VectorXd observe_3d_masked(const CameraModel& cam, const Vec8& x,
                                  const std::array<bool, 4>& edge_valid);

}  // namespace uts
