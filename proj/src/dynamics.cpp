#include "uts/dynamics.hpp"

#include <cmath>

namespace uts {

Vec10 transition_2d(const Vec10& x, double tau) {
  using namespace s2d;
  Vec10 y = x;
  y(CX) = x(CX) + x(VX) * tau + 0.5 * x(AX) * tau * tau;
  y(CY) = x(CY) + x(VY) * tau + 0.5 * x(AY) * tau * tau;
  y(SW) = x(SW) * std::exp(x(DSW) * tau);
  y(SH) = x(SH) * std::exp(x(DSH) * tau);
  y(VX) = x(VX) + x(AX) * tau;
  y(VY) = x(VY) + x(AY) * tau;
  return y;
}

Eigen::Matrix<double, 10, 10> transition_2d_jacobian(const Vec10& x, double tau) {
  using namespace s2d;
  Eigen::Matrix<double, 10, 10> F = Eigen::Matrix<double, 10, 10>::Identity();
  F(CX, VX) = tau;
  F(CY, VY) = tau;
  F(CX, AX) = 0.5 * tau * tau;
  F(CY, AY) = 0.5 * tau * tau;
  F(VX, AX) = tau;
  F(VY, AY) = tau;
  const double ew = std::exp(x(DSW) * tau);
  const double eh = std::exp(x(DSH) * tau);
  F(SW, SW) = ew;
  F(SH, SH) = eh;
  F(SW, DSW) = x(SW) * tau * ew;
  F(SH, DSH) = x(SH) * tau * eh;
  return F;
}

Eigen::Vector4d observe_2d(const Vec10& x) { return x.head<4>(); }

Eigen::Matrix<double, 4, 10> observe_2d_jacobian() {
  Eigen::Matrix<double, 4, 10> H = Eigen::Matrix<double, 4, 10>::Zero();
  H.leftCols<4>().setIdentity();
  return H;
}

Box2D box_from_cs(const Eigen::Vector2d& c, const Eigen::Vector2d& s) {
  return {c.y() - 0.5 * s.y(), c.x() - 0.5 * s.x(), c.y() + 0.5 * s.y(),
          c.x() + 0.5 * s.x()};
}

std::pair<Eigen::Vector2d, Eigen::Vector2d> cs_from_box(const Box2D& box) {
  const double w = box.r - box.l;
  const double h = box.b - box.t;
  if (w <= 0.0 || h <= 0.0) throw DegenerateBox("box has non-positive extent");
  return {box.center(), Eigen::Vector2d(w, h)};
}

Vec8 transition_3d(const Vec8& x, double tau) {
  using namespace s3d;
  const double phi = x(PHI);
  const double v = x(V);
  const double omega = x(OMEGA);
  Vec8 y = x;
  if (std::abs(omega) >= 1e-6) {
    y(CX) = x(CX) + v / omega * (std::sin(phi + omega * tau) - std::sin(phi));
    y(CY) = x(CY) + v / omega * (std::cos(phi) - std::cos(phi + omega * tau));
  } else {
    const double mid = phi + 0.5 * omega * tau;
    y(CX) = x(CX) + v * tau * std::cos(mid);
    y(CY) = x(CY) + v * tau * std::sin(mid);
  }
  y(PHI) = wrap_angle(phi + omega * tau);
  return y;
}

OrientedBox3D box_from_state(const Vec8& x) {
  using namespace s3d;
  OrientedBox3D box;
  box.center = {x(CX), x(CY), 0.5 * x(H)};
  box.shape = {x(L), x(W), x(H)};
  box.yaw = wrap_angle(x(PHI));
  return box;
}

BoxOutline observe_3d_outline(const CameraModel& cam, const Vec8& x) {
  return project_box_outline(cam, box_from_state(x));
}

Eigen::Vector4d observe_3d(const CameraModel& cam, const Vec8& x) {
  const Box2D b = observe_3d_outline(cam, x).box;
  return {b.t, b.l, b.b, b.r};
}

Eigen::VectorXd observe_3d_masked(const CameraModel& cam, const Vec8& x,
                                  const std::array<bool, 4>& edge_valid) {
  int k = 0;
  for (bool v : edge_valid) k += int(v);
  if (k == 0) throw NoValidEdges("all four edges are invalid");
  const Eigen::Vector4d full = observe_3d(cam, x);
  Eigen::VectorXd out(k);
  int j = 0;
  for (int e = 0; e < 4; ++e) {
    if (edge_valid[e]) out(j++) = full(e);
  }
  return out;
}

}  // namespace uts
