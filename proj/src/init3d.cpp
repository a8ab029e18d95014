#include "uts/init3d.hpp"

#include <cmath>
#include <random>

namespace uts {

namespace {

// Sign offsets of corner index k, matching box_corners().
Eigen::Vector3d corner_signs(int k) {
  return {(k & 1) ? 0.5 : -0.5, (k & 2) ? 0.5 : -0.5, (k & 4) ? 0.5 : -0.5};
}

Eigen::Vector2d noisy_center(const Box2D& box, double sigma, std::mt19937_64& rng,
                             std::normal_distribution<double>& n) {
  const double t = box.t + sigma * n(rng);
  const double l = box.l + sigma * n(rng);
  const double b = box.b + sigma * n(rng);
  const double r = box.r + sigma * n(rng);
  return {0.5 * (l + r), 0.5 * (t + b)};
}

}  // namespace

OrientationEstimate estimate_orientation(const CameraModel& cam,
                                         const InitPair& pair) {
  const double h_prior = pair.prior.mean_shape.z();
  const double h_var = pair.prior.covariance(2, 2);

  const Eigen::Vector3d ga = back_project_to_height(cam, pair.det_a.box.center(),
                                                    0.5 * h_prior);
  const Eigen::Vector3d gb = back_project_to_height(cam, pair.det_b.box.center(),
                                                    0.5 * h_prior);
  const Eigen::Vector2d delta = (gb - ga).head<2>();
  const double displacement = delta.norm();
  const double phi = std::atan2(delta.y(), delta.x());
  const double v = displacement / pair.tau;

  // Sampling propagation of the pixel noise and the height prior. The seed is
  // fixed: the estimate is part of the deterministic pipeline output.
  constexpr int kSamples = 4000;
  std::mt19937_64 rng(0x5eed0c0ffee);
  std::normal_distribution<double> n(0.0, 1.0);
  const double h_sigma = std::sqrt(std::max(0.0, h_var));

  std::vector<Eigen::Vector3d> samples;  // (phi residual basis, v, |delta| parts)
  samples.reserve(kSamples);
  Eigen::Vector2d delta_mean = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> deltas;
  deltas.reserve(kSamples);
  std::vector<Eigen::Vector2d> phi_vs;
  phi_vs.reserve(kSamples);

  for (int i = 0; i < kSamples; ++i) {
    const Eigen::Vector2d ca = noisy_center(pair.det_a.box, pair.detection_sigma, rng, n);
    const Eigen::Vector2d cb = noisy_center(pair.det_b.box, pair.detection_sigma, rng, n);
    const double h = std::max(0.1, h_prior + h_sigma * n(rng));
    Eigen::Vector3d pa, pb;
    try {
      pa = back_project_to_height(cam, ca, 0.5 * h);
      pb = back_project_to_height(cam, cb, 0.5 * h);
    } catch (const std::runtime_error&) {
      continue;
    }
    const Eigen::Vector2d d = (pb - pa).head<2>();
    deltas.push_back(d);
    delta_mean += d;
    phi_vs.emplace_back(std::atan2(d.y(), d.x()), d.norm() / pair.tau);
  }
  if (deltas.size() < kSamples / 2) {
    throw DegenerateMotion("too many noise samples back-project behind the camera");
  }
  delta_mean /= double(deltas.size());

  Eigen::Matrix2d delta_cov = Eigen::Matrix2d::Zero();
  for (const auto& d : deltas) {
    const Eigen::Vector2d r = d - delta_mean;
    delta_cov += r * r.transpose();
  }
  delta_cov /= double(deltas.size() - 1);
  const double position_sigma = std::sqrt(delta_cov.trace());

  if (displacement < 3.0 * position_sigma) {
    throw DegenerateMotion("ground displacement below 3x the propagated noise");
  }

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& pv : phi_vs) {
    Eigen::Vector2d r(wrap_angle(pv.x() - phi), pv.y() - v);
    cov += r * r.transpose();
  }
  cov /= double(phi_vs.size() - 1);

  OrientationEstimate est;
  est.phi_v = {Eigen::Vector2d(phi, v), cov};
  est.ground_a = ga.head<2>();
  est.ground_b = gb.head<2>();
  est.displacement = displacement;
  est.position_sigma = position_sigma;
  return est;
}

LsSystem build_ls_system(const CameraModel& cam, const InitPair& pair, double phi) {
  const double h_prior = pair.prior.mean_shape.z();
  const Eigen::Vector3d ga = back_project_to_height(cam, pair.det_a.box.center(),
                                                    0.5 * h_prior);
  const Eigen::Vector3d gb = back_project_to_height(cam, pair.det_b.box.center(),
                                                    0.5 * h_prior);

  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const Eigen::Matrix3d Rt = cam.rotation().transpose();
  const Eigen::Vector3d d0 = -Rt * cam.camera_center();

  LsSystem sys;
  int row = 0;
  for (int di = 0; di < 2; ++di) {
    const Detection& det = (di == 0) ? pair.det_a : pair.det_b;
    const Eigen::Vector3d& ground = (di == 0) ? ga : gb;
    const double vel_coeff = (di == 0) ? 0.0 : pair.tau;

    OrientedBox3D prior_box;
    prior_box.center = {ground.x(), ground.y(), 0.5 * h_prior};
    prior_box.shape = pair.prior.mean_shape;
    prior_box.yaw = wrap_angle(phi);
    const BoxOutline outline = project_box_outline(cam, prior_box);
    const auto prior_corners = box_corners(prior_box);

    const double measured[4] = {det.box.t, det.box.l, det.box.b, det.box.r};
    for (int e = 0; e < 4; ++e) {
      const int k = outline.active_corners[e];
      const Eigen::Vector3d s = corner_signs(k);

      // Corner position as an affine map of theta = (c_x, c_y, l, w, h, v).
      Eigen::Matrix<double, 3, 6> A = Eigen::Matrix<double, 3, 6>::Zero();
      A(0, 0) = 1.0;
      A(1, 1) = 1.0;
      A.col(2) = s.x() * Eigen::Vector3d(cphi, sphi, 0.0);
      A.col(3) = s.y() * Eigen::Vector3d(-sphi, cphi, 0.0);
      A(2, 4) = 0.5 + s.z();  // center z = h/2 plus the corner's own offset
      A.col(5) = vel_coeff * Eigen::Vector3d(cphi, sphi, 0.0);

      const Eigen::Matrix<double, 3, 6> B = Rt * A;

      // Horizontal edges (l, r) constrain u, vertical edges (t, b) constrain v.
      const Eigen::RowVector3d k_meas =
          (e == 1 || e == 3) ? cam.K().row(0) : cam.K().row(1);
      const Eigen::RowVector3d k_depth = cam.K().row(2);
      const Eigen::RowVector3d c = k_meas - measured[e] * k_depth;

      const double depth = k_depth.dot(cam.world_to_camera(prior_corners[k]));

      sys.M.row(row) = (c * B) / depth;
      sys.b(row) = -(c.dot(d0)) / depth;
      ++row;
    }
  }
  return sys;
}

GaussianState solve_regularized(const LsSystem& sys, const ShapePrior& prior,
                                double detection_sigma) {
  Eigen::Matrix<double, 3, 6> S = Eigen::Matrix<double, 3, 6>::Zero();
  S(0, 2) = S(1, 3) = S(2, 4) = 1.0;

  const double w_det = 1.0 / (detection_sigma * detection_sigma);
  const Eigen::Matrix3d prior_info = prior.covariance.inverse();

  const Eigen::Matrix<double, 6, 6> info =
      w_det * sys.M.transpose() * sys.M + S.transpose() * prior_info * S;
  const Eigen::Matrix<double, 6, 1> rhs =
      w_det * sys.M.transpose() * sys.b + S.transpose() * prior_info * prior.mean_shape;

  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(info);
  if (!lu.isInvertible()) {
    throw SingularSystem("combined information matrix is singular");
  }
  GaussianState out;
  out.cov = lu.inverse();
  out.mean = out.cov * rhs;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();

  if (out.mean(2) <= 0.0 || out.mean(3) <= 0.0 || out.mean(4) <= 0.0) {
    throw NonPositiveShape(out);
  }
  return out;
}

GaussianState initialize_3d(const CameraModel& cam, const InitPair& pair,
                            const OrientationEstimate* precomputed,
                            double omega_sigma) {
  OrientationEstimate local;
  if (!precomputed) {
    local = estimate_orientation(cam, pair);
    precomputed = &local;
  }
  const double phi = precomputed->phi_v.mean(0);

  const LsSystem sys = build_ls_system(cam, pair, phi);
  GaussianState theta;
  try {
    theta = solve_regularized(sys, pair.prior, pair.detection_sigma);
  } catch (const NonPositiveShape& e) {
    theta = e.solution;
    theta.mean.segment<3>(2) = pair.prior.mean_shape;
    theta.cov.block<3, 3>(2, 2) = pair.prior.covariance;
    theta.cov.block<3, 3>(2, 0).setZero();
    theta.cov.block<3, 1>(2, 5).setZero();
    theta.cov.block<3, 3>(0, 2).setZero();
    theta.cov.block<1, 3>(5, 2).setZero();
  }

  // Advance the solved center (valid at det_a's time) to det_b's time.
  Eigen::Matrix<double, 6, 6> T = Eigen::Matrix<double, 6, 6>::Identity();
  T(0, 5) = pair.tau * std::cos(phi);
  T(1, 5) = pair.tau * std::sin(phi);
  const Eigen::Matrix<double, 6, 1> mean_b = T * theta.mean;
  const Eigen::Matrix<double, 6, 6> cov_b = T * theta.cov * T.transpose();

  using namespace s3d;
  GaussianState out;
  out.mean = Eigen::VectorXd::Zero(kDim);
  out.cov = Eigen::MatrixXd::Zero(kDim, kDim);
  const int map[6] = {CX, CY, L, W, H, V};
  for (int i = 0; i < 6; ++i) {
    out.mean(map[i]) = mean_b(i);
    for (int k = 0; k < 6; ++k) out.cov(map[i], map[k]) = cov_b(i, k);
  }
  out.mean(PHI) = wrap_angle(phi);
  out.cov(PHI, PHI) = precomputed->phi_v.cov(0, 0);
  out.mean(OMEGA) = 0.0;
  out.cov(OMEGA, OMEGA) = omega_sigma * omega_sigma;
  return out;
}

}  // namespace uts
