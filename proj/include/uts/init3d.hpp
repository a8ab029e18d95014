#pragma once

#include <Eigen/Dense>

#include "uts/detection.hpp"
#include "uts/dynamics.hpp"
#include "uts/estimation.hpp"
#include "uts/geometry.hpp"

namespace uts {

struct DegenerateMotion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Carries the clamped solution so the caller can fall back to the prior
/// shape while keeping the solved center and velocity.
struct NonPositiveShape : std::runtime_error {
  GaussianState solution;
  explicit NonPositiveShape(GaussianState sol)
      : std::runtime_error("solved shape has a non-positive component"),
        solution(std::move(sol)) {}
};

/// Two fully valid detections of the same track with enough translation
/// between them to make the orientation observable.
struct InitPair {
  Detection det_a;
  Detection det_b;
  double tau = 0.0;
  ShapePrior prior;
  double detection_sigma = 2.0;
};

struct OrientationEstimate {
  GaussianState phi_v;  // dim 2: (phi, v)
  Eigen::Vector2d ground_a;  // back-projected box centers at z = h_prior / 2
  Eigen::Vector2d ground_b;
  double displacement = 0.0;
  double position_sigma = 0.0;  // propagated std of the planar displacement
};

/// Back-projects both box centers to height prior_mean_h / 2 and derives
/// heading and speed from the displacement. The (phi, v) covariance is
/// obtained by sampling propagation of detection pixel noise and the prior
/// height variance. Throws DegenerateMotion when the displacement is below
/// 3x the propagated position noise.
OrientationEstimate estimate_orientation(const CameraModel& cam, const InitPair& pair);

struct LsSystem {
  Eigen::Matrix<double, 8, 6> M;
  Eigen::Matrix<double, 8, 1> b;
};

/// Builds the cross-multiplied pinhole constraint system over the unknowns
/// theta = (c_x, c_y, l, w, h, v): one row per box edge of the two detections.
/// Active corners are taken from prior-shape boxes at the back-projected
/// centers and held fixed; each row is normalized by the active corner's CCS
/// depth so row residuals approximate pixel errors.
LsSystem build_ls_system(const CameraModel& cam, const InitPair& pair, double phi);

/// Minimizes the detection term ||M theta - b||^2 weighted by sigma^-2 plus
/// the prior term on the shape block, via normal equations. The returned
/// covariance is the inverse of the combined information matrix.
GaussianState solve_regularized(const LsSystem& sys, const ShapePrior& prior,
                                double detection_sigma);

/// Full promotion: orientation estimate, LS build and solve, assembled as a
/// GaussianState over the 3D stage layout at the time of det_b. omega starts
/// at zero with a loose prior; cross covariances between the theta, phi and
/// omega blocks are zero.
GaussianState initialize_3d(const CameraModel& cam, const InitPair& pair,
                            const OrientationEstimate* precomputed = nullptr,
                            double omega_sigma = 0.3);

}  // namespace uts
