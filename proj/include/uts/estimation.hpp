#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace uts {

struct CovarianceNotPSD : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InnovationCovSingular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean vector plus covariance matrix; the universal uncertain-quantity
/// carrier of the tracker.
struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return int(mean.size()); }
};

/// Scaled unscented transform parameters.
struct UTParams {
  double alpha = 0.5;
  double beta = 2.0;
  double kappa = 0.0;
};

struct SigmaPointSet {
  std::vector<Eigen::VectorXd> points;  // 2n+1, center first
  Eigen::VectorXd mean_weights;
  Eigen::VectorXd cov_weights;
};

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// mean' = A mean + b, cov' = A cov A^T.
GaussianState propagate_linear(const GaussianState& g, const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b);

/// mean' = f(mean), cov' = J cov J^T with J the Jacobian of f at the mean.
GaussianState propagate_jacobian(const GaussianState& g, const VectorMap& f,
                                 const Eigen::MatrixXd& J);

/// Symmetrizes and, if needed, adds a single 1e-9 jitter so the Cholesky
/// factorization succeeds; throws CovarianceNotPSD if it still fails.
Eigen::MatrixXd cholesky_with_repair(const Eigen::MatrixXd& cov);

SigmaPointSet sigma_points(const GaussianState& g, const UTParams& ut);

/// Reconstructs mean and covariance from (possibly transformed) sigma points.
/// Angular dimensions use a circular mean and wrapped residuals.
GaussianState reconstruct(const std::vector<Eigen::VectorXd>& points,
                          const Eigen::VectorXd& mean_weights,
                          const Eigen::VectorXd& cov_weights,
                          const std::vector<int>& angle_dims);

GaussianState ukf_predict(const GaussianState& g, const VectorMap& f,
                          const Eigen::MatrixXd& Q,
                          const std::vector<int>& angle_dims,
                          const UTParams& ut = {});

GaussianState ukf_update(const GaussianState& g, const VectorMap& h,
                         const Eigen::VectorXd& z, const Eigen::MatrixXd& R,
                         const std::vector<int>& state_angle_dims,
                         const std::vector<int>& meas_angle_dims = {},
                         const UTParams& ut = {});

/// Standard EKF measurement update with Joseph-form covariance.
GaussianState ekf_update(const GaussianState& g, const VectorMap& h,
                         const Eigen::MatrixXd& H, const Eigen::VectorXd& z,
                         const Eigen::MatrixXd& R);

}  // namespace uts
