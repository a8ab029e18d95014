#include "uts/estimation.hpp"

#include <cmath>

#include "uts/geometry.hpp"

namespace uts {

GaussianState propagate_linear(const GaussianState& g, const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b) {
  GaussianState out;
  out.mean = A * g.mean + b;
  out.cov = A * g.cov * A.transpose();
  return out;
}

GaussianState propagate_jacobian(const GaussianState& g, const VectorMap& f,
                                 const Eigen::MatrixXd& J) {
  GaussianState out;
  out.mean = f(g.mean);
  out.cov = J * g.cov * J.transpose();
  return out;
}

Eigen::MatrixXd cholesky_with_repair(const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  sym += 1e-9 * Eigen::MatrixXd::Identity(sym.rows(), sym.cols());
  llt.compute(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  throw CovarianceNotPSD("covariance has no Cholesky factor after jitter repair");
}

SigmaPointSet sigma_points(const GaussianState& g, const UTParams& ut) {
  const int n = g.dim();
  const double lambda = ut.alpha * ut.alpha * (n + ut.kappa) - n;
  const double scale = n + lambda;

  const Eigen::MatrixXd L = cholesky_with_repair(g.cov);

  SigmaPointSet set;
  set.points.reserve(2 * n + 1);
  set.points.push_back(g.mean);
  const Eigen::MatrixXd spread = std::sqrt(scale) * L;
  for (int i = 0; i < n; ++i) set.points.push_back(g.mean + spread.col(i));
  for (int i = 0; i < n; ++i) set.points.push_back(g.mean - spread.col(i));

  set.mean_weights = Eigen::VectorXd::Constant(2 * n + 1, 0.5 / scale);
  set.cov_weights = set.mean_weights;
  set.mean_weights(0) = lambda / scale;
  set.cov_weights(0) = lambda / scale + (1.0 - ut.alpha * ut.alpha + ut.beta);
  return set;
}

GaussianState reconstruct(const std::vector<Eigen::VectorXd>& points,
                          const Eigen::VectorXd& mean_weights,
                          const Eigen::VectorXd& cov_weights,
                          const std::vector<int>& angle_dims) {
  const int n = int(points.front().size());
  const int m = int(points.size());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) mean += mean_weights(i) * points[i];
  for (int d : angle_dims) {
    double s = 0.0, c = 0.0;
    for (int i = 0; i < m; ++i) {
      s += mean_weights(i) * std::sin(points[i](d));
      c += mean_weights(i) * std::cos(points[i](d));
    }
    mean(d) = std::atan2(s, c);
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd r = points[i] - mean;
    for (int d : angle_dims) r(d) = wrap_angle(r(d));
    cov += cov_weights(i) * r * r.transpose();
  }
  return {mean, 0.5 * (cov + cov.transpose())};
}

GaussianState ukf_predict(const GaussianState& g, const VectorMap& f,
                          const Eigen::MatrixXd& Q,
                          const std::vector<int>& angle_dims, const UTParams& ut) {
  SigmaPointSet set = sigma_points(g, ut);
  for (auto& p : set.points) p = f(p);
  GaussianState out = reconstruct(set.points, set.mean_weights, set.cov_weights,
                                  angle_dims);
  out.cov += Q;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

GaussianState ukf_update(const GaussianState& g, const VectorMap& h,
                         const Eigen::VectorXd& z, const Eigen::MatrixXd& R,
                         const std::vector<int>& state_angle_dims,
                         const std::vector<int>& meas_angle_dims,
                         const UTParams& ut) {
  const SigmaPointSet set = sigma_points(g, ut);
  const int m = int(set.points.size());

  std::vector<Eigen::VectorXd> zs(m);
  for (int i = 0; i < m; ++i) zs[i] = h(set.points[i]);

  const GaussianState pred = reconstruct(zs, set.mean_weights, set.cov_weights,
                                         meas_angle_dims);
  Eigen::MatrixXd S = pred.cov + R;

  const int nz = int(z.size());
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(g.dim(), nz);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd dx = set.points[i] - g.mean;
    for (int d : state_angle_dims) dx(d) = wrap_angle(dx(d));
    Eigen::VectorXd dz = zs[i] - pred.mean;
    for (int d : meas_angle_dims) dz(d) = wrap_angle(dz(d));
    cross += set.cov_weights(i) * dx * dz.transpose();
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() < 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw InnovationCovSingular("innovation covariance is numerically singular");
  }
  const Eigen::MatrixXd K = ldlt.solve(cross.transpose()).transpose();

  Eigen::VectorXd innov = z - pred.mean;
  for (int d : meas_angle_dims) innov(d) = wrap_angle(innov(d));

  GaussianState out;
  out.mean = g.mean + K * innov;
  for (int d : state_angle_dims) out.mean(d) = wrap_angle(out.mean(d));
  out.cov = g.cov - K * S * K.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

GaussianState ekf_update(const GaussianState& g, const VectorMap& h,
                         const Eigen::MatrixXd& H, const Eigen::VectorXd& z,
                         const Eigen::MatrixXd& R) {
  const Eigen::MatrixXd S = H * g.cov * H.transpose() + R;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() < 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw InnovationCovSingular("innovation covariance is numerically singular");
  }
  const Eigen::MatrixXd K = ldlt.solve(H * g.cov).transpose();

  GaussianState out;
  out.mean = g.mean + K * (z - h(g.mean));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(g.dim(), g.dim());
  const Eigen::MatrixXd A = I - K * H;
  out.cov = A * g.cov * A.transpose() + K * R * K.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace uts
