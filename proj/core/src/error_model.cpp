#include "teleop/error_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "teleop/errors.hpp"

namespace teleop::error_model {

namespace {

void check_angles(const KinematicChain& chain, std::span<const double> angles) {
  if (angles.size() != chain.size()) {
    std::ostringstream msg;
    msg << "expected " << chain.size() << " joint angles, got " << angles.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  for (const double a : angles) {
    if (!std::isfinite(a)) throw Error(ErrorCode::NonFinite, "joint angle is not finite");
  }
}

// Acklam's rational approximation to the standard normal quantile; relative
// error below 1.2e-9 before refinement.
double quantile_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

GaussianSpec make_gaussian(double mean, double sigma) {
  if (!std::isfinite(mean) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::NonFinite, "gaussian parameters must be finite");
  }
  if (sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "gaussian sigma must be >= 0");
  return {mean, sigma};
}

KinematicChain::KinematicChain(std::vector<Joint> joints) : joints_(std::move(joints)) {
  if (joints_.empty()) throw Error(ErrorCode::InvalidArgument, "kinematic chain is empty");
  for (const auto& j : joints_) {
    if (!j.axis.allFinite() || !j.link.is_finite() || !std::isfinite(j.encoder_error)) {
      throw Error(ErrorCode::NonFinite, "kinematic chain has non-finite entries");
    }
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "joint axis must be a unit vector");
    }
    if (j.encoder_error < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "encoder error must be >= 0");
    }
  }
}

Pose forward_kinematics(const KinematicChain& chain, std::span<const double> angles) {
  check_angles(chain, angles);
  Pose t;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& j = chain.joints()[i];
    t = t * Pose::axis_angle(j.axis, angles[i]) * j.link;
  }
  // Re-orthonormalize so long chains do not drift.
  Eigen::JacobiSVD<Mat3> svd(t.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  t.rotation = svd.matrixU() * svd.matrixV().transpose();
  return t;
}

Eigen::Matrix3Xd position_jacobian(const KinematicChain& chain, std::span<const double> angles) {
  check_angles(chain, angles);
  const std::size_t n = chain.size();
  std::vector<Vec3> axes(n);
  std::vector<Vec3> origins(n);
  Pose t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& j = chain.joints()[i];
    axes[i] = t.rotation * j.axis;
    origins[i] = t.translation;
    t = t * Pose::axis_angle(j.axis, angles[i]) * j.link;
  }
  Eigen::Matrix3Xd jac(3, n);
  for (std::size_t i = 0; i < n; ++i) {
    jac.col(static_cast<Eigen::Index>(i)) = axes[i].cross(t.translation - origins[i]);
  }
  return jac;
}

Eigen::Matrix3Xd position_jacobian_fd(const KinematicChain& chain, std::span<const double> angles,
                                      double step) {
  check_angles(chain, angles);
  const std::size_t n = chain.size();
  std::vector<double> q(angles.begin(), angles.end());
  Eigen::Matrix3Xd jac(3, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q0 = q[i];
    q[i] = q0 + step;
    const Vec3 plus = forward_kinematics(chain, q).translation;
    q[i] = q0 - step;
    const Vec3 minus = forward_kinematics(chain, q).translation;
    q[i] = q0;
    jac.col(static_cast<Eigen::Index>(i)) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

GaussianSpec propagate_position_error(const KinematicChain& chain,
                                      std::span<const double> angles) {
  const Eigen::Matrix3Xd jac = position_jacobian_fd(chain, angles);
  double var = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const double term =
        jac.col(static_cast<Eigen::Index>(i)).norm() * chain.joints()[i].encoder_error;
    var += term * term;
  }
  return {0.0, std::sqrt(var)};
}

double delay_displacement(const Vec3& velocity, double delay) {
  if (!velocity.allFinite() || !std::isfinite(delay)) {
    throw Error(ErrorCode::NonFinite, "delay displacement inputs must be finite");
  }
  if (delay < 0.0) throw Error(ErrorCode::NegativeDelay, "delay must be >= 0");
  return velocity.norm() * delay;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double p, double mean, double variance) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream msg;
    msg << "probability out of range: " << p << " (need 0 < p < 1)";
    throw Error(ErrorCode::ProbabilityOutOfRange, msg.str());
  }
  if (!std::isfinite(mean) || !std::isfinite(variance)) {
    throw Error(ErrorCode::NonFinite, "inverse_normal_cdf: non-finite parameters");
  }
  if (variance < 0.0) throw Error(ErrorCode::InvalidArgument, "variance must be >= 0");
  if (variance == 0.0) return mean;

  double x = quantile_initial(p);
  // One Halley step against the erfc-based CDF.
  const double err = normal_cdf(x) - p;
  const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return mean + std::sqrt(variance) * x;
}

ErrorBudget enlargement_distance(const GaussianSpec& camera, const GaussianSpec& end_effector,
                                 double delay_disp, double probability) {
  if (!std::isfinite(delay_disp)) throw Error(ErrorCode::NonFinite, "delay displacement not finite");
  if (delay_disp < 0.0) throw Error(ErrorCode::NegativeDelay, "delay displacement must be >= 0");
  ErrorBudget b;
  b.camera = make_gaussian(camera.mean, camera.sigma);
  b.end_effector = make_gaussian(end_effector.mean, end_effector.sigma);
  b.delay_displacement = delay_disp;
  b.probability = probability;
  b.quantile = inverse_normal_cdf(probability, end_effector.mean + camera.mean,
                                  end_effector.sigma * end_effector.sigma +
                                      camera.sigma * camera.sigma);
  b.enlargement_distance = delay_disp + b.quantile;
  return b;
}

}  // namespace teleop::error_model
