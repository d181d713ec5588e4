#pragma once

#include <span>
#include <vector>

#include "teleop/pose.hpp"

namespace teleop::error_model {

/// Scalar normal distribution N(mean, sigma^2), in meters.
struct GaussianSpec {
  double mean = 0.0;
  double sigma = 0.0;
};

GaussianSpec make_gaussian(double mean, double sigma);

struct Joint {
  Vec3 axis = Vec3::UnitZ();  // unit revolute axis in the joint frame
  Pose link;                  // transform from the rotated joint frame to the next frame
  double encoder_error = 0.0; // 1-sigma angle error, radians
};

/// Serial revolute chain; joint i contributes Rot(axis_i, q_i) * link_i.
class KinematicChain {
 public:
  explicit KinematicChain(std::vector<Joint> joints);

  std::size_t size() const { return joints_.size(); }
  const std::vector<Joint>& joints() const { return joints_; }

 private:
  std::vector<Joint> joints_;
};

Pose forward_kinematics(const KinematicChain& chain, std::span<const double> angles);

/// 3 x n position Jacobian from the geometric (axis x lever arm) formula.
Eigen::Matrix3Xd position_jacobian(const KinematicChain& chain, std::span<const double> angles);

/// Central-difference position sensitivities, step in radians.
inline constexpr double kSensitivityStep = 1e-6;
Eigen::Matrix3Xd position_jacobian_fd(const KinematicChain& chain, std::span<const double> angles,
                                      double step = kSensitivityStep);

/// Zero-mean spec with sigma = sqrt(sum_i (|dp/dq_i| * encoder_error_i)^2).
GaussianSpec propagate_position_error(const KinematicChain& chain,
                                      std::span<const double> angles);

/// |velocity| * delay. Throws Error{NegativeDelay}.
double delay_displacement(const Vec3& velocity, double delay);

/// Standard normal CDF.
double normal_cdf(double x);

/// x such that Phi((x - mean) / sqrt(variance)) = p. Throws
/// Error{ProbabilityOutOfRange} unless 0 < p < 1.
double inverse_normal_cdf(double p, double mean = 0.0, double variance = 1.0);

struct ErrorBudget {
  GaussianSpec camera;
  GaussianSpec end_effector;
  double delay_displacement = 0.0;
  double probability = 0.5;
  /// Quantile of the combined camera + end-effector error.
  double quantile = 0.0;
  double enlargement_distance = 0.0;
};

/// D(P) = delay_disp + Phi^-1(P; mu_ee + mu_c, sigma_ee^2 + sigma_c^2).
ErrorBudget enlargement_distance(const GaussianSpec& camera, const GaussianSpec& end_effector,
                                 double delay_disp, double probability);

}  // namespace teleop::error_model
