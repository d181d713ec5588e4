#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace teleop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform x -> rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose from_translation(const Vec3& t) {
    Pose p;
    p.translation = t;
    return p;
  }

  /// q must be unit; callers validating external input check this first.
  static Pose from_quaternion(const Quat& q, const Vec3& t) {
    Pose p;
    p.rotation = q.toRotationMatrix();
    p.translation = t;
    return p;
  }

  static Pose axis_angle(const Vec3& unit_axis, double angle) {
    Pose p;
    p.rotation = Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
    return p;
  }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  Vec3 apply_inverse(const Vec3& x) const {
    return rotation.transpose() * (x - translation);
  }

  Pose inverse() const {
    Pose p;
    p.rotation = rotation.transpose();
    p.translation = -(p.rotation * translation);
    return p;
  }

  Quat quaternion() const {
    Quat q(rotation);
    q.normalize();
    // Canonical sign keeps serialized output stable.
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return q;
  }

  bool is_finite() const {
    return rotation.allFinite() && translation.allFinite();
  }

  friend Pose operator*(const Pose& a, const Pose& b) {
    Pose p;
    p.rotation = a.rotation * b.rotation;
    p.translation = a.rotation * b.translation + a.translation;
    return p;
  }
};

/// Largest absolute entry of R^T R - I.
inline double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace teleop
