#pragma once

#include <Eigen/Dense>

#include <array>

#include "miloc/random.hpp"

namespace miloc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Intrinsic Z-Y-X Euler angles: O = Rz(alpha) * Ry(beta) * Rx(gamma).
struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

Mat3 euler_to_rotation(const EulerAngles& e);

/// Partial derivatives of euler_to_rotation with respect to alpha, beta, gamma.
std::array<Mat3, 3> euler_rotation_derivatives(const EulerAngles& e);

/// Inverse of euler_to_rotation with alpha, gamma in (-pi, pi] and
/// beta in [-pi/2, pi/2]. At gimbal lock gamma is set to 0.
/// Throws NotARotation if R is not a proper rotation within `tol`.
EulerAngles rotation_to_euler(const Mat3& R, double tol = 1e-8);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Euler angles with alpha, gamma in (-pi, pi] and beta in [-pi/2, pi/2],
/// describing the same rotation as `e`.
EulerAngles canonicalize(const EulerAngles& e);

bool is_rotation(const Mat3& R, double tol = 1e-10);

/// Geodesic angle (rad) between two rotations.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Haar-uniform rotation from a normalized 4-D Gaussian quaternion.
Mat3 sample_uniform_rotation(Rng& rng);

/// Position plus orientation of one three-axis coil node.
class Deployment {
 public:
  Deployment() = default;
  Deployment(const Vec3& position, const EulerAngles& euler)
      : position_(position), euler_(euler), rotation_(euler_to_rotation(euler)) {}

  static Deployment from_rotation(const Vec3& position, const Mat3& R) {
    return Deployment(position, rotation_to_euler(R));
  }

  const Vec3& position() const { return position_; }
  const EulerAngles& euler() const { return euler_; }
  const Mat3& rotation() const { return rotation_; }

 private:
  Vec3 position_ = Vec3::Zero();
  EulerAngles euler_{};
  Mat3 rotation_ = Mat3::Identity();
};

/// Axis-aligned box; membership tests treat it as closed.
struct Room {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Constant(1.5);

  static Room cube(double edge) { return Room{Vec3::Zero(), Vec3::Constant(edge)}; }

  bool valid() const { return (max_corner.array() > min_corner.array()).all(); }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min_corner.array() - tol).all() &&
           (p.array() <= max_corner.array() + tol).all();
  }
  bool strictly_contains(const Vec3& p) const {
    return (p.array() > min_corner.array()).all() && (p.array() < max_corner.array()).all();
  }
  Vec3 center() const { return 0.5 * (min_corner + max_corner); }
  Vec3 extent() const { return max_corner - min_corner; }
  double diagonal() const { return extent().norm(); }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min_corner).cwiseMin(max_corner); }
  /// Euclidean distance from p to the box (0 inside).
  double distance_to(const Vec3& p) const { return (p - clamp(p)).norm(); }
  Vec3 sample_uniform(Rng& rng) const;
};

}  // namespace miloc
