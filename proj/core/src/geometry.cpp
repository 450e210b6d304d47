#include "miloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "miloc/error.hpp"

namespace miloc {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return R;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return R;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return R;
}

namespace {

Mat3 d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << 0, 0, 0,
       0, -s, -c,
       0, c, -s;
  return R;
}

Mat3 d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << -s, 0, c,
       0, 0, 0,
       -c, 0, -s;
  return R;
}

Mat3 d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << -s, -c, 0,
       c, -s, 0,
       0, 0, 0;
  return R;
}

}  // namespace

Mat3 euler_to_rotation(const EulerAngles& e) {
  return rot_z(e.alpha) * rot_y(e.beta) * rot_x(e.gamma);
}

std::array<Mat3, 3> euler_rotation_derivatives(const EulerAngles& e) {
  const Mat3 Rz = rot_z(e.alpha), Ry = rot_y(e.beta), Rx = rot_x(e.gamma);
  return {d_rot_z(e.alpha) * Ry * Rx, Rz * d_rot_y(e.beta) * Rx, Rz * Ry * d_rot_x(e.gamma)};
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double w = std::remainder(a, 2.0 * pi);  // [-pi, pi]
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const Mat3 gram = R.transpose() * R;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

EulerAngles rotation_to_euler(const Mat3& R, double tol) {
  if (!is_rotation(R, tol)) {
    throw Error(ErrorKind::NotARotation, "matrix is not a proper rotation");
  }
  // R = Rz(a) Ry(b) Rx(g):
  //   R(2,0) = -sin b, R(1,0)/R(0,0) = tan a, R(2,1)/R(2,2) = tan g
  const double cb = std::hypot(R(0, 0), R(1, 0));
  EulerAngles e;
  e.beta = std::atan2(-R(2, 0), cb);
  if (cb > 1e-12) {
    e.alpha = std::atan2(R(1, 0), R(0, 0));
    e.gamma = std::atan2(R(2, 1), R(2, 2));
  } else {
    // Gimbal lock: only alpha -/+ gamma is determined. With gamma = 0 the
    // second column of Rz(a) Ry(b) is [-sin a, cos a, 0].
    e.beta = R(2, 0) < 0.0 ? std::numbers::pi / 2 : -std::numbers::pi / 2;
    e.alpha = std::atan2(-R(0, 1), R(1, 1));
    e.gamma = 0.0;
  }
  e.alpha = wrap_angle(e.alpha);
  e.gamma = wrap_angle(e.gamma);
  return e;
}

EulerAngles canonicalize(const EulerAngles& e) {
  return rotation_to_euler(euler_to_rotation(e), 1e-6);
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  // atan2 form stays accurate for tiny angles where acos does not.
  const Mat3 q = a * b.transpose();
  const double c = 0.5 * (q.trace() - 1.0);
  const double s = (q - q.transpose()).norm() / (2.0 * std::sqrt(2.0));
  return std::atan2(s, c);
}

Mat3 sample_uniform_rotation(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-12);
  q.normalize();
  return q.toRotationMatrix();
}

Vec3 Room::sample_uniform(Rng& rng) const {
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> u(min_corner[i], max_corner[i]);
    do {
      p[i] = u(rng);
    } while (p[i] <= min_corner[i]);
  }
  return p;
}

}  // namespace miloc
