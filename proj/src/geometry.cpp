#include "artikit/geometry.hpp"

#include <algorithm>

namespace ak {

Rigid Rigid::about_axis(const Vec3& axis, const Vec3& origin, double angle) {
  const Mat3 R = axis_angle_matrix(axis, angle);
  return {R, origin - R * origin};
}

Rigid Rigid::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Mat4 Rigid::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  // acos loses precision near 0; recover the sine from the skew part.
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * w.norm(), c);
}

Vec3 rotation_axis(const Mat3& R) {
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double n = w.norm();
  if (n > 1e-6) return w / n;
  // Angle near 0 or pi. Near pi the axis is the dominant column of R + I.
  const Mat3 B = R + Mat3::Identity();
  Eigen::Index best = 0;
  B.colwise().norm().maxCoeff(&best);
  const Vec3 col = B.col(best);
  if (col.norm() < 1e-12) return Vec3::UnitZ();
  return col.normalized();
}

Mat3 axis_angle_matrix(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

bool is_rotation(const Mat3& R, double tol) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
         std::abs(R.determinant() - 1.0) < tol;
}

}  // namespace ak
