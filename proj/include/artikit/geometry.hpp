#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace ak {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform x -> R x + t.
struct Rigid {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static Rigid identity() { return {}; }
  static Rigid translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Rigid rotation(const Mat3& R) { return {R, Vec3::Zero()}; }
  /// Rotation by `angle` about the line through `origin` with direction `axis`.
  static Rigid about_axis(const Vec3& axis, const Vec3& origin, double angle);
  static Rigid from_matrix(const Mat4& m);

  Vec3 apply(const Vec3& x) const { return R * x + t; }
  Vec3 operator*(const Vec3& x) const { return apply(x); }
  Rigid operator*(const Rigid& o) const { return {R * o.R, R * o.t + t}; }
  Rigid inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
  Mat4 matrix() const;
};

/// Rotation angle in [0, pi] from the trace formula.
double rotation_angle(const Mat3& R);

/// Unit rotation axis (arbitrary unit vector for near-identity input).
Vec3 rotation_axis(const Mat3& R);

Mat3 axis_angle_matrix(const Vec3& axis, double angle);

/// True when R is orthonormal with det +1 within `tol`.
bool is_rotation(const Mat3& R, double tol = 1e-9);

}  // namespace ak
