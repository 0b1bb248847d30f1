#include "artikit/volume.hpp"

#include <cmath>
#include <stdexcept>

namespace ak {

void DepthView::validate() const {
  if (!(K.fx > 0.0) || !(K.fy > 0.0))
    throw std::invalid_argument("DepthView: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("DepthView: empty image");
  const std::size_t n = std::size_t(width) * height;
  if (depth.size() != n || mask.size() != n)
    throw std::invalid_argument("DepthView: depth/mask size does not match image");
  for (float d : depth)
    if (!(d >= 0.0f) || !std::isfinite(d))
      throw std::invalid_argument("DepthView: depth must be finite and non-negative");
  if (!is_rotation(pose.R, 1e-6))
    throw std::invalid_argument("DepthView: pose rotation is not orthonormal with det +1");
}

std::optional<Vec2> DepthView::project(const Vec3& world, double* z) const {
  const Vec3 pc = pose.apply(world);
  if (z) *z = pc.z();
  if (!(pc.z() > 1e-9)) return std::nullopt;
  return Vec2(K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy);
}

Eigen::Matrix<double, 2, 3> DepthView::projection_jacobian(const Vec3& world) const {
  const Vec3 pc = pose.apply(world);
  const double iz = 1.0 / pc.z();
  Eigen::Matrix<double, 2, 3> Jc;
  Jc << K.fx * iz, 0.0, -K.fx * pc.x() * iz * iz,
        0.0, K.fy * iz, -K.fy * pc.y() * iz * iz;
  return Jc * pose.R;
}

Vec3 DepthView::unproject(const Vec2& px, double z) const {
  const Vec3 pc((px.x() - K.cx) / K.fx * z, (px.y() - K.cy) / K.fy * z, z);
  return pose.R.transpose() * (pc - pose.t);
}

Vec3 DepthView::ray_direction(const Vec2& px) const {
  const Vec3 dc((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, 1.0);
  return (pose.R.transpose() * dc).normalized();
}

double DepthView::interpolated_depth(const Vec2& px) const {
  if (!in_image(px)) return 0.0;
  // pixel centres sit at integer + 0.5
  const double u = px.x() - 0.5, v = px.y() - 0.5;
  const int c0 = static_cast<int>(std::floor(u)), r0 = static_cast<int>(std::floor(v));
  if (c0 >= 0 && r0 >= 0 && c0 + 1 < width && r0 + 1 < height) {
    const double d00 = depth_at(c0, r0), d10 = depth_at(c0 + 1, r0);
    const double d01 = depth_at(c0, r0 + 1), d11 = depth_at(c0 + 1, r0 + 1);
    if (d00 > 0 && d10 > 0 && d01 > 0 && d11 > 0) {
      const double fu = u - c0, fv = v - r0;
      const double inv = (1 - fu) * (1 - fv) / d00 + fu * (1 - fv) / d10 +
                         (1 - fu) * fv / d01 + fu * fv / d11;
      return 1.0 / inv;
    }
  }
  return depth_at(static_cast<int>(px.x()), static_cast<int>(px.y()));
}

Rigid look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return {R, -(R * eye)};
}

bool visibility(const Vec3& x, std::span<const DepthView> views, double eps) {
  for (const DepthView& v : views) {
    double z = 0.0;
    const auto px = v.project(x, &z);
    if (!px || !v.in_image(*px)) continue;
    const double d = v.depth_at(static_cast<int>(px->x()), static_cast<int>(px->y()));
    if (d > 0.0 && d + eps > z) return true;
  }
  return false;
}

VolumeGrid visibility_grid(std::span<const DepthView> views, const GridSpec& spec,
                           double eps) {
  VolumeGrid out(spec, 1, 0.0f);
  auto dst = out.channel(0);
  for (const DepthView& v : views) {
    // incremental camera-frame coordinates along x
    const Vec3 step = v.pose.R * Vec3(spec.voxel_size, 0, 0);
    for (int k = 0; k < spec.dims[2]; ++k)
      for (int j = 0; j < spec.dims[1]; ++j) {
        Vec3 pc = v.pose.apply(spec.center(0, j, k));
        for (int i = 0; i < spec.dims[0]; ++i, pc += step) {
          const std::size_t idx = spec.index(i, j, k);
          if (dst[idx] != 0.0f || pc.z() <= 1e-9) continue;
          const double u = v.K.fx * pc.x() / pc.z() + v.K.cx;
          const double w = v.K.fy * pc.y() / pc.z() + v.K.cy;
          if (u < 0 || w < 0 || u >= v.width || w >= v.height) continue;
          const double d = v.depth_at(static_cast<int>(u), static_cast<int>(w));
          if (d > 0.0 && d + eps > pc.z()) dst[idx] = 1.0f;
        }
      }
  }
  return out;
}

bool lookup_visible(const VolumeGrid& vis, const Vec3& x) {
  const auto ijk = vis.spec().nearest(x);
  return vis.at(ijk[0], ijk[1], ijk[2], 0) > 0.5f;
}

}  // namespace ak
