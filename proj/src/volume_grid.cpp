#include "artikit/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ak {

GridSpec GridSpec::cube(int res, double lo, double hi) {
  GridSpec s;
  s.origin = Vec3::Constant(lo);
  s.voxel_size = (hi - lo) / res;
  s.dims = {res, res, res};
  s.validate();
  return s;
}

void GridSpec::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
    throw std::invalid_argument("GridSpec: voxel_size must be positive");
  for (int d : dims)
    if (d < 2) throw std::invalid_argument("GridSpec: dims must be >= 2 per axis");
  if (!origin.allFinite()) throw std::invalid_argument("GridSpec: non-finite origin");
}

std::array<int, 3> GridSpec::nearest(const Vec3& x) const {
  std::array<int, 3> ijk{};
  for (int a = 0; a < 3; ++a) {
    const double u = (x[a] - origin[a]) / voxel_size - 0.5;
    ijk[a] = std::clamp(static_cast<int>(std::lround(u)), 0, dims[a] - 1);
  }
  return ijk;
}

TrilinearStencil trilinear_stencil(const GridSpec& spec, const Vec3& x) {
  TrilinearStencil st;
  int i0[3];
  double f[3];
  bool free_axis[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = spec.dims[a] - 1;
    double u = (x[a] - spec.origin[a]) / spec.voxel_size - 0.5;
    free_axis[a] = true;
    if (!(u > 0.0)) {  // also catches NaN
      u = 0.0;
      free_axis[a] = false;
    } else if (u > hi) {
      u = hi;
      free_axis[a] = false;
    }
    int i = static_cast<int>(u);
    if (i > spec.dims[a] - 2) i = spec.dims[a] - 2;
    i0[a] = i;
    f[a] = u - i;
    st.clamped[a] = spec.origin[a] + (u + 0.5) * spec.voxel_size;
  }
  st.inside = free_axis[0] && free_axis[1] && free_axis[2];
  if (!st.inside) {
    // a query lying exactly on the hull face still counts as inside
    st.inside = (st.clamped - x).squaredNorm() == 0.0;
  }
  const std::size_t sx = 1, sy = std::size_t(spec.dims[0]),
                    sz = std::size_t(spec.dims[0]) * spec.dims[1];
  const std::size_t base = spec.index(i0[0], i0[1], i0[2]);
  const double inv_h = 1.0 / spec.voxel_size;
  for (int c = 0; c < 8; ++c) {
    const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
    const double wx = bx ? f[0] : 1.0 - f[0];
    const double wy = by ? f[1] : 1.0 - f[1];
    const double wz = bz ? f[2] : 1.0 - f[2];
    st.index[c] = base + bx * sx + by * sy + bz * sz;
    st.weight[c] = wx * wy * wz;
    st.dweight[c] = Vec3(free_axis[0] ? (bx ? 1.0 : -1.0) * wy * wz * inv_h : 0.0,
                         free_axis[1] ? (by ? 1.0 : -1.0) * wx * wz * inv_h : 0.0,
                         free_axis[2] ? (bz ? 1.0 : -1.0) * wx * wy * inv_h : 0.0);
  }
  return st;
}

VolumeGrid::VolumeGrid(const GridSpec& spec, int channels, float fill)
    : spec_(spec), channels_(channels) {
  spec_.validate();
  if (channels < 1) throw std::invalid_argument("VolumeGrid: channels must be >= 1");
  data_.assign(spec_.voxel_count() * channels, fill);
}

void VolumeGrid::check_channel(int c) const {
  if (c < 0 || c >= channels_)
    throw std::out_of_range("VolumeGrid: channel " + std::to_string(c) +
                            " out of range (channels = " + std::to_string(channels_) + ")");
}

std::span<float> VolumeGrid::channel(int c) {
  check_channel(c);
  return std::span<float>(data_).subspan(c * spec_.voxel_count(), spec_.voxel_count());
}

std::span<const float> VolumeGrid::channel(int c) const {
  check_channel(c);
  return std::span<const float>(data_).subspan(c * spec_.voxel_count(), spec_.voxel_count());
}

double VolumeGrid::sample(const TrilinearStencil& st, int channel) const {
  check_channel(channel);
  const float* p = data_.data() + channel * spec_.voxel_count();
  double v = 0.0;
  for (int c = 0; c < 8; ++c) v += st.weight[c] * p[st.index[c]];
  return v;
}

double VolumeGrid::sample(const Vec3& x, int channel, Vec3* grad) const {
  const TrilinearStencil st = trilinear_stencil(spec_, x);
  check_channel(channel);
  const float* p = data_.data() + channel * spec_.voxel_count();
  double v = 0.0;
  Vec3 g = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    const double val = p[st.index[c]];
    v += st.weight[c] * val;
    g += st.dweight[c] * val;
  }
  if (grad) *grad = g;
  return v;
}

double VolumeGrid::sample_esdf(const Vec3& x, int channel, Vec3* grad) const {
  const TrilinearStencil st = trilinear_stencil(spec_, x);
  check_channel(channel);
  const float* p = data_.data() + channel * spec_.voxel_count();
  double v = 0.0;
  Vec3 g = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    const double val = p[st.index[c]];
    v += st.weight[c] * val;
    g += st.dweight[c] * val;
  }
  if (!st.inside) {
    const Vec3 off = x - st.clamped;
    const double d = off.norm();
    if (d > 0.0) {
      v += d;
      g += off / d;
    }
  }
  if (grad) *grad = g;
  return v;
}

double occupancy(double esdf, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("occupancy: s must be positive");
  return std::clamp(0.5 - esdf / s, 0.0, 1.0);
}

double occupancy_derivative(double esdf, double s) {
  const double u = 0.5 - esdf / s;
  return (u > 0.0 && u < 1.0) ? -1.0 / s : 0.0;
}

namespace {
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace

double surface_weight(double esdf, double alpha) {
  return sigmoid(-alpha * esdf) * sigmoid(alpha * esdf);
}

double surface_weight_derivative(double esdf, double alpha) {
  // w = s(1-s) with s = sigmoid(alpha d): dw/dd = alpha s (1-s) (1-2s)
  const double s = sigmoid(alpha * esdf);
  return alpha * s * (1.0 - s) * (1.0 - 2.0 * s);
}

VolumeGrid resample(const VolumeGrid& grid, const GridSpec& target, int channel) {
  VolumeGrid out(target, 1);
  auto dst = out.channel(0);
  for (int k = 0; k < target.dims[2]; ++k)
    for (int j = 0; j < target.dims[1]; ++j)
      for (int i = 0; i < target.dims[0]; ++i)
        dst[target.index(i, j, k)] =
            static_cast<float>(grid.sample_esdf(target.center(i, j, k), channel));
  return out;
}

double TriMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles)
    a += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  return a;
}

void TriMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles)
    for (int v : t)
      if (v < 0 || v >= n) throw std::out_of_range("TriMesh: triangle index out of range");
  if (!part_ids.empty() && part_ids.size() != vertices.size())
    throw std::invalid_argument("TriMesh: part_ids size mismatch");
}

}  // namespace ak
