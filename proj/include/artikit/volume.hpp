#pragma once

#include "artikit/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ak {

/// Cell-centred axis-aligned lattice. Sample i along an axis sits at
/// origin + (i + 0.5) * voxel_size, so the covered box is
/// [origin, origin + dims * voxel_size].
struct GridSpec {
  Vec3 origin = Vec3::Constant(-0.5);
  double voxel_size = 1.0 / 128.0;
  std::array<int, 3> dims{128, 128, 128};

  /// Cubic grid with `res` samples per axis spanning [lo, hi]^3.
  static GridSpec cube(int res, double lo = -0.5, double hi = 0.5);

  void validate() const;
  std::size_t voxel_count() const {
    return std::size_t(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return (std::size_t(k) * dims[1] + j) * dims[0] + i;
  }
  Vec3 center(int i, int j, int k) const {
    return origin + voxel_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  Vec3 first_center() const { return center(0, 0, 0); }
  Vec3 last_center() const { return center(dims[0] - 1, dims[1] - 1, dims[2] - 1); }
  /// Nearest sample index for x, clamped into the lattice.
  std::array<int, 3> nearest(const Vec3& x) const;
  bool operator==(const GridSpec& o) const {
    return origin == o.origin && voxel_size == o.voxel_size && dims == o.dims;
  }
};

/// Corner indices and weights of a trilinear lookup. Corner c uses bit 0 for
/// +x, bit 1 for +y, bit 2 for +z. `dweight` is d(weight)/dx in world units;
/// it is zero along axes where the query was clamped.
struct TrilinearStencil {
  std::array<std::size_t, 8> index{};
  std::array<double, 8> weight{};
  std::array<Vec3, 8> dweight{};
  Vec3 clamped = Vec3::Zero();  // query clamped into the sample hull
  bool inside = true;           // false when clamping moved the query
};

TrilinearStencil trilinear_stencil(const GridSpec& spec, const Vec3& x);

/// Dense multi-channel scalar volume, channel-planar, x fastest.
class VolumeGrid {
 public:
  VolumeGrid() = default;
  VolumeGrid(const GridSpec& spec, int channels, float fill = 0.0f);

  const GridSpec& spec() const { return spec_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int i, int j, int k, int c) {
    return data_[c * spec_.voxel_count() + spec_.index(i, j, k)];
  }
  float at(int i, int j, int k, int c) const {
    return data_[c * spec_.voxel_count() + spec_.index(i, j, k)];
  }
  std::span<float> channel(int c);
  std::span<const float> channel(int c) const;
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  /// Trilinear value of `channel` at x; out-of-hull queries clamp.
  double sample(const Vec3& x, int channel, Vec3* grad = nullptr) const;
  double sample(const TrilinearStencil& st, int channel) const;

  /// Signed-distance lookup: inside the hull this is sample(); outside it is
  /// the boundary value plus the Euclidean distance to the hull.
  double sample_esdf(const Vec3& x, int channel = 0, Vec3* grad = nullptr) const;

 private:
  void check_channel(int c) const;

  GridSpec spec_;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Smoothed inside indicator from a signed distance: clip(0.5 - d/s, 0, 1).
double occupancy(double esdf, double s);
/// d occupancy / d esdf (zero where clipped).
double occupancy_derivative(double esdf, double s);

/// Bell-shaped weight sigmoid(-alpha d) * sigmoid(alpha d), max 0.25 at d = 0.
double surface_weight(double esdf, double alpha);
double surface_weight_derivative(double esdf, double alpha);

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

/// Posed pinhole depth image. `pose` maps world to camera coordinates
/// (x right, y down, z forward). Pixel (c, r) covers [c, c+1) x [r, r+1).
struct DepthView {
  Intrinsics K;
  Rigid pose;
  int width = 0;
  int height = 0;
  std::vector<float> depth;         // z-depth, 0 = no return
  std::vector<std::uint8_t> mask;   // 1 = object

  void validate() const;
  float depth_at(int c, int r) const { return depth[std::size_t(r) * width + c]; }
  bool mask_at(int c, int r) const { return mask[std::size_t(r) * width + c] != 0; }

  Vec3 camera_center() const { return -(pose.R.transpose() * pose.t); }
  /// Continuous pixel coordinates of a world point; nullopt behind the camera.
  std::optional<Vec2> project(const Vec3& world, double* z = nullptr) const;
  /// d pixel / d world at x (assumes x in front of the camera).
  Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& world) const;
  bool in_image(const Vec2& px) const {
    return px.x() >= 0 && px.y() >= 0 && px.x() < width && px.y() < height;
  }
  /// World point at z-depth `z` on the ray through pixel coordinates px.
  Vec3 unproject(const Vec2& px, double z) const;
  /// Unit world-space direction of the ray through px.
  Vec3 ray_direction(const Vec2& px) const;
  /// Depth at continuous pixel coordinates: bilinear in inverse depth when
  /// the four neighbours have returns, nearest pixel otherwise, 0 if none.
  double interpolated_depth(const Vec2& px) const;
};

/// World-to-camera pose of a camera at `eye` looking at `target` (OpenCV axes).
Rigid look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// True iff some view sees x at or in front of its observed surface:
/// depth(pi(x)) + eps > z(x), with returns of 0 never counting.
bool visibility(const Vec3& x, std::span<const DepthView> views, double eps);

/// Per-voxel visibility (1 visible, 0 unobserved) on `spec`.
VolumeGrid visibility_grid(std::span<const DepthView> views, const GridSpec& spec,
                           double eps);

/// Nearest-voxel lookup of a 0/1 visibility grid; outside the grid counts as
/// visible only if the clamped voxel is.
bool lookup_visible(const VolumeGrid& vis, const Vec3& x);

/// Projective TSDF fusion (unweighted average) followed by exact Euclidean
/// re-distancing of the zero crossing. Voxels not visible in any view at
/// eps = truncation are forced to +truncation before re-distancing.
/// Returns a single-channel ESDF grid.
VolumeGrid fuse_depth(std::span<const DepthView> views, const GridSpec& spec,
                      double truncation);

/// Exact Euclidean signed distance to the zero crossing of a sign field
/// (negative = inside). `values` supplies the sub-voxel crossing estimate.
VolumeGrid redistance(const VolumeGrid& values, int channel = 0);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> part_ids;  // optional, per vertex

  bool empty() const { return triangles.empty(); }
  double area() const;
  void validate() const;
};

/// Marching cubes on `channel` at level `iso`. Vertices on shared edges are
/// welded; degenerate triangles are dropped. Inside is below iso.
TriMesh extract_mesh(const VolumeGrid& grid, double iso = 0.0, int channel = 0);

/// Trilinear resampling of one channel (ESDF extension outside the source).
VolumeGrid resample(const VolumeGrid& grid, const GridSpec& target, int channel = 0);

}  // namespace ak
