#include "artikit/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ak {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) carrying the id of
// the feature that realises the minimum.
void edt_line(int n, const double* f, const int* feat, double* d_out, int* feat_out,
              std::vector<int>& v, std::vector<double>& z) {
  int first = -1;
  for (int q = 0; q < n; ++q)
    if (f[q] < kInf) {
      first = q;
      break;
    }
  if (first < 0) {
    for (int q = 0; q < n; ++q) {
      d_out[q] = kInf;
      feat_out[q] = -1;
    }
    return;
  }
  int k = 0;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (!(f[q] < kInf)) continue;
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d_out[q] = double(q - p) * (q - p) + f[p];
    feat_out[q] = feat[p];
  }
}

// Nearest-seed id for every voxel (exact Euclidean, voxel units).
std::vector<int> feature_transform(const GridSpec& spec, std::vector<int> feat) {
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  std::vector<double> dist(spec.voxel_count());
  for (std::size_t i = 0; i < feat.size(); ++i) dist[i] = feat[i] >= 0 ? 0.0 : kInf;

  const int nmax = std::max({nx, ny, nz});
  std::vector<double> fin(nmax), dout(nmax), zbuf(nmax + 1);
  std::vector<int> fe(nmax), feo(nmax), vbuf(nmax);

  auto run = [&](int n, std::size_t start, std::size_t stride) {
    for (int q = 0; q < n; ++q) {
      fin[q] = dist[start + q * stride];
      fe[q] = feat[start + q * stride];
    }
    edt_line(n, fin.data(), fe.data(), dout.data(), feo.data(), vbuf, zbuf);
    for (int q = 0; q < n; ++q) {
      dist[start + q * stride] = dout[q];
      feat[start + q * stride] = feo[q];
    }
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) run(nx, spec.index(0, j, k), 1);
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i) run(ny, spec.index(i, 0, k), std::size_t(nx));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) run(nz, spec.index(i, j, 0), std::size_t(nx) * ny);
  return feat;
}

}  // namespace

VolumeGrid redistance(const VolumeGrid& values, int channel) {
  const GridSpec& spec = values.spec();
  const auto val = values.channel(channel);
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const double h = spec.voxel_size;
  auto inside = [&](std::size_t idx) { return val[idx] < 0.0f; };

  std::vector<int> feat(spec.voxel_count(), -1);
  std::vector<Vec3> surface;  // sub-voxel surface point per seed
  const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t idx = spec.index(i, j, k);
        const bool in = inside(idx);
        const double v0 = val[idx];
        // crossing fraction per axis (closest side wins)
        double frac[3] = {kInf, kInf, kInf};
        bool seed = false;
        for (const auto& o : nb) {
          const int a = i + o[0], b = j + o[1], c = k + o[2];
          if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
          const std::size_t n = spec.index(a, b, c);
          if (inside(n) == in) continue;
          seed = true;
          const double v1 = val[n];
          const double t = (v0 == v1) ? 0.5 : std::clamp(v0 / (v0 - v1), 0.0, 1.0);
          const int axis = o[0] ? 0 : (o[1] ? 1 : 2);
          frac[axis] = std::min(frac[axis], t);
        }
        if (!seed) continue;
        // distance to a locally planar surface through the axis crossings
        double inv2 = 0.0;
        for (double t : frac)
          if (t < kInf) inv2 += 1.0 / std::max(t * t, 1e-12);
        const double d = h / std::sqrt(inv2);
        // normal from central differences of the value field
        Vec3 g;
        const int ijk[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          int lo[3] = {i, j, k}, hi[3] = {i, j, k};
          lo[a] = std::max(ijk[a] - 1, 0);
          hi[a] = std::min(ijk[a] + 1, spec.dims[a] - 1);
          g[a] = double(val[spec.index(hi[0], hi[1], hi[2])]) -
                 double(val[spec.index(lo[0], lo[1], lo[2])]);
        }
        Vec3 n = g.norm() > 1e-12 ? Vec3(g.normalized()) : Vec3::UnitZ();
        const Vec3 c = spec.center(i, j, k);
        // inside points move along +n, outside points along -n
        surface.push_back(in ? Vec3(c + d * n) : Vec3(c - d * n));
        feat[idx] = static_cast<int>(surface.size()) - 1;
      }

  VolumeGrid out(spec, 1);
  auto dst = out.channel(0);
  if (surface.empty()) {
    std::copy(val.begin(), val.end(), dst.begin());
    return out;
  }
  feat = feature_transform(spec, std::move(feat));
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t idx = spec.index(i, j, k);
        const double d = (spec.center(i, j, k) - surface[feat[idx]]).norm();
        dst[idx] = static_cast<float>(inside(idx) ? -d : d);
      }
  return out;
}

VolumeGrid fuse_depth(std::span<const DepthView> views, const GridSpec& spec,
                      double truncation) {
  if (views.empty()) throw std::invalid_argument("fuse_depth: no views");
  if (!(truncation > 0.0)) throw std::invalid_argument("fuse_depth: truncation must be positive");
  spec.validate();
  for (const DepthView& v : views) {
    v.validate();
    if (std::none_of(v.mask.begin(), v.mask.end(), [](std::uint8_t m) { return m != 0; }))
      throw std::invalid_argument("fuse_depth: view with empty mask");
  }

  std::vector<double> sum(spec.voxel_count(), 0.0);
  std::vector<int> count(spec.voxel_count(), 0);
  for (const DepthView& v : views) {
    const Vec3 step = v.pose.R * Vec3(spec.voxel_size, 0, 0);
    for (int k = 0; k < spec.dims[2]; ++k)
      for (int j = 0; j < spec.dims[1]; ++j) {
        Vec3 pc = v.pose.apply(spec.center(0, j, k));
        for (int i = 0; i < spec.dims[0]; ++i, pc += step) {
          if (pc.z() <= 1e-9) continue;
          const Vec2 px(v.K.fx * pc.x() / pc.z() + v.K.cx, v.K.fy * pc.y() / pc.z() + v.K.cy);
          if (!v.in_image(px)) continue;
          const int c = static_cast<int>(px.x()), r = static_cast<int>(px.y());
          if (!v.mask_at(c, r)) continue;
          const double d = v.interpolated_depth(px);
          if (!(d > 0.0)) continue;
          const double sdf = d - pc.z();
          if (sdf <= -truncation) continue;  // occluded: no update, no visibility
          const std::size_t idx = spec.index(i, j, k);
          sum[idx] += std::min(sdf, truncation);
          count[idx] += 1;
        }
      }
  }

  // Voxels without any update are exactly those failing visibility at
  // eps = truncation; they are declared empty.
  VolumeGrid tsdf(spec, 1);
  auto t = tsdf.channel(0);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(count[i] > 0 ? sum[i] / count[i] : truncation);
  VolumeGrid esdf = redistance(tsdf);
  auto e = esdf.channel(0);
  for (std::size_t i = 0; i < e.size(); ++i)
    if (count[i] == 0) e[i] = std::min(e[i], static_cast<float>(truncation));
  return esdf;
}

}  // namespace ak
