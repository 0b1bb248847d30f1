#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "artikit/volume.hpp"
#include "test_support.hpp"

#include <cmath>
#include <map>
#include <random>

using namespace ak;
using namespace ak::testing;

namespace {

// Independent corner-weight oracle: clamp to the sample hull, pick the lower
// corner, weight the 8 neighbours by products of 1D hat functions.
double corner_oracle(const VolumeGrid& g, const Vec3& x, int ch) {
  const GridSpec& s = g.spec();
  double sum = 0.0;
  int lo[3];
  double u[3];
  for (int a = 0; a < 3; ++a) {
    u[a] = std::clamp((x[a] - s.origin[a]) / s.voxel_size - 0.5, 0.0, double(s.dims[a] - 1));
    lo[a] = std::min(int(std::floor(u[a])), s.dims[a] - 2);
  }
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const int i = lo[0] + dx, j = lo[1] + dy, k = lo[2] + dz;
        const double w = (1 - std::abs(u[0] - i)) * (1 - std::abs(u[1] - j)) *
                         (1 - std::abs(u[2] - k));
        sum += w * g.at(i, j, k, ch);
      }
  return sum;
}

VolumeGrid random_grid(const GridSpec& spec, int channels, unsigned seed) {
  VolumeGrid g(spec, channels);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> U(-1.f, 1.f);
  for (float& v : g.data()) v = U(rng);
  return g;
}

}  // namespace

TEST_CASE("trilinear sampling is exact at centres and linear between them") {
  GridSpec spec = GridSpec::cube(8);
  VolumeGrid g = random_grid(spec, 2, 1);
  CHECK(g.sample(spec.center(3, 4, 5), 1) == doctest::Approx(g.at(3, 4, 5, 1)).epsilon(1e-12));

  VolumeGrid h(spec, 1, 0.0f);
  h.at(2, 2, 2, 0) = 0.0f;
  h.at(3, 2, 2, 0) = 1.0f;
  const Vec3 mid = 0.5 * (spec.center(2, 2, 2) + spec.center(3, 2, 2));
  CHECK(h.sample(mid, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(h.sample(mid, 1), std::out_of_range);
}

TEST_CASE("trilinear sampling matches the corner-weight oracle on random queries") {
  GridSpec spec;
  spec.origin = Vec3(-0.3, -0.2, -0.4);
  spec.voxel_size = 0.05;
  spec.dims = {9, 11, 13};
  VolumeGrid g = random_grid(spec, 3, 7);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-0.6, 0.6);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 x(U(rng), U(rng), U(rng));
    const int ch = n % 3;
    worst = std::max(worst, std::abs(g.sample(x, ch) - corner_oracle(g, x, ch)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("trilinear gradient matches central differences inside the hull") {
  GridSpec spec = GridSpec::cube(10);
  VolumeGrid g = random_grid(spec, 1, 11);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-0.4, 0.4);
  for (int n = 0; n < 50; ++n) {
    const Vec3 x(U(rng), U(rng), U(rng));
    Vec3 grad;
    g.sample(x, 0, &grad);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      const double fd = (g.sample(x + e, 0) - g.sample(x - e, 0)) / (2 * h);
      CHECK(grad[a] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("esdf lookup extends beyond the grid by the distance to the hull") {
  GridSpec spec = GridSpec::cube(16);
  VolumeGrid g = analytic_grid(spec, [](const Vec3& x) { return x.x(); });
  const Vec3 edge = spec.last_center();
  const Vec3 out = edge + Vec3(0.3, 0.0, 0.0);
  CHECK(g.sample_esdf(out) == doctest::Approx(edge.x() + 0.3).epsilon(1e-6));
  Vec3 grad;
  g.sample_esdf(out, 0, &grad);
  CHECK(grad.x() == doctest::Approx(1.0));
  // colour-style lookups clamp instead
  CHECK(g.sample(out, 0) == doctest::Approx(edge.x()).epsilon(1e-6));
}

TEST_CASE("occupancy from signed distance") {
  CHECK(occupancy(0.0, 0.01) == 0.5);
  CHECK(occupancy(-0.005, 0.01) == 1.0);
  CHECK(occupancy(0.02, 0.01) == 0.0);
  CHECK_THROWS_AS(occupancy(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(occupancy(0.0, -1.0), std::invalid_argument);
  double prev = 2.0;
  for (double d = -0.05; d <= 0.05; d += 0.001) {
    const double o = occupancy(d, 0.01);
    CHECK(o <= prev);
    prev = o;
  }
}

TEST_CASE("surface weight is an even bell peaking at 0.25") {
  CHECK(surface_weight(0.0, 5.0) == 0.25);
  CHECK(surface_weight(0.0, 123.0) == 0.25);
  // sigmoid(-5) * sigmoid(5) = e^-5 / (1 + e^-5)^2
  const double e5 = std::exp(-5.0);
  CHECK(surface_weight(1.0, 5.0) == doctest::Approx(e5 / ((1 + e5) * (1 + e5))).epsilon(1e-12));
  CHECK(surface_weight(1.0, 5.0) == doctest::Approx(0.006648).epsilon(1e-4));
  for (double d : {0.01, 0.3, 2.0}) CHECK(surface_weight(d, 5.0) == surface_weight(-d, 5.0));
  double prev = 0.26;
  for (double d = 0.0; d < 3.0; d += 0.05) {
    const double w = surface_weight(d, 5.0);
    CHECK(w < prev);
    prev = w;
  }
  const double h = 1e-6;
  for (double d : {-0.4, 0.02, 0.7})
    CHECK(surface_weight_derivative(d, 5.0) ==
          doctest::Approx((surface_weight(d + h, 5.0) - surface_weight(d - h, 5.0)) / (2 * h))
              .epsilon(1e-6));
}

TEST_CASE("visibility against an observed surface") {
  const Vec3 eye(0, 0, 2);
  DepthView v = render_plane(eye, Vec3::Zero(), Vec3::UnitZ(), 0.0);
  std::vector<DepthView> views{v};
  const Vec3 on_surface(0.01, -0.02, 0.0);
  CHECK(visibility(on_surface, views, 0.03));
  CHECK_FALSE(visibility(on_surface - Vec3(0, 0, 0.1), views, 0.03));
  CHECK(visibility(on_surface + Vec3(0, 0, 0.5), views, 0.03));
  // behind the camera or outside the image: no view provides visibility
  CHECK_FALSE(visibility(Vec3(0, 0, 3), views, 0.03));
  CHECK_FALSE(visibility(Vec3(10, 0, 0), views, 0.03));

  // monotone in eps
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  for (int n = 0; n < 200; ++n) {
    const Vec3 x(U(rng), U(rng), U(rng));
    if (visibility(x, views, 0.01)) CHECK(visibility(x, views, 0.05));
  }
}

TEST_CASE("visibility grid agrees with pointwise visibility at voxel centres") {
  DepthView v = render_sphere(Vec3(0, -1.5, 1.0), Vec3::Zero(), 0.25);
  std::vector<DepthView> views{v};
  GridSpec spec = GridSpec::cube(24);
  VolumeGrid grid = visibility_grid(views, spec, 0.03);
  int mismatches = 0;
  for (int k = 0; k < 24; ++k)
    for (int j = 0; j < 24; ++j)
      for (int i = 0; i < 24; ++i)
        mismatches += (grid.at(i, j, k, 0) > 0.5f) != visibility(spec.center(i, j, k), views, 0.03);
  CHECK(mismatches == 0);
}

TEST_CASE("fusing an analytic sphere from 20 views recovers its SDF near the surface") {
  const Vec3 c(0.02, -0.01, 0.03);
  const double r = 0.25;
  std::vector<DepthView> views;
  for (const Vec3& d : sphere_directions(20)) views.push_back(render_sphere(c + 1.4 * d, c, r));
  const GridSpec spec = GridSpec::cube(128);
  const VolumeGrid esdf = fuse_depth(views, spec, 0.03);
  double sum = 0.0, worst = 0.0;
  int n = 0;
  for (int k = 0; k < 128; ++k)
    for (int j = 0; j < 128; ++j)
      for (int i = 0; i < 128; ++i) {
        const Vec3 x = spec.center(i, j, k);
        const double truth = sphere_sdf(x, c, r);
        if (std::abs(truth) > 2 * spec.voxel_size) continue;
        const double err = std::abs(esdf.at(i, j, k, 0) - truth);
        sum += err;
        worst = std::max(worst, err);
        ++n;
      }
  REQUIRE(n > 1000);
  CHECK(sum / n < 1.0 * spec.voxel_size);
  CHECK(worst < 1.5 * spec.voxel_size);

  // extract, point-sample, re-query
  const TriMesh mesh = extract_mesh(esdf, 0.0);
  REQUIRE(!mesh.empty());
  double msum = 0.0;
  for (const Vec3& p : mesh.vertices) msum += std::abs(esdf.sample_esdf(p));
  CHECK(msum / mesh.vertices.size() < 0.5 * spec.voxel_size);
}

TEST_CASE("fusing a single view of a plane gives the halfspace distance") {
  const Vec3 eye(0, 0, 1.5);
  std::vector<DepthView> views{render_plane(eye, Vec3::Zero(), Vec3::UnitZ(), 0.0)};
  const GridSpec spec = GridSpec::cube(48);
  const VolumeGrid esdf = fuse_depth(views, spec, 0.03);
  int n = 0;
  for (int k = 0; k < 48; ++k)
    for (int j = 12; j < 36; ++j)
      for (int i = 12; i < 36; ++i) {
        const Vec3 x = spec.center(i, j, k);
        if (x.z() < -0.01 || x.z() > 0.03) continue;
        CHECK(std::abs(esdf.at(i, j, k, 0) - x.z()) < spec.voxel_size);
        ++n;
      }
  CHECK(n > 100);
  // voxels behind the camera were never seen
  const auto far = spec.nearest(Vec3(0.45, 0.45, 0.45));
  (void)far;
  const auto corner = spec.nearest(Vec3(-0.49, -0.49, -0.49));
  CHECK(esdf.at(corner[0], corner[1], corner[2], 0) == doctest::Approx(0.03));
}

TEST_CASE("fuse_depth rejects empty input") {
  std::vector<DepthView> none;
  CHECK_THROWS_AS(fuse_depth(none, GridSpec::cube(8), 0.03), std::invalid_argument);
  DepthView v = blank_view(Vec3(0, 0, 2), Vec3::Zero(), 16);
  std::vector<DepthView> blank{v};
  CHECK_THROWS_AS(fuse_depth(blank, GridSpec::cube(8), 0.03), std::invalid_argument);
}

TEST_CASE("marching cubes on analytic fields") {
  const GridSpec spec = GridSpec::cube(48);
  const double r = 0.3;
  const VolumeGrid sphere =
      analytic_grid(spec, [&](const Vec3& x) { return sphere_sdf(x, Vec3::Zero(), r); });
  const TriMesh mesh = extract_mesh(sphere, 0.0);
  REQUIRE(!mesh.empty());
  mesh.validate();
  for (const Vec3& p : mesh.vertices) CHECK(std::abs(p.norm() - r) < spec.voxel_size);
  // outward winding: positive enclosed volume
  double vol = 0.0;
  for (const auto& t : mesh.triangles)
    vol += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]])) / 6.0;
  CHECK(vol == doctest::Approx(4.0 / 3.0 * kPi * r * r * r).epsilon(0.05));
  // watertight: each edge shared by exactly two triangles
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  int open = 0;
  for (const auto& [e, c] : edges) open += (c != 2);
  CHECK(open == 0);

  const double a = 0.4;
  const VolumeGrid cube =
      analytic_grid(spec, [&](const Vec3& x) { return box_sdf(x, Vec3::Constant(a / 2)); });
  CHECK(extract_mesh(cube, 0.0).area() == doctest::Approx(6 * a * a).epsilon(0.05));

  VolumeGrid positive(spec, 1, 1.0f);
  CHECK(extract_mesh(positive, 0.0).empty());
  CHECK(extract_mesh(sphere, 5.0).empty());
}
