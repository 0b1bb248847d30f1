#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "artikit/io.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace ak;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "artikit_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("grid round trip is exact") {
  GridSpec spec;
  spec.origin = Vec3(-0.3, 0.1, 2.0);
  spec.voxel_size = 0.037;
  spec.dims = {5, 7, 3};
  VolumeGrid g(spec, 3);
  std::mt19937 rng(4);
  std::normal_distribution<float> n;
  for (float& v : g.data()) v = n(rng);
  const auto path = scratch("g.akvg");
  io::write_grid(path, g);
  const VolumeGrid r = io::read_grid(path);
  CHECK(r.spec() == spec);
  CHECK(r.channels() == 3);
  CHECK(std::equal(g.data().begin(), g.data().end(), r.data().begin()));
  // header: magic + u32 + 4 f64 + 4 u32
  CHECK(fs::file_size(path) == 4 + 4 + 32 + 16 + g.data().size() * 4);
}

TEST_CASE("grid reader rejects foreign files") {
  const auto path = scratch("bad.akvg");
  std::ofstream(path) << "NOPE";
  CHECK_THROWS_AS(io::read_grid(path), std::runtime_error);
  CHECK_THROWS_AS(io::read_grid(scratch("missing.akvg")), std::runtime_error);
}

TEST_CASE("views round trip") {
  std::vector<DepthView> views;
  views.push_back(testing::render_sphere(Vec3(1.2, 0.3, 0.5), Vec3::Zero(), 0.2, 32, 40.0));
  views.push_back(testing::render_sphere(Vec3(-0.4, 1.1, 0.9), Vec3::Zero(), 0.2, 24, 30.0));
  const auto dir = scratch("views");
  fs::remove_all(dir);
  io::write_views(dir, views);
  const auto r = io::read_views(dir);
  REQUIRE(r.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r[i].width == views[i].width);
    CHECK(r[i].K.fx == views[i].K.fx);
    CHECK((r[i].pose.R - views[i].pose.R).norm() < 1e-15);
    CHECK((r[i].pose.t - views[i].pose.t).norm() < 1e-15);
    CHECK(r[i].depth == views[i].depth);
    CHECK(r[i].mask == views[i].mask);
  }
}

TEST_CASE("matches round trip") {
  std::vector<MatchPair> m{{0, 3, 7, Vec2(1.25, 2.5), Vec2(100.125, 0.75)},
                           {1, 0, 99, Vec2(0.1, 0.2), Vec2(0.3, 0.4)}};
  const auto path = scratch("m.json");
  io::write_matches(path, m);
  const auto r = io::read_matches(path);
  REQUIRE(r.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r[i].t == m[i].t);
    CHECK(r[i].v == m[i].v);
    CHECK(r[i].u == m[i].u);
    CHECK(r[i].p == m[i].p);
    CHECK(r[i].q == m[i].q);
  }
}

TEST_CASE("ply round trip keeps part labels") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  mesh.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  mesh.part_ids = {0, 0, 1, 1};
  const auto path = scratch("m.ply");
  io::write_ply(path, mesh);
  const TriMesh r = io::read_ply(path);
  CHECK(r.vertices.size() == 4);
  CHECK(r.triangles == mesh.triangles);
  CHECK(r.part_ids == mesh.part_ids);

  mesh.part_ids.clear();
  io::write_ply(path, mesh, 2);
  CHECK(io::read_ply(path).part_ids == std::vector<int>(4, 2));
  io::write_obj(scratch("m.obj"), mesh);
  CHECK(fs::file_size(scratch("m.obj")) > 0);
}
