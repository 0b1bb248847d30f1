#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "artikit/io.hpp"
#include "artikit/pipeline.hpp"
#include "artikit/scenegen.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

using namespace ak;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("artikit_test_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

GenOptions tiny(const std::string& name, std::uint64_t seed) {
  GenOptions g;
  g.template_name = name;
  g.seed = seed;
  g.views = 4;
  g.image = 32;
  g.field_res = 32;
  return g;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ArticulatedObject sample_object() {
  ArticulatedObject o;
  o.source_state = 1;
  for (int p = 0; p < 3; ++p) {
    TriMesh m;
    m.vertices = {Vec3(0.1 * p, 0, 0), Vec3(0.1 * p + 0.05, 0, 0), Vec3(0.1 * p, 0.05, 0.01)};
    m.triangles = {{0, 1, 2}};
    m.part_ids = {p, p, p};
    o.parts.push_back(m);
  }
  o.joints.push_back({1, {JointType::Revolute, Vec3(0.6, 0.0, 0.8), Vec3(0.1, -0.2, 0.3), 1.2345678901234567}, 3.5e-9});
  o.joints.push_back({2, {JointType::Prismatic, Vec3(0, 1, 0), Vec3::Zero(), 0.21}, 0.0});
  return o;
}

}  // namespace

TEST_CASE("gen writes the six artifacts deterministically") {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  generate_files(a, tiny("drawer", 5));
  generate_files(b, tiny("drawer", 5));
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"fields0.akvg", "fields1.akvg", "gt.json",
                                          "matches.json", "views0", "views1"});
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / rel), rel.string());
  }
  CHECK(io::read_views(a / "views1").size() == 4);
  CHECK(io::read_grid(a / "fields0.akvg").spec() == GridSpec::cube(32));
}

TEST_CASE("multi template lists two joints") {
  const fs::path d = scratch("multi");
  generate_files(d, tiny("multi", 2));
  const GroundTruthScene sc = read_scene_json(d / "gt.json");
  CHECK(sc.part_count == 3);
  REQUIRE(sc.joints.size() == 2);
  CHECK(sc.joints[0].type != sc.joints[1].type);
}

TEST_CASE("objects round trip through joints JSON and part meshes") {
  const fs::path d = scratch("object");
  const ArticulatedObject o = sample_object();
  write_object(d, o);
  const ArticulatedObject r = read_object(d);
  CHECK(r.source_state == 1);
  REQUIRE(r.joints.size() == 2);
  for (int k = 0; k < 2; ++k) {
    // Doubles are written with round-trip precision.
    CHECK(r.joints[k].part == o.joints[k].part);
    CHECK(r.joints[k].record.type == o.joints[k].record.type);
    CHECK(r.joints[k].record.axis_dir == o.joints[k].record.axis_dir);
    CHECK(r.joints[k].record.axis_origin == o.joints[k].record.axis_origin);
    CHECK(r.joints[k].record.state_delta == o.joints[k].record.state_delta);
    CHECK(r.joints[k].residual == o.joints[k].residual);
  }
  REQUIRE(r.parts.size() == 3);
  for (int p = 0; p < 3; ++p) {
    CHECK(r.parts[p].triangles == o.parts[p].triangles);
    CHECK(r.parts[p].part_ids == o.parts[p].part_ids);
    for (int v = 0; v < 3; ++v)
      CHECK((r.parts[p].vertices[v] - o.parts[p].vertices[v]).norm() < 1e-8);
  }

  const nlohmann::json j = nlohmann::json::parse(slurp(d / "joints.json"));
  for (const char* key : {"type", "axis_dir", "axis_origin", "state_delta", "residual"})
    CHECK(j["joints"][0].contains(key));
}

TEST_CASE("schema errors name the field") {
  const fs::path d = scratch("schema");
  write_object(d, sample_object());
  const std::string good = slurp(d / "joints.json");
  auto expect = [&](const std::string& from, const std::string& to, const std::string& field) {
    std::string bad = good;
    const auto at = bad.find(from);
    REQUIRE(at != std::string::npos);
    bad.replace(at, from.size(), to);
    std::ofstream(d / "joints.json") << bad;
    try {
      read_object(d);
      FAIL("expected a schema error for " << field);
    } catch (const std::runtime_error& e) {
      CHECK_MESSAGE(std::string(e.what()).find("'" + field + "'") != std::string::npos, e.what());
    }
  };
  expect("\"axis_dir\"", "\"axis_dr\"", "axis_dir");
  expect("\"state_delta\"", "\"delta\"", "state_delta");
  expect("\"revolute\"", "\"hinge\"", "type");
  expect("\"source_state\": 1", "\"source_state\": 4", "source_state");
  expect("\"residual\": 0.0", "\"residual\": \"x\"", "residual");

  std::ofstream(d / "joints.json") << good;
  fs::remove(d / "part_2.ply");
  CHECK_THROWS(read_object(d));
}

TEST_CASE("loss trace has one line per step") {
  const fs::path d = scratch("trace");
  fs::create_directories(d);
  std::vector<LossBreakdown> t(5);
  for (int i = 0; i < 5; ++i) t[i].total = 1.0 / (i + 1);
  write_trace(d / "trace.jsonl", t);
  std::ifstream is(d / "trace.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j["step"] == n);
    ++n;
  }
  CHECK(n == 5);
}
