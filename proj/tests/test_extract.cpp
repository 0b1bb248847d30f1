#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "artikit/extract.hpp"

#include <random>
#include <set>

using namespace ak;

namespace {

Mat3 Rz(double deg) { return axis_angle_matrix(Vec3::UnitZ(), deg2rad(deg)); }

Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

// Distance from q to the line through o along unit d.
double point_line(const Vec3& q, const Vec3& o, const Vec3& d) {
  const Vec3 w = q - o;
  return (w - w.dot(d) * d).norm();
}

// Closed strip of triangles: a quad grid n x n in the z = z0 plane.
TriMesh grid_patch(int n, double z0, double x0 = 0.0) {
  TriMesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) m.vertices.emplace_back(x0 + i * 0.01, j * 0.01, z0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i;
      m.triangles.push_back({a, a + 1, a + n + 2});
      m.triangles.push_back({a, a + n + 2, a + n + 1});
    }
  return m;
}

}  // namespace

TEST_CASE("classify_joint threshold") {
  CHECK(classify_joint(Rigid::translation(Vec3(0.1, 0.2, 0))) == JointType::Prismatic);
  CHECK(classify_joint(Rigid::rotation(axis_angle_matrix(Vec3(1, 2, 3), deg2rad(45)))) ==
        JointType::Revolute);
  CHECK(classify_joint({Rz(9.9), Vec3(0.01, 0, 0)}) == JointType::Prismatic);
  CHECK(classify_joint({Rz(10.1), Vec3(0.01, 0, 0)}) == JointType::Revolute);
  CHECK(classify_joint({Rz(12), Vec3::Zero()}, 15.0) == JointType::Prismatic);
}

TEST_CASE("revolute_params known pivot") {
  const Rigid m{Rz(90), Vec3(1, -1, 0)};
  const RevoluteParams r = revolute_params(m);
  CHECK((r.axis_dir - Vec3::UnitZ()).norm() < 1e-12);
  CHECK((r.axis_origin - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(r.angle == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(r.residual < 1e-12);

  const RevoluteParams z = revolute_params({Rz(33), Vec3::Zero()});
  CHECK(z.axis_origin.norm() < 1e-12);

  CHECK_THROWS_AS(revolute_params(Rigid::translation(Vec3(1, 0, 0))), std::invalid_argument);
}

TEST_CASE("revolute_params random pivots") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ang(20, 80), u(-0.5, 0.5);
  for (int k = 0; k < 200; ++k) {
    const Vec3 axis = random_unit(rng);
    const Vec3 q(u(rng), u(rng), u(rng));
    const Rigid m = Rigid::about_axis(axis, q, deg2rad(ang(rng)));
    const RevoluteParams r = revolute_params(m);
    CHECK(point_line(q, r.axis_origin, r.axis_dir) < 1e-8);
    CHECK(std::abs(r.axis_origin.dot(r.axis_dir)) < 1e-9);  // minimum norm
    CHECK(r.residual < 1e-9);
    // The extracted joint reproduces the motion's action on arbitrary points.
    const Rigid back = Rigid::about_axis(r.axis_dir, r.axis_origin, r.angle);
    for (int i = 0; i < 5; ++i) {
      const Vec3 x(u(rng), u(rng), u(rng));
      CHECK((back.apply(x) - m.apply(x)).norm() < 1e-6);
    }
  }
}

TEST_CASE("revolute residual reports an off-manifold translation") {
  // A translation component along the axis cannot be absorbed by a pivot.
  const Rigid m{Rz(40), Vec3(0, 0, 0.3)};
  CHECK(revolute_params(m).residual == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("prismatic_params") {
  PrismaticParams p = prismatic_params(Rigid::translation(Vec3(0, 0, 0.2)));
  CHECK((p.axis_dir - Vec3::UnitZ()).norm() < 1e-15);
  CHECK(p.displacement == doctest::Approx(0.2));
  p = prismatic_params({axis_angle_matrix(Vec3(0.3, 1, 0), deg2rad(3)), Vec3(0.1, 0, 0)});
  CHECK((p.axis_dir - Vec3::UnitX()).norm() < 1e-15);
  CHECK(p.displacement == doctest::Approx(0.1));
  CHECK_THROWS_AS(prismatic_params(Rigid::translation(Vec3(0, 5e-7, 0))), std::invalid_argument);
}

TEST_CASE("prismatic extraction round trip") {
  std::mt19937 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Rigid m{axis_angle_matrix(random_unit(rng), deg2rad(5)), 0.2 * random_unit(rng)};
    const ExtractedJoint j = extract_joint(1, m);
    REQUIRE(j.record.type == JointType::Prismatic);
    const Rigid r = j.record.motion();
    CHECK(rotation_angle(r.R) == 0.0);
    CHECK(classify_joint(r) == JointType::Prismatic);
    CHECK((r.t - m.t).norm() < 1e-12);
  }
}

TEST_CASE("segment_parts labels and partition") {
  SegField seg(GridSpec::cube(8), 3);
  for (std::size_t v = 0; v < seg.spec().voxel_count(); ++v) seg.logit(v, 0) = 5.0;
  const TriMesh mesh = grid_patch(10, 0.0, -0.05);
  SegmentedMesh s = segment_parts(seg, mesh);
  for (int id : s.labeled.part_ids) CHECK(id == 0);
  CHECK(s.parts[0].triangles.size() == mesh.triangles.size());
  CHECK(s.parts[1].empty());
  CHECK(s.warnings.size() == 2);

  // Left half part 1, right half part 2 (x split at 0).
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const std::size_t v = seg.spec().index(i, j, k);
        seg.logit(v, 0) = 0.0;
        seg.logit(v, i < 4 ? 1 : 2) = 3.0;
        seg.logit(v, i < 4 ? 2 : 1) = 0.0;
      }
  s = segment_parts(seg, mesh);
  // Partition: every vertex carries exactly one label, taken from the argmax.
  REQUIRE(s.labeled.part_ids.size() == mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    CHECK(s.labeled.part_ids[i] == seg.label(mesh.vertices[i]));
  std::size_t tris = 0;
  for (const TriMesh& p : s.parts) tris += p.triangles.size();
  CHECK(tris == mesh.triangles.size());
  CHECK(!s.parts[1].empty());
  CHECK(!s.parts[2].empty());

  // Shift invariance of the argmax.
  SegField shifted = seg;
  for (double& z : shifted.logits()) z += 7.5;
  CHECK(segment_parts(shifted, mesh).labeled.part_ids == s.labeled.part_ids);
}

TEST_CASE("segment_parts majority and tie rule") {
  SegField seg(GridSpec::cube(4), 3);
  TriMesh m;
  m.vertices = {Vec3(-0.4, -0.4, 0), Vec3(-0.3, -0.4, 0), Vec3(0.4, 0.4, 0), Vec3(0.4, -0.4, 0)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  // Voxel columns: x < 0 part 2, x > 0 part 1 except the (+x, -y) corner part 0.
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const std::size_t v = seg.spec().index(i, j, k);
        const int p = i < 2 ? 2 : (j < 2 ? 0 : 1);
        seg.logit(v, p) = 10.0;
      }
  const SegmentedMesh s = segment_parts(seg, m);
  CHECK(s.labeled.part_ids == std::vector<int>{2, 2, 1, 0});
  CHECK(s.parts[2].triangles.size() == 1);  // {2, 2, 1} majority
  CHECK(s.parts[0].triangles.size() == 1);  // {2, 1, 0} tie, lowest index
}

TEST_CASE("cluster_filter") {
  CHECK(cluster_filter(TriMesh{}, 0.1).vertices.empty());
  const TriMesh body = grid_patch(30, 0.0);  // 961 vertices
  CHECK(cluster_filter(body, 0.1).vertices.size() == body.vertices.size());

  TriMesh both = body;
  const TriMesh floater = grid_patch(6, 0.5);  // 49 vertices
  const int base = int(both.vertices.size());
  for (const Vec3& v : floater.vertices) both.vertices.push_back(v);
  for (const auto& t : floater.triangles) both.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  const TriMesh f = cluster_filter(both, 0.1);
  CHECK(f.vertices.size() == body.vertices.size());
  CHECK(f.triangles.size() == body.triangles.size());
  for (const Vec3& v : f.vertices) CHECK(v.z() == 0.0);

  TriMesh twin = body;
  const TriMesh other = grid_patch(30, 0.5);
  for (const Vec3& v : other.vertices) twin.vertices.push_back(v);
  for (const auto& t : other.triangles) twin.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  CHECK(cluster_filter(twin, 0.1).vertices.size() == twin.vertices.size());

  CHECK_THROWS_AS(cluster_filter(body, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cluster_filter(body, 1.0), std::invalid_argument);
}

TEST_CASE("source state prefers the open drawer") {
  const GroundTruthScene sc = generate_scene(1, "drawer");
  const GridSpec g = GridSpec::cube(64);
  VolumeGrid fields[2], vis[2];
  ArticulationState s = ArticulationState::initialize(2, default_seg_spec(), 0);
  for (int t = 0; t < 2; ++t) {
    fields[t] = ground_truth_fields(sc, t, g);
    vis[t] = visibility_grid(render_views(sc, t, 30, 5 + t), g, 0.005);
    const GridSpec& sg = s.seg[t].spec();
    for (int k = 0; k < sg.dims[2]; ++k)
      for (int j = 0; j < sg.dims[1]; ++j)
        for (int i = 0; i < sg.dims[0]; ++i) {
          const int p = sc.part_at(sg.center(i, j, k), t);
          s.seg[t].logit(sg.index(i, j, k), p) = 5.0;
        }
  }
  // The drawer slides out at state 1.
  CHECK(choose_source_state(s, fields, vis) == 1);
  std::swap(fields[0], fields[1]);
  std::swap(vis[0], vis[1]);
  std::swap(s.seg[0], s.seg[1]);
  CHECK(choose_source_state(s, fields, vis) == 0);
}

TEST_CASE("extract_object on ground-truth segmentation") {
  const GroundTruthScene sc = generate_scene(2, "drawer");
  const GridSpec g = GridSpec::cube(64);
  VolumeGrid fields[2] = {ground_truth_fields(sc, 0, g), ground_truth_fields(sc, 1, g)};
  VolumeGrid vis[2];
  ArticulationState s = ArticulationState::initialize(2, default_seg_spec(), 0);
  s.motions[1] = MotionParam::from_rigid(sc.part_motion(1, 0));
  for (int t = 0; t < 2; ++t) {
    const GridSpec& sg = s.seg[t].spec();
    for (int k = 0; k < sg.dims[2]; ++k)
      for (int j = 0; j < sg.dims[1]; ++j)
        for (int i = 0; i < sg.dims[0]; ++i)
          s.seg[t].logit(sg.index(i, j, k), sc.part_at(sg.center(i, j, k), t)) = 5.0;
  }
  ExtractOptions opt;
  opt.mesh_res = 96;
  opt.source_state = 1;
  const ArticulatedObject obj = extract_object(s, fields, vis, opt);
  REQUIRE(obj.parts.size() == 2);
  REQUIRE(obj.joints.size() == 1);
  CHECK(obj.joints[0].record.type == JointType::Prismatic);
  CHECK(std::abs(obj.joints[0].record.axis_dir.dot(sc.joints[0].axis_dir)) > 1 - 1e-9);
  CHECK(obj.joints[0].record.state_delta == doctest::Approx(sc.joints[0].state_delta).epsilon(1e-9));
  // Part vertices agree with ground-truth labels away from part boundaries.
  int n = 0, ok = 0;
  for (int p = 0; p < 2; ++p)
    for (const Vec3& v : obj.parts[p].vertices) {
      ++n;
      ok += sc.part_at(v, 1) == p;
    }
  CHECK(n > 1000);
  CHECK(double(ok) / n >= 0.95);
}
