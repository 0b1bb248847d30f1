#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "artikit/scenegen.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace ak;

namespace {

const char* kTemplates[] = {"drawer", "door", "laptop", "multi"};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

double part_sdf(const GroundTruthScene& s, int part, const Vec3& x, int state) {
  double best = 1e9;
  for (int i = 0; i < int(s.primitives.size()); ++i)
    if (s.primitives[i].part == part)
      best = std::min(best, s.primitives[i].sdf_local(s.primitive_pose(i, state).inverse().apply(x)));
  return best;
}

}  // namespace

TEST_CASE("template contracts") {
  const auto d = generate_scene(1, "drawer");
  CHECK(d.part_count == 2);
  REQUIRE(d.joints.size() == 1);
  CHECK(d.joints[0].type == JointType::Prismatic);
  CHECK(d.joints[0].state_delta > 0);

  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto m = generate_scene(seed, "multi");
    CHECK(m.part_count == 3);
    REQUIRE(m.joints.size() == 2);
    CHECK(m.joints[0].type == JointType::Revolute);
    CHECK(m.joints[1].type == JointType::Prismatic);
    const double door = rad2deg(m.joints[0].state_delta);
    CHECK(door >= 20.0);
    CHECK(door <= 80.0);
    CHECK(m.joints[1].state_delta >= 0.1);
    CHECK(m.joints[1].state_delta <= 0.25);
  }
  CHECK(generate_scene(2, "door").joints[0].type == JointType::Revolute);
  CHECK(generate_scene(2, "laptop").joints[0].type == JointType::Revolute);
  CHECK_THROWS_AS(generate_scene(1, "toaster"), std::invalid_argument);
}

TEST_CASE("generation is deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "artikit_test_scenegen";
  for (const char* t : kTemplates) {
    write_scene_json(dir / "a.json", generate_scene(7, t));
    write_scene_json(dir / "b.json", generate_scene(7, t));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  }
  const auto s = generate_scene(7, "drawer");
  const auto v1 = render_views(s, 1, 3, 11);
  const auto v2 = render_views(s, 1, 3, 11);
  for (int i = 0; i < 3; ++i) CHECK(v1[i].depth == v2[i].depth);
  CHECK(generate_scene(8, "drawer").joints[0].state_delta != s.joints[0].state_delta);
}

TEST_CASE("scene json round trip") {
  const auto path = std::filesystem::temp_directory_path() / "artikit_test_scenegen" / "rt.json";
  const auto s = generate_scene(3, "multi");
  write_scene_json(path, s);
  const auto r = read_scene_json(path);
  CHECK(r.primitives.size() == s.primitives.size());
  CHECK(r.interior_points.size() == s.interior_points.size());
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    CHECK(std::abs(r.sdf(x, 1) - s.sdf(x, 1)) < 1e-12);
  }
}

TEST_CASE("joint motions reproduce state-1 poses; part 0 static") {
  for (const char* t : kTemplates)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = generate_scene(seed, t);
      CHECK((s.state0[0].R - Mat3::Identity()).norm() == 0.0);
      CHECK(s.state1[0].t.norm() == 0.0);
      for (int p = 1; p < s.part_count; ++p) {
        const Rigid m = s.joints[p - 1].motion() * s.state0[p];
        CHECK((m.R - s.state1[p].R).norm() < 1e-14);
        CHECK((m.t - s.state1[p].t).norm() < 1e-14);
      }
    }
}

TEST_CASE("parts stay in the workspace and never interpenetrate") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (const char* t : kTemplates)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = generate_scene(seed, t);
      for (int state = 0; state < 2; ++state) {
        const auto [lo, hi] = s.bounds(state);
        CHECK(lo.minCoeff() > -0.47);
        CHECK(hi.maxCoeff() < 0.47);
        int overlaps = 0;
        for (int i = 0; i < 20000; ++i) {
          const Vec3 x(u(rng), u(rng), u(rng));
          int inside = 0;
          for (int p = 0; p < s.part_count; ++p) inside += part_sdf(s, p, x, state) < 0;
          overlaps += inside > 1;
        }
        CHECK_MESSAGE(overlaps == 0, t << " seed " << seed << " state " << state);
        // Surface samples of one part keep clear of every other part.
        const auto samples = sample_surface(s, state, 2000, seed);
        for (std::size_t i = 0; i < samples.points.size(); ++i)
          for (int p = 0; p < s.part_count; ++p)
            if (p != samples.parts[i]) CHECK(part_sdf(s, p, samples.points[i], state) > 0.005);
      }
    }
}

TEST_CASE("ray-box depth matches the analytic distance") {
  GroundTruthScene s;
  s.part_count = 2;
  Primitive b;
  b.half = Vec3(0.1, 0.2, 0.15);
  b.frame = Rigid::translation(Vec3(0.05, 0, 0));
  s.primitives = {b};
  s.state0 = s.state1 = {Rigid::identity(), Rigid::identity()};
  // Camera on +x looking at the box centre: centre pixel sees the +x face.
  const Vec3 eye(1.0, 0.0, 0.0);
  DepthView v;
  v.K = {100, 100, 32, 32};
  v.pose = look_at(eye, Vec3(0.05, 0, 0));
  v.width = v.height = 64;
  const Vec3 d = v.ray_direction(Vec2(32, 32));
  const auto hit = s.raycast(eye, d, 0);
  REQUIRE(hit);
  CHECK(hit->s == doctest::Approx(1.0 - 0.15).epsilon(1e-12));
  // Cylinder along z seen side-on.
  Primitive c;
  c.kind = Primitive::Kind::Cylinder;
  c.half = Vec3(0.1, 0.1, 0.3);
  s.primitives = {c};
  const auto hc = s.raycast(eye, Vec3(-1, 0, 0), 0);
  REQUIRE(hc);
  CHECK(hc->s == doctest::Approx(0.9).epsilon(1e-12));
  const auto top = s.raycast(Vec3(0.05, 0, 1), Vec3(0, 0, -1), 0);
  REQUIRE(top);
  CHECK(top->s == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("rendered depth is self-consistent and the object is framed") {
  const auto s = generate_scene(2, "multi");
  const auto views = render_views(s, 0, 6, 3);
  REQUIRE(views.size() == 6);
  for (const auto& v : views) {
    int on = 0;
    for (auto m : v.mask) on += m;
    const double ratio = double(on) / v.mask.size();
    CHECK(ratio > 0.0);
    CHECK(ratio < 1.0);
    // Object never touches the image border.
    for (int c = 0; c < v.width; ++c) CHECK(!v.mask_at(c, 0));
    double worst = 0;
    for (int r = 0; r < v.height; ++r)
      for (int c = 0; c < v.width; ++c) {
        if (!v.mask_at(c, r)) continue;
        const Vec2 px(c + 0.5, r + 0.5);
        const Vec3 x = v.unproject(px, v.depth_at(c, r));
        worst = std::max(worst, (*v.project(x) - px).norm());
        // The unprojected point lies on the surface (float depth storage).
        CHECK(std::abs(s.sdf(x, 0)) < 1e-5);
      }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("noiseless matches are exact ground-truth correspondences") {
  const auto s = generate_scene(4, "drawer");
  const auto v0 = render_views(s, 0, 8, 1);
  const auto v1 = render_views(s, 1, 8, 2);
  MatchOptions opt;
  opt.noise_px = 0;
  opt.outlier_frac = 0;
  opt.n_per_pair = 40;
  const auto matches = synth_matches(s, v0, v1, opt);
  REQUIRE(matches.size() > 200);
  int static_hits = 0, moving_hits = 0;
  const Vec3 shift = s.joints[0].state_delta * s.joints[0].axis_dir;
  for (const auto& m : matches) {
    const auto& src = m.t == 0 ? v0 : v1;
    const auto& dst = m.t == 0 ? v1 : v0;
    const Vec3 eye = src[m.v].camera_center();
    const Vec3 dir = src[m.v].ray_direction(m.p);
    const auto hit = s.raycast(eye, dir, m.t);
    REQUIRE(hit);
    const Vec3 x = eye + hit->s * dir;
    Vec3 xp = x;
    if (hit->part == 0) {
      ++static_hits;
    } else {
      ++moving_hits;
      xp = m.t == 0 ? Vec3(x + shift) : Vec3(x - shift);
    }
    CHECK((*dst[m.u].project(xp) - m.q).norm() < 1e-6);
  }
  CHECK(static_hits > 0);
  CHECK(moving_hits > 0);
}

TEST_CASE("noisy matches carry outliers and noise at the requested rates") {
  const auto s = generate_scene(4, "drawer");
  const auto v0 = render_views(s, 0, 8, 1);
  const auto v1 = render_views(s, 1, 8, 2);
  MatchOptions clean;
  clean.noise_px = 0;
  clean.outlier_frac = 0;
  MatchOptions noisy;
  noisy.noise_px = 2.0;
  noisy.outlier_frac = 0.1;
  const auto a = synth_matches(s, v0, v1, noisy);
  int far = 0;
  for (const auto& m : a) {
    const auto& src = m.t == 0 ? v0 : v1;
    const auto& dst = m.t == 0 ? v1 : v0;
    const Vec3 eye = src[m.v].camera_center();
    const auto hit = s.raycast(eye, src[m.v].ray_direction(m.p), m.t);
    if (!hit) {
      ++far;
      continue;
    }
    const Vec3 x = eye + hit->s * src[m.v].ray_direction(m.p);
    const auto q = dst[m.u].project(s.part_motion(hit->part, m.t).apply(x));
    far += (*q - m.q).norm() > 15.0;
  }
  const double frac = double(far) / a.size();
  CHECK(frac > 0.05);
  CHECK(frac < 0.15);
}

TEST_CASE("drawer interior is hidden when closed and visible when open") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto s = generate_scene(seed, seed == 4 ? "multi" : "drawer");
    REQUIRE(s.interior_points.size() >= 32);
    const auto v0 = render_views(s, 0, 100, 10 + seed);
    const auto v1 = render_views(s, 1, 100, 20 + seed);
    int hidden0 = 0, seen1 = 0;
    for (const auto& ip : s.interior_points) {
      hidden0 += !visibility(ip.x, v0, 0.03);
      seen1 += visibility(s.part_motion(ip.part).apply(ip.x), v1, 0.03);
    }
    CHECK(hidden0 == int(s.interior_points.size()));
    CHECK(seen1 == int(s.interior_points.size()));
  }
}

TEST_CASE("ground-truth fields: zero at the surface, colours in range") {
  const auto s = generate_scene(1, "laptop");
  const GridSpec spec = GridSpec::cube(64);
  const auto g = ground_truth_fields(s, 1, spec);
  CHECK(g.channels() == 4);
  const auto samples = sample_surface(s, 1, 2000, 3);
  CHECK(samples.points.size() == 2000);
  double mean = 0;
  for (const Vec3& x : samples.points) mean += std::abs(g.sample_esdf(x));
  CHECK(mean / samples.points.size() < 0.5 * spec.voxel_size);
  for (int c = 1; c < 4; ++c)
    for (float v : g.channel(c)) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  // Colours move with the part.
  const Vec3 x = samples.points[0];
  const Rigid back = s.part_motion(samples.parts[0], 1);
  CHECK((s.color(x, 1) - s.color(back.apply(x), 0)).norm() < 1e-9);
}
