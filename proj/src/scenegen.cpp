#include "artikit/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ak {

namespace {

constexpr double kWall = 0.02;   // cabinet wall thickness
constexpr double kGap = 0.008;   // clearance between parts
constexpr double kTray = 0.015;  // drawer tray wall thickness

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::uint64_t template_salt(const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) h = (h ^ c) * 1099511628211ull;
  return h;
}

struct Builder {
  GroundTruthScene& scene;
  Rng& rng;

  std::array<Vec3, 6> colors() {
    std::array<Vec3, 6> c;
    for (auto& v : c) v = Vec3(uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8));
    return c;
  }
  void box(int part, const Vec3& lo, const Vec3& hi) {
    Primitive p;
    p.kind = Primitive::Kind::Box;
    p.part = part;
    p.frame = Rigid::translation(0.5 * (lo + hi));
    p.half = 0.5 * (hi - lo);
    p.face_color = colors();
    scene.primitives.push_back(p);
  }
  void box(int part, const Rigid& frame, const Vec3& half) {
    Primitive p;
    p.kind = Primitive::Kind::Box;
    p.part = part;
    p.frame = frame;
    p.half = half;
    p.face_color = colors();
    scene.primitives.push_back(p);
  }
  /// Cylinder centred at c with its axis along world axis `axis` (0, 1 or 2).
  void cylinder(int part, const Vec3& c, int axis, double radius, double half_len) {
    Primitive p;
    p.kind = Primitive::Kind::Cylinder;
    p.part = part;
    Mat3 R = Mat3::Identity();
    if (axis == 0) R = axis_angle_matrix(Vec3::UnitY(), kPi / 2);
    if (axis == 1) R = axis_angle_matrix(Vec3::UnitX(), -kPi / 2);
    p.frame = {R, c};
    p.half = Vec3(radius, radius, half_len);
    p.face_color = colors();
    scene.primitives.push_back(p);
  }

  /// Five-wall shell open at the front face y = yf.
  void shell(double w, double yb, double yf, double zb, double zt) {
    box(0, Vec3(-w, yb, zb), Vec3(w, yf, zb + kWall));
    box(0, Vec3(-w, yb, zt - kWall), Vec3(w, yf, zt));
    box(0, Vec3(-w, yb, zb + kWall), Vec3(-w + kWall, yf, zt - kWall));
    box(0, Vec3(w - kWall, yb, zb + kWall), Vec3(w, yf, zt - kWall));
    box(0, Vec3(-w + kWall, yb, zb + kWall), Vec3(w - kWall, yb + kWall, zt - kWall));
  }

  /// Drawer sliding along +y inside the bay [zb, zt] (inner faces) of a shell.
  void drawer(int part, double w, double yb, double yf, double bay_lo, double bay_hi,
              double panel_lo, double panel_hi, double delta) {
    const double x0 = -w + kWall + kGap, x1 = w - kWall - kGap;
    const double y0 = yb + kWall + kGap, y1 = yf + kGap;
    const double z0 = bay_lo + kGap, ztop = bay_hi - kGap - 0.02;
    box(part, Vec3(x0, y0, z0), Vec3(x1, y1, z0 + kTray));
    box(part, Vec3(x0, y0, z0 + kTray), Vec3(x0 + kTray, y1, ztop));
    box(part, Vec3(x1 - kTray, y0, z0 + kTray), Vec3(x1, y1, ztop));
    box(part, Vec3(x0 + kTray, y0, z0 + kTray), Vec3(x1 - kTray, y0 + kTray, ztop));
    // Inner front wall filling the bay opening: the clearance gaps around
    // the panel then never give a straight line of sight into the bay.
    box(part, Vec3(x0 + kTray, y1 - kTray, z0 + kTray), Vec3(x1 - kTray, y1, ztop));
    box(part, Vec3(x0, y1 - kTray, ztop), Vec3(x1, y1, bay_hi - kGap));
    box(part, Vec3(-w, y1, panel_lo), Vec3(w, y1 + kWall, panel_hi));
    cylinder(part, Vec3(0, y1 + kWall + 0.01, 0.5 * (panel_lo + panel_hi)), 0, 0.012, 0.06);

    // Cavity samples: hidden behind the cabinet when closed, exposed once the
    // tray has slid out by delta. All lie >= 0.04 from exterior surfaces.
    const double m = 0.04;
    const double floor = z0 + kTray;
    const double ylo = std::max(y0 + kTray + m, yf - delta + m);
    const double yhi = y1 - kTray - m;
    for (int i = 0; i < 64 && ylo < yhi; ++i) {
      InteriorPoint ip;
      ip.x = Vec3(uniform(rng, x0 + kTray + m, x1 - kTray - m), uniform(rng, ylo, yhi),
                  uniform(rng, floor + 0.01, floor + 0.6 * (ztop - floor)));
      ip.part = part;
      ip.visible_state = 1;
      scene.interior_points.push_back(ip);
    }
  }

  /// Door panel over [zlo, zhi] hinged at its back-left edge about +z.
  void door(int part, double w, double yf, double zlo, double zhi) {
    const double y0 = yf + kGap;
    box(part, Vec3(-w, y0, zlo), Vec3(w, y0 + kWall, zhi));
    cylinder(part, Vec3(w - 0.04, y0 + kWall + 0.009, 0.5 * (zlo + zhi)), 2, 0.01,
             std::min(0.05, 0.3 * (zhi - zlo)));
  }
};

JointRecord revolute(const Vec3& dir, const Vec3& origin, double angle) {
  return {JointType::Revolute, dir.normalized(), origin, angle};
}

JointRecord prismatic(const Vec3& dir, double dist) {
  return {JointType::Prismatic, dir.normalized(), Vec3::Zero(), dist};
}

}  // namespace

const char* joint_type_name(JointType t) {
  return t == JointType::Revolute ? "revolute" : "prismatic";
}

JointType parse_joint_type(const std::string& s) {
  if (s == "revolute") return JointType::Revolute;
  if (s == "prismatic") return JointType::Prismatic;
  throw std::invalid_argument("unknown joint type '" + s + "'");
}

Rigid JointRecord::motion() const {
  if (type == JointType::Prismatic) return Rigid::translation(state_delta * axis_dir);
  return Rigid::about_axis(axis_dir, axis_origin, state_delta);
}

double Primitive::sdf_local(const Vec3& p) const {
  if (kind == Kind::Box) {
    const Vec3 q = p.cwiseAbs() - half;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  }
  const Vec2 q(std::hypot(p.x(), p.y()) - half.x(), std::abs(p.z()) - half.z());
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

int Primitive::nearest_face(const Vec3& p) const {
  if (kind == Kind::Box) {
    const Vec3 q = p.cwiseAbs() - half;
    Eigen::Index a = 0;
    q.maxCoeff(&a);
    return int(2 * a + (p[a] > 0 ? 1 : 0));
  }
  const double side = std::hypot(p.x(), p.y()) - half.x();
  const double cap = std::abs(p.z()) - half.z();
  if (side >= cap) return 0;
  return p.z() > 0 ? 5 : 4;
}

std::optional<double> Primitive::intersect_local(const Vec3& o, const Vec3& d,
                                                 double s_min) const {
  double best = std::numeric_limits<double>::infinity();
  if (kind == Kind::Box) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (std::abs(d[a]) < 1e-15) {
        if (std::abs(o[a]) > half[a]) return std::nullopt;
        continue;
      }
      double t0 = (-half[a] - o[a]) / d[a];
      double t1 = (half[a] - o[a]) / d[a];
      if (t0 > t1) std::swap(t0, t1);
      lo = std::max(lo, t0);
      hi = std::min(hi, t1);
    }
    if (lo > hi) return std::nullopt;
    if (lo > s_min) best = lo;
    else if (hi > s_min) best = hi;
  } else {
    const double r = half.x(), h = half.z();
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-15) {
      const double b = o.x() * d.x() + o.y() * d.y();
      const double c = o.x() * o.x() + o.y() * o.y() - r * r;
      const double disc = b * b - a * c;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        for (double s : {(-b - sq) / a, (-b + sq) / a})
          if (s > s_min && std::abs(o.z() + s * d.z()) <= h) best = std::min(best, s);
      }
    }
    if (std::abs(d.z()) > 1e-15) {
      for (double zc : {-h, h}) {
        const double s = (zc - o.z()) / d.z();
        const Vec3 p = o + s * d;
        if (s > s_min && p.x() * p.x() + p.y() * p.y() <= r * r) best = std::min(best, s);
      }
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

double Primitive::surface_area() const {
  if (kind == Kind::Box)
    return 8.0 * (half.x() * half.y() + half.y() * half.z() + half.x() * half.z());
  return 2.0 * kPi * half.x() * (2.0 * half.z()) + 2.0 * kPi * half.x() * half.x();
}

Rigid GroundTruthScene::part_motion(int part, int t) const {
  const Rigid m = state1.at(part) * state0.at(part).inverse();
  return t == 0 ? m : m.inverse();
}

Rigid GroundTruthScene::primitive_pose(int prim, int state) const {
  const Primitive& p = primitives.at(prim);
  return poses(state).at(p.part) * p.frame;
}

double GroundTruthScene::sdf(const Vec3& x, int state, int* nearest_prim) const {
  double best = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int i = 0; i < int(primitives.size()); ++i) {
    const double d = primitives[i].sdf_local(primitive_pose(i, state).inverse().apply(x));
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  if (nearest_prim) *nearest_prim = arg;
  return best;
}

Vec3 GroundTruthScene::color(const Vec3& x, int state) const {
  int prim = 0;
  sdf(x, state, &prim);
  const Primitive& p = primitives[prim];
  const Vec3 local = primitive_pose(prim, state).inverse().apply(x);
  const Vec3 base = p.face_color[p.nearest_face(local)];
  // Mild gradient in the primitive frame so colour moves with the part.
  const double g = 0.15 * local.dot(Vec3(1, 1, 1).normalized()) / p.half.norm();
  return (base + Vec3::Constant(g)).cwiseMax(0.0).cwiseMin(1.0);
}

int GroundTruthScene::part_at(const Vec3& x, int state) const {
  int prim = 0;
  sdf(x, state, &prim);
  return primitives[prim].part;
}

std::optional<RayHit> GroundTruthScene::raycast(const Vec3& origin, const Vec3& dir,
                                                int state) const {
  std::optional<RayHit> hit;
  for (int i = 0; i < int(primitives.size()); ++i) {
    const Rigid inv = primitive_pose(i, state).inverse();
    const auto s = primitives[i].intersect_local(inv.apply(origin), inv.R * dir, 1e-9);
    if (s && (!hit || *s < hit->s)) hit = RayHit{*s, primitives[i].part, i};
  }
  return hit;
}

std::pair<Vec3, Vec3> GroundTruthScene::bounds(int state) const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = 0; i < int(primitives.size()); ++i) {
    const Rigid pose = primitive_pose(i, state);
    const Vec3& h = primitives[i].half;
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner((c & 1 ? 1 : -1) * h.x(), (c & 2 ? 1 : -1) * h.y(),
                        (c & 4 ? 1 : -1) * h.z());
      const Vec3 w = pose.apply(corner);
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
  }
  return {lo, hi};
}

void GroundTruthScene::validate() const {
  if (part_count < 2) throw std::invalid_argument("scene needs at least two parts");
  if (int(joints.size()) != part_count - 1)
    throw std::invalid_argument("scene needs one joint per movable part");
  if (int(state0.size()) != part_count || int(state1.size()) != part_count)
    throw std::invalid_argument("scene needs a pose per part and state");
  for (const Primitive& p : primitives)
    if (p.part < 0 || p.part >= part_count) throw std::invalid_argument("primitive part out of range");
  for (const JointRecord& j : joints)
    if (std::abs(j.axis_dir.norm() - 1.0) > 1e-9) throw std::invalid_argument("joint axis not unit");
}

GroundTruthScene generate_scene(std::uint64_t seed, const std::string& name) {
  GroundTruthScene s;
  s.template_name = name;
  s.seed = seed;
  Rng rng(seed * 0x9E3779B97F4A7C15ull ^ template_salt(name));
  Builder b{s, rng};

  if (name == "drawer") {
    const double w = uniform(rng, 0.18, 0.24), d = uniform(rng, 0.26, 0.34);
    const double h = uniform(rng, 0.16, 0.24), delta = uniform(rng, 0.1, 0.25);
    const double yf = 0.12, yb = yf - d, zb = -h / 2, zt = h / 2;
    b.shell(w, yb, yf, zb, zt);
    b.drawer(1, w, yb, yf, zb + kWall, zt - kWall, zb, zt, delta);
    s.part_count = 2;
    s.joints = {prismatic(Vec3::UnitY(), delta)};
  } else if (name == "door") {
    const double w = uniform(rng, 0.14, 0.19), d = uniform(rng, 0.24, 0.32);
    const double h = uniform(rng, 0.22, 0.32), delta = deg2rad(uniform(rng, 20, 80));
    const double yf = 0.42 - 2 * w - kWall - kGap, zb = -h / 2, zt = h / 2;
    b.shell(w, yf - d, yf, zb, zt);
    b.door(1, w, yf, zb, zt);
    s.part_count = 2;
    s.joints = {revolute(Vec3::UnitZ(), Vec3(-w, yf + kGap, 0), delta)};
  } else if (name == "laptop") {
    const double w = uniform(rng, 0.16, 0.22), dp = uniform(rng, 0.22, 0.30);
    const double phi0 = deg2rad(uniform(rng, 100, 120)), delta = deg2rad(uniform(rng, 20, 80));
    const double tb = 0.025, tl = 0.012, yc = -0.05, z0 = -0.15;
    b.box(0, Vec3(-w, yc - dp / 2, z0), Vec3(w, yc + dp / 2, z0 + tb));
    const Vec3 hinge(0, yc + dp / 2 + kGap, z0 + tb + kGap);
    const Rigid closed = Rigid::translation(Vec3(0, hinge.y() - dp / 2, hinge.z() + tl / 2));
    b.box(1, Rigid::about_axis(Vec3::UnitX(), hinge, -phi0) * closed, Vec3(w, dp / 2, tl / 2));
    s.part_count = 2;
    // Positive rotation about +x folds the lid toward the base.
    s.joints = {revolute(Vec3::UnitX(), hinge, delta)};
  } else if (name == "multi") {
    const double w = uniform(rng, 0.15, 0.19), d = uniform(rng, 0.26, 0.32);
    const double h1 = uniform(rng, 0.12, 0.16), h2 = uniform(rng, 0.16, 0.22);
    const double door_delta = deg2rad(uniform(rng, 20, 80));
    const double drawer_delta = uniform(rng, 0.1, 0.25);
    const double yf = 0.42 - 2 * w - kWall - kGap, yb = yf - d;
    const double zb = -(h1 + h2 + 3 * kWall) / 2, zt = -zb;
    const double div_lo = zb + kWall + h1, div_hi = div_lo + kWall;
    const double zmid = 0.5 * (div_lo + div_hi);
    b.shell(w, yb, yf, zb, zt);
    b.box(0, Vec3(-w + kWall, yb + kWall, div_lo), Vec3(w - kWall, yf, div_hi));
    b.door(1, w, yf, zmid + kGap / 2, zt);
    b.drawer(2, w, yb, yf, zb + kWall, div_lo, zb, zmid - kGap / 2, drawer_delta);
    s.part_count = 3;
    s.joints = {revolute(Vec3::UnitZ(), Vec3(-w, yf + kGap, 0), door_delta),
                prismatic(Vec3::UnitY(), drawer_delta)};
  } else {
    throw std::invalid_argument("unknown template '" + name + "' (drawer|door|laptop|multi)");
  }

  s.state0.assign(s.part_count, Rigid::identity());
  s.state1.assign(s.part_count, Rigid::identity());
  for (int p = 1; p < s.part_count; ++p) s.state1[p] = s.joints[p - 1].motion();
  s.validate();
  return s;
}

std::vector<DepthView> render_views(const GroundTruthScene& scene, int state, int n_views,
                                    std::uint64_t seed, const RenderOptions& opt) {
  if (n_views < 1) throw std::invalid_argument("render_views: n_views must be >= 1");
  // Cameras aim at the centre of the union of both states' bounds so that
  // views of the two states share a frame of reference.
  const auto [lo0, hi0] = scene.bounds(0);
  const auto [lo1, hi1] = scene.bounds(1);
  const Vec3 center = 0.5 * (lo0.cwiseMin(lo1) + hi0.cwiseMax(hi1));
  Rng rng(seed * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull * (state + 1));
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<DepthView> views;
  while (int(views.size()) < n_views) {
    const double z = uniform(rng, opt.min_elevation_sin, opt.max_elevation_sin);
    const double phi = uniform(rng, 0.0, 2.0 * kPi);
    const double r = std::sqrt(1.0 - z * z);
    const Vec3 eye = center + opt.radius * Vec3(r * std::cos(phi), r * std::sin(phi), z);
    DepthView v;
    v.K = {opt.focal, opt.focal, opt.width / 2.0, opt.height / 2.0};
    v.pose = look_at(eye, center);
    v.width = opt.width;
    v.height = opt.height;
    v.depth.assign(std::size_t(v.width) * v.height, 0.0f);
    v.mask.assign(v.depth.size(), 0);
    bool any = false;
    for (int row = 0; row < v.height; ++row)
      for (int col = 0; col < v.width; ++col) {
        const Vec3 d = v.ray_direction(Vec2(col + 0.5, row + 0.5));
        const auto hit = scene.raycast(eye, d, state);
        if (!hit) continue;
        double depth = v.pose.apply(eye + hit->s * d).z();
        if (opt.depth_noise > 0) depth += opt.depth_noise * noise(rng);
        const std::size_t k = std::size_t(row) * v.width + col;
        v.depth[k] = static_cast<float>(std::max(depth, 1e-6));
        v.mask[k] = 1;
        any = true;
      }
    if (any) views.push_back(std::move(v));
  }
  return views;
}

std::vector<int> render_part_labels(const GroundTruthScene& scene, int state,
                                    const DepthView& view) {
  std::vector<int> labels(std::size_t(view.width) * view.height, -1);
  const Vec3 eye = view.camera_center();
  for (int row = 0; row < view.height; ++row)
    for (int col = 0; col < view.width; ++col) {
      const auto hit = scene.raycast(eye, view.ray_direction(Vec2(col + 0.5, row + 0.5)), state);
      if (hit) labels[std::size_t(row) * view.width + col] = hit->part;
    }
  return labels;
}

std::vector<MatchPair> synth_matches(const GroundTruthScene& scene,
                                     const std::vector<DepthView>& views0,
                                     const std::vector<DepthView>& views1,
                                     const MatchOptions& opt) {
  if (opt.k_nearest < 1) throw std::invalid_argument("synth_matches: k_nearest must be >= 1");
  Rng rng(opt.seed * 0xA0761D6478BD642Full + 0xE7037ED1A0B428DBull);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<MatchPair> out;

  for (int t = 0; t < 2; ++t) {
    const auto& src = t == 0 ? views0 : views1;
    const auto& dst = t == 0 ? views1 : views0;
    const int tp = 1 - t;
    std::vector<Rigid> motion(scene.part_count);
    for (int p = 0; p < scene.part_count; ++p) motion[p] = scene.part_motion(p, t);

    for (int v = 0; v < int(src.size()); ++v) {
      const Vec3 cv = src[v].camera_center();
      std::vector<int> order(dst.size());
      for (int u = 0; u < int(dst.size()); ++u) order[u] = u;
      const int k = std::min<int>(opt.k_nearest, int(dst.size()));
      std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        const double da = (dst[a].camera_center() - cv).squaredNorm();
        const double db = (dst[b].camera_center() - cv).squaredNorm();
        return da != db ? da < db : a < b;
      });

      std::vector<int> pixels;
      for (int i = 0; i < int(src[v].mask.size()); ++i)
        if (src[v].mask[i]) pixels.push_back(i);
      if (pixels.empty()) continue;

      for (int n = 0; n < k; ++n) {
        const int u = order[n];
        const DepthView& vu = dst[u];
        const Vec3 eye_u = vu.camera_center();
        std::vector<int> cand = pixels;
        std::shuffle(cand.begin(), cand.end(), rng);
        int kept = 0;
        for (int idx : cand) {
          if (kept >= opt.n_per_pair) break;
          const Vec2 p(idx % src[v].width + 0.5, idx / src[v].width + 0.5);
          const Vec3 eye_v = src[v].camera_center();
          const auto hit = scene.raycast(eye_v, src[v].ray_direction(p), t);
          if (!hit) continue;
          const Vec3 x = eye_v + hit->s * src[v].ray_direction(p);
          const Vec3 xp = motion[hit->part].apply(x);
          const auto q = vu.project(xp);
          if (!q || !vu.in_image(*q)) continue;
          // Co-visibility: the transported point is the first hit from u.
          const Vec3 ray = xp - eye_u;
          const auto hu = scene.raycast(eye_u, ray.normalized(), tp);
          if (!hu || std::abs(hu->s - ray.norm()) > 1e-6) continue;

          MatchPair m{t, v, u, p, *q};
          if (opt.noise_px > 0) {
            // p stays the exact pixel centre; all noise lands on q.
            m.q += opt.noise_px * Vec2(noise(rng), noise(rng));
            m.q = m.q.cwiseMax(0.0).cwiseMin(Vec2(vu.width, vu.height) - Vec2::Constant(1e-6));
          }
          if (opt.outlier_frac > 0 && uniform(rng, 0.0, 1.0) < opt.outlier_frac)
            m.q = Vec2(uniform(rng, 0.0, vu.width), uniform(rng, 0.0, vu.height));
          out.push_back(m);
          ++kept;
        }
      }
    }
  }
  return out;
}

VolumeGrid ground_truth_fields(const GroundTruthScene& scene, int state, const GridSpec& spec) {
  spec.validate();
  VolumeGrid g(spec, 4);
  std::vector<Rigid> inv(scene.primitives.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = scene.primitive_pose(int(i), state).inverse();
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i) {
        const Vec3 x = spec.center(i, j, k);
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        Vec3 local_best;
        for (std::size_t p = 0; p < inv.size(); ++p) {
          const Vec3 local = inv[p].apply(x);
          const double d = scene.primitives[p].sdf_local(local);
          if (d < best) {
            best = d;
            arg = int(p);
            local_best = local;
          }
        }
        const Primitive& prim = scene.primitives[arg];
        const double gr = 0.15 * local_best.dot(Vec3(1, 1, 1).normalized()) / prim.half.norm();
        const Vec3 c = (prim.face_color[prim.nearest_face(local_best)] + Vec3::Constant(gr))
                           .cwiseMax(0.0)
                           .cwiseMin(1.0);
        g.at(i, j, k, 0) = static_cast<float>(best);
        for (int ch = 0; ch < 3; ++ch) g.at(i, j, k, 1 + ch) = static_cast<float>(c[ch]);
      }
  return g;
}

SurfaceSamples sample_surface(const GroundTruthScene& scene, int state, int n,
                              std::uint64_t seed) {
  Rng rng(seed * 0x9FB21C651E98DF25ull + 0x2545F4914F6CDD1Dull);
  std::vector<double> areas;
  for (const Primitive& p : scene.primitives) areas.push_back(p.surface_area());
  std::discrete_distribution<int> pick(areas.begin(), areas.end());
  SurfaceSamples out;
  // Rejection sampling: keep points not strictly inside another primitive.
  for (int guard = 0; int(out.points.size()) < n && guard < 200 * n; ++guard) {
    const int pi = pick(rng);
    const Primitive& p = scene.primitives[pi];
    Vec3 local;
    if (p.kind == Primitive::Kind::Box) {
      const Vec3& h = p.half;
      const double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
      const double r = uniform(rng, 0.0, ax + ay + az);
      const int a = r < ax ? 0 : (r < ax + ay ? 1 : 2);
      for (int c = 0; c < 3; ++c) local[c] = uniform(rng, -h[c], h[c]);
      local[a] = uniform(rng, 0.0, 1.0) < 0.5 ? -h[a] : h[a];
    } else {
      const double rad = p.half.x(), hh = p.half.z();
      const double side = 2 * kPi * rad * 2 * hh, cap = kPi * rad * rad;
      const double r = uniform(rng, 0.0, side + 2 * cap);
      if (r < side) {
        const double th = uniform(rng, 0.0, 2 * kPi);
        local = Vec3(rad * std::cos(th), rad * std::sin(th), uniform(rng, -hh, hh));
      } else {
        const double th = uniform(rng, 0.0, 2 * kPi);
        const double rr = rad * std::sqrt(uniform(rng, 0.0, 1.0));
        local = Vec3(rr * std::cos(th), rr * std::sin(th), r < side + cap ? -hh : hh);
      }
    }
    const Vec3 x = scene.primitive_pose(pi, state).apply(local);
    bool covered = false;
    for (int q = 0; q < int(scene.primitives.size()) && !covered; ++q) {
      if (q == pi) continue;
      const Vec3 lq = scene.primitive_pose(q, state).inverse().apply(x);
      covered = scene.primitives[q].sdf_local(lq) < 1e-7;
    }
    if (covered) continue;
    out.points.push_back(x);
    out.parts.push_back(p.part);
  }
  return out;
}

}  // namespace ak
