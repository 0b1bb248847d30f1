#include "artikit/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ak {

std::vector<Vec3> sample_mesh(const TriMesh& mesh, int n, std::uint64_t seed) {
  std::vector<Vec3> out;
  if (mesh.triangles.empty() || n <= 0) return out;
  std::vector<double> cum(mesh.triangles.size());
  double total = 0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3& a = mesh.vertices[t[0]];
    total += 0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm();
    cum[i] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double r = u01(rng) * total;
    const std::size_t i =
        std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin(),
                              cum.size() - 1);
    const auto& t = mesh.triangles[i];
    double a = u01(rng), b = u01(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3& v0 = mesh.vertices[t[0]];
    out.push_back(v0 + a * (mesh.vertices[t[1]] - v0) + b * (mesh.vertices[t[2]] - v0));
  }
  return out;
}

NearestNeighbors::NearestNeighbors(std::span<const Vec3> points) : pts_(points.begin(), points.end()) {
  if (pts_.empty()) throw std::invalid_argument("NearestNeighbors: empty point set");
  Vec3 lo = pts_[0], hi = pts_[0];
  for (const Vec3& p : pts_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 ext = (hi - lo).cwiseMax(1e-9);
  // About two points per cell for a surface-like set, at most 128 per axis.
  const double vol = ext.x() * ext.y() * ext.z();
  cell_ = std::max({std::cbrt(vol * 2.0 / pts_.size()), ext.maxCoeff() / 128.0, 1e-9});
  lo_ = lo;
  for (int a = 0; a < 3; ++a) dims_[a] = std::max(1, int(std::ceil(ext[a] / cell_)));
  const std::size_t ncell = std::size_t(dims_[0]) * dims_[1] * dims_[2];
  std::vector<int> cell_of(pts_.size());
  start_.assign(ncell + 1, 0);
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a)
      c[a] = std::clamp(int((pts_[i][a] - lo_[a]) / cell_), 0, dims_[a] - 1);
    cell_of[i] = (c[2] * dims_[1] + c[1]) * dims_[0] + c[0];
    ++start_[cell_of[i] + 1];
  }
  std::partial_sum(start_.begin(), start_.end(), start_.begin());
  order_.resize(pts_.size());
  std::vector<int> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < pts_.size(); ++i) order_[fill[cell_of[i]]++] = int(i);
}

double NearestNeighbors::distance(const Vec3& q) const {
  std::array<int, 3> c;
  for (int a = 0; a < 3; ++a)
    c[a] = std::clamp(int(std::floor((q[a] - lo_[a]) / cell_)), 0, dims_[a] - 1);
  double best2 = std::numeric_limits<double>::infinity();
  const int rmax = std::max({dims_[0], dims_[1], dims_[2]});
  for (int r = 0; r <= rmax; ++r) {
    // Visit only the shell at Chebyshev distance r.
    for (int k = c[2] - r; k <= c[2] + r; ++k) {
      if (k < 0 || k >= dims_[2]) continue;
      for (int j = c[1] - r; j <= c[1] + r; ++j) {
        if (j < 0 || j >= dims_[1]) continue;
        const bool face = std::abs(k - c[2]) == r || std::abs(j - c[1]) == r;
        for (int i = c[0] - r; i <= c[0] + r; i += (face ? 1 : std::max(1, 2 * r))) {
          if (i < 0 || i >= dims_[0]) continue;
          const int cell = (k * dims_[1] + j) * dims_[0] + i;
          for (int s = start_[cell]; s < start_[cell + 1]; ++s)
            best2 = std::min(best2, (pts_[order_[s]] - q).squaredNorm());
        }
      }
    }
    // Unvisited cells are at least r cell widths away from q.
    if (best2 <= (r * cell_) * (r * cell_)) break;
  }
  return std::sqrt(best2);
}

namespace {

double mean_nn(std::span<const Vec3> from, const NearestNeighbors& to) {
  double s = 0;
  for (const Vec3& a : from) s += to.distance(a);
  return s / double(from.size());
}

}  // namespace

double chamfer_l1(std::span<const Vec3> A, std::span<const Vec3> B) {
  if (A.empty() || B.empty()) throw std::invalid_argument("chamfer_l1: empty point set");
  return mean_nn(A, NearestNeighbors(B)) + mean_nn(B, NearestNeighbors(A));
}

double line_distance(const Vec3& o1, const Vec3& d1, const Vec3& o2, const Vec3& d2) {
  const Vec3 a = d1.normalized(), b = d2.normalized();
  const Vec3 w = o2 - o1;
  const Vec3 n = a.cross(b);
  if (n.norm() < 1e-9) return (w - w.dot(a) * a).norm();  // parallel
  return std::abs(w.dot(n)) / n.norm();
}

AxisError axis_errors(const JointRecord& pred, const JointRecord& gt,
                      std::vector<std::string>* warnings) {
  auto unit = [&](Vec3 d, const char* who) {
    const double n = d.norm();
    if (n == 0.0) throw std::invalid_argument(std::string("axis_errors: zero ") + who + " axis");
    if (std::abs(n - 1.0) > 1e-9 && warnings)
      warnings->push_back(std::string(who) + " axis direction normalised");
    return Vec3(d / n);
  };
  const Vec3 a = unit(pred.axis_dir, "predicted"), b = unit(gt.axis_dir, "ground-truth");
  AxisError e;
  e.ang_deg = rad2deg(std::acos(std::min(1.0, std::abs(a.dot(b)))));
  if (pred.type == JointType::Revolute && gt.type == JointType::Revolute) {
    e.has_pos = true;
    e.pos = line_distance(pred.axis_origin, a, gt.axis_origin, b);
  }
  return e;
}

double motion_error(const Rigid& pred, const JointRecord& gt) {
  const Rigid g = gt.motion();
  if (gt.type == JointType::Revolute) return rad2deg(rotation_angle(pred.R * g.R.transpose()));
  return (pred.t - g.t).norm();
}

std::vector<int> match_parts(const std::vector<std::vector<Vec3>>& pred,
                             const std::vector<std::vector<Vec3>>& gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("match_parts: part count mismatch");
  const int M = int(pred.size());
  // Empty predicted parts cost a large constant so any assignment stays valid.
  std::vector<std::vector<double>> cost(M, std::vector<double>(M, 1e6));
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      if (!pred[i].empty() && !gt[j].empty()) cost[i][j] = chamfer_l1(pred[i], gt[j]);
  std::vector<int> perm(M), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (int i = 0; i < M; ++i) c += cost[i][perm[i]];
    if (c < best_cost) {  // strict: the first (lexicographically smallest) optimum wins
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

EvalReport evaluate(const std::vector<TriMesh>& parts, const std::vector<ExtractedJoint>& joints,
                    int source_state, const GroundTruthScene& gt, const EvalOptions& opt) {
  const int M = gt.part_count;
  if (int(parts.size()) != M)
    throw std::invalid_argument("evaluate: predicted part count " + std::to_string(parts.size()) +
                                " != ground truth " + std::to_string(M));
  EvalReport rep;
  const double to_mm = 1000.0 / gt.scale;

  // Predicted motions per part; parts at state 1 return to state 0.
  std::vector<Rigid> motion(M);
  for (const ExtractedJoint& j : joints) {
    if (j.part <= 0 || j.part >= M) throw std::invalid_argument("evaluate: joint part index out of range");
    motion[j.part] = j.record.motion();
  }
  std::vector<std::vector<Vec3>> pred(M), truth(M);
  std::vector<Vec3> pred_all, truth_all;
  for (int p = 0; p < M; ++p) {
    pred[p] = sample_mesh(parts[p], opt.n_samples, opt.seed + 17 * p + 1);
    if (source_state == 1)
      for (Vec3& x : pred[p]) x = motion[p].inverse().apply(x);
    if (pred[p].empty()) rep.warnings.push_back("predicted part " + std::to_string(p) + " is empty");
  }
  {
    TriMesh merged;
    for (int p = 0; p < M; ++p) {
      const int base = int(merged.vertices.size());
      for (const Vec3& v : parts[p].vertices)
        merged.vertices.push_back(source_state == 1 ? motion[p].inverse().apply(v) : v);
      for (const auto& t : parts[p].triangles)
        merged.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
    pred_all = sample_mesh(merged, opt.n_samples, opt.seed);
  }
  const SurfaceSamples gs = sample_surface(gt, 0, opt.n_samples * M * 2, opt.seed + 7);
  for (std::size_t i = 0; i < gs.points.size(); ++i) {
    if (int(truth_all.size()) < opt.n_samples) truth_all.push_back(gs.points[i]);
    if (int(truth[gs.parts[i]].size()) < opt.n_samples) truth[gs.parts[i]].push_back(gs.points[i]);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.cd_w = pred_all.empty() ? nan : chamfer_l1(pred_all, truth_all) * to_mm;
  rep.part_assignment = match_parts(pred, truth);
  std::vector<int> inverse(M);
  for (int p = 0; p < M; ++p) inverse[rep.part_assignment[p]] = p;
  auto part_cd = [&](int g) {
    const int p = inverse[g];
    return pred[p].empty() || truth[g].empty() ? nan : chamfer_l1(pred[p], truth[g]) * to_mm;
  };
  rep.cd_s = part_cd(0);
  for (int g = 1; g < M; ++g) {
    rep.cd_m.push_back(part_cd(g));
    JointEval je;
    je.gt_part = g;
    je.pred_part = inverse[g];
    const JointRecord& gj = gt.joints[g - 1];
    const ExtractedJoint* pj = nullptr;
    for (const ExtractedJoint& j : joints)
      if (j.part == je.pred_part) pj = &j;
    if (!pj) {
      rep.warnings.push_back("ground-truth part " + std::to_string(g) +
                             " matched the static predicted part; joint not evaluated");
      je.axis_ang = je.part_motion = je.part_motion_units = nan;
      rep.joints.push_back(je);
      continue;
    }
    je.type_correct = pj->record.type == gj.type;
    const AxisError ae = axis_errors(pj->record, gj, &rep.warnings);
    je.axis_ang = ae.ang_deg;
    je.has_pos = ae.has_pos;
    je.axis_pos_units = ae.pos;
    je.axis_pos = ae.pos / gt.scale * 10.0;
    je.part_motion_units = motion_error(pj->record.motion(), gj);
    je.part_motion = gj.type == JointType::Revolute ? je.part_motion_units
                                                    : je.part_motion_units / gt.scale;
    rep.joints.push_back(je);
  }
  return rep;
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["cd_w"] = num(cd_w);
  j["cd_s"] = num(cd_s);
  j["cd_m"] = nlohmann::json::array();
  for (double v : cd_m) j["cd_m"].push_back(num(v));
  j["part_assignment"] = part_assignment;
  j["joints"] = nlohmann::json::array();
  for (const JointEval& e : joints) {
    nlohmann::json je{{"gt_part", e.gt_part},
                      {"pred_part", e.pred_part},
                      {"type_correct", e.type_correct},
                      {"axis_ang", num(e.axis_ang)},
                      {"part_motion", num(e.part_motion)}};
    je["axis_pos"] = e.has_pos ? num(e.axis_pos) : nlohmann::json(nullptr);
    j["joints"].push_back(je);
  }
  j["warnings"] = warnings;
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "CD-w (mm)   " << std::setw(12) << cd_w << '\n';
  os << "CD-s (mm)   " << std::setw(12) << cd_s << '\n';
  for (std::size_t i = 0; i < cd_m.size(); ++i)
    os << "CD-m" << i + 1 << " (mm)  " << std::setw(12) << cd_m[i] << '\n';
  os << "joint  pred  type  axis_ang(deg)  axis_pos(0.1m)  motion\n";
  for (const JointEval& e : joints) {
    os << std::setw(5) << e.gt_part << std::setw(6) << e.pred_part << std::setw(6)
       << (e.type_correct ? "ok" : "F") << std::setw(15) << e.axis_ang << std::setw(16);
    if (e.has_pos) os << e.axis_pos; else os << "-";
    os << std::setw(8) << e.part_motion << '\n';
  }
  for (const std::string& w : warnings) os << "warning: " << w << '\n';
  return os.str();
}

}  // namespace ak
