#include "artikit/extract.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ak {

JointType classify_joint(const Rigid& m, double tau_r_deg) {
  return rad2deg(rotation_angle(m.R)) < tau_r_deg ? JointType::Prismatic : JointType::Revolute;
}

RevoluteParams revolute_params(const Rigid& m) {
  RevoluteParams r;
  r.angle = rotation_angle(m.R);
  if (r.angle < 1e-6) throw std::invalid_argument("revolute_params: rotation angle below 1e-6 rad");
  r.axis_dir = rotation_axis(m.R);
  // I - R has rank 2 with the axis as its null space; the smallest singular
  // value is dropped so the solution has no component along the axis.
  const Mat3 A = Mat3::Identity() - m.R;
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  const Vec3 inv(1.0 / sv[0], 1.0 / sv[1], 0.0);
  r.axis_origin = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * m.t;
  r.residual = (A * r.axis_origin - m.t).norm();
  return r;
}

PrismaticParams prismatic_params(const Rigid& m) {
  const double n = m.t.norm();
  if (n < 1e-6) throw std::invalid_argument("prismatic_params: translation below 1e-6");
  return {m.t / n, n};
}

ExtractedJoint extract_joint(int part, const Rigid& m, double tau_r_deg) {
  ExtractedJoint j;
  j.part = part;
  j.record.type = classify_joint(m, tau_r_deg);
  if (j.record.type == JointType::Revolute) {
    const RevoluteParams r = revolute_params(m);
    j.record.axis_dir = r.axis_dir;
    j.record.axis_origin = r.axis_origin;
    j.record.state_delta = r.angle;
    j.residual = r.residual;
  } else {
    const PrismaticParams p = prismatic_params(m);
    j.record.axis_dir = p.axis_dir;
    j.record.axis_origin = Vec3::Zero();
    j.record.state_delta = p.displacement;
  }
  return j;
}

SegmentedMesh segment_parts(const SegField& seg, const TriMesh& mesh) {
  mesh.validate();
  const int M = seg.parts();
  SegmentedMesh out;
  out.labeled = mesh;
  out.labeled.part_ids.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    out.labeled.part_ids[i] = seg.label(mesh.vertices[i]);

  std::vector<std::vector<int>> remap(M, std::vector<int>(mesh.vertices.size(), -1));
  out.parts.resize(M);
  for (const auto& tri : mesh.triangles) {
    int votes[3];
    for (int k = 0; k < 3; ++k) votes[k] = out.labeled.part_ids[tri[k]];
    // Majority of three; with three distinct labels the lowest wins.
    int part = *std::min_element(votes, votes + 3);
    for (int k = 0; k < 3; ++k)
      if (std::count(votes, votes + 3, votes[k]) >= 2) part = votes[k];
    TriMesh& pm = out.parts[part];
    std::array<int, 3> t{};
    for (int k = 0; k < 3; ++k) {
      int& idx = remap[part][tri[k]];
      if (idx < 0) {
        idx = int(pm.vertices.size());
        pm.vertices.push_back(mesh.vertices[tri[k]]);
        pm.part_ids.push_back(part);
      }
      t[k] = idx;
    }
    pm.triangles.push_back(t);
  }
  for (int p = 0; p < M; ++p)
    if (std::find(out.labeled.part_ids.begin(), out.labeled.part_ids.end(), p) ==
        out.labeled.part_ids.end())
      out.warnings.push_back("part " + std::to_string(p) + " received no vertices");
  return out;
}

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

TriMesh cluster_filter(const TriMesh& mesh, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("cluster_filter: tau must lie in (0, 1)");
  if (mesh.vertices.empty()) return mesh;
  const int n = int(mesh.vertices.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& t : mesh.triangles)
    for (int k = 1; k < 3; ++k) {
      const int a = find_root(parent, t[0]), b = find_root(parent, t[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<int> size(n, 0);
  std::vector<char> used(n, 0);
  for (const auto& t : mesh.triangles)
    for (int v : t) used[v] = 1;
  for (int i = 0; i < n; ++i)
    if (used[i]) ++size[find_root(parent, i)];
  const int largest = *std::max_element(size.begin(), size.end());
  const double keep_min = tau * largest;

  TriMesh out;
  std::vector<int> remap(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!used[i] || size[find_root(parent, i)] < keep_min) continue;
    remap[i] = int(out.vertices.size());
    out.vertices.push_back(mesh.vertices[i]);
    if (!mesh.part_ids.empty()) out.part_ids.push_back(mesh.part_ids[i]);
  }
  for (const auto& t : mesh.triangles)
    if (remap[t[0]] >= 0) out.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
  return out;
}

int choose_source_state(const ArticulationState& s, const VolumeGrid fields[2],
                        const VolumeGrid visibility[2]) {
  long count[2] = {0, 0};
  for (int t = 0; t < 2; ++t) {
    const VolumeGrid& f = fields[t];
    const GridSpec& g = f.spec();
    const double band = 2.0 * g.voxel_size;
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          const double e = f.at(i, j, k, 0);
          // occupancy > 0.5 within a thin shell below the surface
          if (!(e < 0.0 && e > -band)) continue;
          const Vec3 x = g.center(i, j, k);
          if (!visibility[t].empty() && !lookup_visible(visibility[t], x)) continue;
          if (s.seg[t].label(x) > 0) ++count[t];
        }
  }
  return count[1] > count[0] ? 1 : 0;
}

ArticulatedObject extract_object(const ArticulationState& s, const VolumeGrid fields[2],
                                 const VolumeGrid visibility[2], const ExtractOptions& opt) {
  const int M = s.part_count();
  ArticulatedObject obj;
  for (int p = 1; p < M; ++p) {
    const Rigid m = s.motions[p].decode();
    try {
      obj.joints.push_back(extract_joint(p, m, opt.tau_r_deg));
    } catch (const std::invalid_argument& e) {
      // A vanishing translation still yields a record so the joint list stays complete.
      ExtractedJoint j;
      j.part = p;
      j.record.type = JointType::Prismatic;
      j.record.axis_dir = Vec3::UnitZ();
      j.record.state_delta = 0.0;
      obj.joints.push_back(j);
      obj.warnings.push_back("part " + std::to_string(p) + ": " + e.what());
    }
  }

  obj.source_state = opt.source_state >= 0 ? opt.source_state
                                           : choose_source_state(s, fields, visibility);
  if (obj.source_state > 1) throw std::invalid_argument("source state must be 0 or 1");
  const VolumeGrid& f = fields[obj.source_state];
  const GridSpec& g = f.spec();
  GridSpec fine;
  fine.origin = g.origin;
  const double extent = g.voxel_size * g.dims[0];
  fine.voxel_size = extent / opt.mesh_res;
  for (int a = 0; a < 3; ++a)
    fine.dims[a] = std::max(2, int(std::lround(g.voxel_size * g.dims[a] / fine.voxel_size)));
  const TriMesh mesh = cluster_filter(extract_mesh(resample(f, fine), 0.0), opt.tau_cluster);

  SegmentedMesh seg = segment_parts(s.seg[obj.source_state], mesh);
  obj.warnings.insert(obj.warnings.end(), seg.warnings.begin(), seg.warnings.end());
  obj.parts.resize(M);
  for (int p = 0; p < M; ++p)
    obj.parts[p] = seg.parts[p].empty() ? seg.parts[p] : cluster_filter(seg.parts[p], opt.tau_cluster);
  return obj;
}

}  // namespace ak
