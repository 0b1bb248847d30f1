#include "artikit/volume.hpp"

#include "mc_tables.hpp"

#include <algorithm>
#include <unordered_map>

namespace ak {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

TriMesh extract_mesh(const VolumeGrid& grid, double iso, int channel) {
  const GridSpec& spec = grid.spec();
  const auto val = grid.channel(channel);
  TriMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;

  auto vertex_on_edge = [&](int i, int j, int k, int e, const double* cv) {
    const int a = kEdge[e][0], b = kEdge[e][1];
    // canonical key: lower corner + axis
    const int* ca = kCorner[a];
    const int* cb = kCorner[b];
    const int li = i + std::min(ca[0], cb[0]), lj = j + std::min(ca[1], cb[1]),
              lk = k + std::min(ca[2], cb[2]);
    const int axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
    const std::uint64_t key = std::uint64_t(spec.index(li, lj, lk)) * 3 + axis;
    auto [it, fresh] = edge_vertex.try_emplace(key, static_cast<int>(mesh.vertices.size()));
    if (fresh) {
      const double va = cv[a], vb = cv[b];
      double t = (va == vb) ? 0.5 : (iso - va) / (vb - va);
      t = std::clamp(t, 0.0, 1.0);
      const Vec3 pa = spec.center(i + ca[0], j + ca[1], k + ca[2]);
      const Vec3 pb = spec.center(i + cb[0], j + cb[1], k + cb[2]);
      mesh.vertices.push_back(pa + t * (pb - pa));
    }
    return it->second;
  };

  const double min_area2 = 1e-20 * spec.voxel_size * spec.voxel_size * spec.voxel_size *
                           spec.voxel_size;
  for (int k = 0; k + 1 < spec.dims[2]; ++k)
    for (int j = 0; j + 1 < spec.dims[1]; ++j)
      for (int i = 0; i + 1 < spec.dims[0]; ++i) {
        double cv[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          cv[c] = val[spec.index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])];
          if (cv[c] < iso) cube |= 1 << c;
        }
        if (detail::kMcEdgeTable[cube] == 0) continue;
        int ev[12];
        for (int e = 0; e < 12; ++e)
          if (detail::kMcEdgeTable[cube] & (1 << e)) ev[e] = vertex_on_edge(i, j, k, e, cv);
        const auto& tri = detail::kMcTriTable[cube];
        for (int n = 0; tri[n] != -1; n += 3) {
          // table winding faces the inside; flip so normals point outward
          const std::array<int, 3> t{ev[tri[n]], ev[tri[n + 2]], ev[tri[n + 1]]};
          if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
          const Vec3 nrm = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                               .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
          if (nrm.squaredNorm() <= min_area2) continue;
          mesh.triangles.push_back(t);
        }
      }
  return mesh;
}

}  // namespace ak
