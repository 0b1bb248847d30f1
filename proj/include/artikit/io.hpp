#pragma once

#include "artikit/match.hpp"
#include "artikit/volume.hpp"

#include <filesystem>
#include <vector>

namespace ak::io {

namespace fs = std::filesystem;

/// AKVG binary grid: "AKVG", u32 version, origin 3xf64, voxel_size f64,
/// dims 3xu32, channels u32, then little-endian f32 payload (channel-planar,
/// x fastest).
void write_grid(const fs::path& path, const VolumeGrid& grid);
VolumeGrid read_grid(const fs::path& path);

void write_obj(const fs::path& path, const TriMesh& mesh);
/// ASCII PLY; writes a `part_id` int vertex property when the mesh has labels
/// (or `default_part` for every vertex when it has none and default_part >= 0).
void write_ply(const fs::path& path, const TriMesh& mesh, int default_part = -1);
TriMesh read_ply(const fs::path& path);

/// Views directory: views.json index plus, per view, <name>.json (intrinsics,
/// size, 4x4 world-to-camera pose row-major), <name>.depth (f32 LE, row-major
/// H x W) and <name>.mask (u8, row-major H x W).
void write_views(const fs::path& dir, const std::vector<DepthView>& views);
std::vector<DepthView> read_views(const fs::path& dir);

/// JSON list of {t, v, u, p: [x, y], q: [x, y]}.
void write_matches(const fs::path& path, const std::vector<MatchPair>& matches);
std::vector<MatchPair> read_matches(const fs::path& path);

}  // namespace ak::io
