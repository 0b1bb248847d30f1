#pragma once

#include "artikit/extract.hpp"
#include "artikit/losses.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ak {

/// On-disk layout of a generated scene directory.
struct SceneFiles {
  std::filesystem::path dir;
  std::filesystem::path fields(int t) const { return dir / (t == 0 ? "fields0.akvg" : "fields1.akvg"); }
  std::filesystem::path views(int t) const { return dir / (t == 0 ? "views0" : "views1"); }
  std::filesystem::path matches() const { return dir / "matches.json"; }
  std::filesystem::path gt() const { return dir / "gt.json"; }
};

struct GenOptions {
  std::string template_name = "drawer";
  std::uint64_t seed = 0;
  int views = 100;
  int image = 128;
  int field_res = 128;
  double match_noise_px = 1.0;
  double outlier_frac = 0.1;
  double depth_noise = 0.0;
  bool fuse = false;   // fields from fused depth instead of the analytic ESDF
  double truncation = 0.03;
};

/// Writes fields0/1.akvg, views0/1, matches.json and gt.json. Byte-identical
/// for identical options.
GroundTruthScene generate_files(const std::filesystem::path& dir, const GenOptions& opt);

/// joints.json: {"source_state": t, "joints": [{part, type, axis_dir,
/// axis_origin, state_delta, residual}]}; parts as part_<i>.ply with part_id.
void write_object(const std::filesystem::path& dir, const ArticulatedObject& obj);

/// Reads what write_object wrote. Schema errors name the offending field.
ArticulatedObject read_object(const std::filesystem::path& dir);

/// One JSON object per line, one line per step.
void write_trace(const std::filesystem::path& path, const std::vector<LossBreakdown>& trace);

}  // namespace ak
