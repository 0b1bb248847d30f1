#pragma once

#include "artikit/match.hpp"
#include "artikit/volume.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ak {

enum class JointType { Revolute, Prismatic };

const char* joint_type_name(JointType t);
JointType parse_joint_type(const std::string& s);

/// One joint per movable part. `state_delta` is radians (revolute) or world
/// units (prismatic); `axis_origin` is ignored for prismatic joints.
struct JointRecord {
  JointType type = JointType::Prismatic;
  Vec3 axis_dir = Vec3::UnitZ();
  Vec3 axis_origin = Vec3::Zero();
  double state_delta = 0.0;

  /// Rigid motion taking the part from state 0 to state 1.
  Rigid motion() const;
};

/// Solid primitive in its own frame: a box with half extents `half`, or a
/// cylinder along local z with radius half.x() and half height half.z().
/// `frame` maps local coordinates to world at the rest configuration.
struct Primitive {
  enum class Kind { Box, Cylinder };
  Kind kind = Kind::Box;
  int part = 0;
  Rigid frame;
  Vec3 half = Vec3::Constant(0.1);
  /// Box faces -x,+x,-y,+y,-z,+z; cylinder uses [0] side, [4] bottom, [5] top.
  std::array<Vec3, 6> face_color{};

  double sdf_local(const Vec3& p) const;
  /// Face slot of the nearest boundary to local point p.
  int nearest_face(const Vec3& p) const;
  /// Ray hit distance along a unit local ray, if any, with s > s_min.
  std::optional<double> intersect_local(const Vec3& o, const Vec3& d, double s_min) const;
  double surface_area() const;
};

struct InteriorPoint {
  Vec3 x;           // state-0 world position
  int part = 0;
  int visible_state = 1;  // the only state in which the point is observable
};

struct RayHit {
  double s = 0.0;   // distance along the unit ray
  int part = -1;
  int primitive = -1;
};

struct GroundTruthScene {
  std::string template_name;
  std::uint64_t seed = 0;
  int part_count = 0;
  std::vector<Primitive> primitives;
  std::vector<JointRecord> joints;  // joints[i - 1] drives part i
  std::vector<Rigid> state0, state1; // per-part pose relative to rest
  std::vector<InteriorPoint> interior_points;
  double scale = 1.0;                // world units per metre

  const std::vector<Rigid>& poses(int state) const { return state == 0 ? state0 : state1; }
  /// Ground-truth forward motion of a part from state t to state 1 - t.
  Rigid part_motion(int part, int t = 0) const;
  /// Composite frame of a primitive at a state.
  Rigid primitive_pose(int prim, int state) const;

  double sdf(const Vec3& x, int state, int* nearest_prim = nullptr) const;
  Vec3 color(const Vec3& x, int state) const;
  /// Part owning the nearest primitive.
  int part_at(const Vec3& x, int state) const;
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, int state) const;
  /// Axis-aligned bounds of the object at a state.
  std::pair<Vec3, Vec3> bounds(int state) const;

  void validate() const;
};

/// Deterministic scene from (seed, template). Templates: drawer, door,
/// laptop, multi (cabinet with a revolute door and a prismatic drawer).
GroundTruthScene generate_scene(std::uint64_t seed, const std::string& template_name);

struct RenderOptions {
  int width = 128;
  int height = 128;
  double focal = 150.0;
  double radius = 1.6;
  double min_elevation_sin = 0.15;  // cameras on the upper hemisphere
  double max_elevation_sin = 0.9;
  double depth_noise = 0.0;         // Gaussian sigma on observed depths
};

/// Cameras on the upper hemisphere looking at the object centre; exact z-depth
/// by ray casting through pixel centres.
std::vector<DepthView> render_views(const GroundTruthScene& scene, int state, int n_views,
                                    std::uint64_t seed, const RenderOptions& opt = {});

/// Per-pixel part labels (-1 for background) of one view at a state.
std::vector<int> render_part_labels(const GroundTruthScene& scene, int state,
                                    const DepthView& view);

struct MatchOptions {
  int k_nearest = 3;
  int n_per_pair = 200;
  double noise_px = 1.0;
  double outlier_frac = 0.1;
  std::uint64_t seed = 0;
};

/// Cross-state pixel matches from ground-truth surface points co-visible in a
/// view v at state t and one of its k nearest views u at the other state.
std::vector<MatchPair> synth_matches(const GroundTruthScene& scene,
                                     const std::vector<DepthView>& views0,
                                     const std::vector<DepthView>& views1,
                                     const MatchOptions& opt = {});

/// Analytic fields on a grid: channel 0 ESDF, channels 1..3 RGB.
VolumeGrid ground_truth_fields(const GroundTruthScene& scene, int state, const GridSpec& spec);

/// Area-uniform samples of the object surface at a state, with part labels.
struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<int> parts;
};
SurfaceSamples sample_surface(const GroundTruthScene& scene, int state, int n,
                              std::uint64_t seed);

void write_scene_json(const std::filesystem::path& path, const GroundTruthScene& scene);
GroundTruthScene read_scene_json(const std::filesystem::path& path);

}  // namespace ak
