#pragma once

#include "artikit/artmodel.hpp"
#include "artikit/scenegen.hpp"
#include "artikit/volume.hpp"

#include <string>
#include <vector>

namespace ak {

/// Prismatic iff the rotation angle of `m` is below tau_r (degrees).
JointType classify_joint(const Rigid& m, double tau_r_deg = 10.0);

struct RevoluteParams {
  Vec3 axis_dir;
  Vec3 axis_origin;  // minimum-norm point of the axis line
  double angle = 0;  // radians, in [0, pi]
  double residual = 0;  // ||(I - R) p - t||
};

/// Axis-angle of R; origin = pinv(I - R) t restricted to the plane normal to
/// the axis. Throws for angles below 1e-6 rad.
RevoluteParams revolute_params(const Rigid& m);

struct PrismaticParams {
  Vec3 axis_dir;
  double displacement = 0;
};

/// Direction and length of t; the rotation is discarded. Throws for ||t|| < 1e-6.
PrismaticParams prismatic_params(const Rigid& m);

struct ExtractedJoint {
  int part = 0;
  JointRecord record;
  double residual = 0;  // revolute least-squares residual, 0 for prismatic
};

/// Classifies and projects the forward motion of one part onto a joint.
ExtractedJoint extract_joint(int part, const Rigid& m, double tau_r_deg = 10.0);

struct SegmentedMesh {
  TriMesh labeled;              // input mesh with per-vertex part_ids
  std::vector<TriMesh> parts;   // triangles by vertex majority, tie to lowest part
  std::vector<std::string> warnings;
};

SegmentedMesh segment_parts(const SegField& seg, const TriMesh& mesh);

/// Drops connected components (shared triangle edges) with fewer vertices
/// than tau times the largest one. Unreferenced vertices are removed and
/// per-vertex labels are carried along.
TriMesh cluster_filter(const TriMesh& mesh, double tau = 0.1);

/// State with more visible near-surface interior voxels labelled as movable.
/// `visibility` grids may be empty (everything counts as visible).
int choose_source_state(const ArticulationState& s, const VolumeGrid fields[2],
                        const VolumeGrid visibility[2]);

struct ExtractOptions {
  double tau_r_deg = 10.0;
  double tau_cluster = 0.1;
  int mesh_res = 256;      // marching-cubes resampling per axis
  int source_state = -1;   // -1 selects automatically
};

struct ArticulatedObject {
  std::vector<TriMesh> parts;          // exactly M, part index = position
  std::vector<ExtractedJoint> joints;  // M - 1, for parts 1..M-1
  int source_state = 0;
  std::vector<std::string> warnings;
};

/// Joints from the optimised motions, geometry from the source state's ESDF:
/// marching cubes, object-level cluster filter, hard segmentation, then the
/// same filter per part.
ArticulatedObject extract_object(const ArticulationState& s, const VolumeGrid fields[2],
                                 const VolumeGrid visibility[2], const ExtractOptions& opt = {});

}  // namespace ak
