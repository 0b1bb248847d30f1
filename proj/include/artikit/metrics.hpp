#pragma once

#include "artikit/extract.hpp"
#include "artikit/scenegen.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ak {

/// Area-uniform surface samples of a triangle mesh (empty mesh -> empty).
std::vector<Vec3> sample_mesh(const TriMesh& mesh, int n, std::uint64_t seed);

/// Exact nearest-neighbour distances from every query to `points`, through a
/// uniform grid hash searched in expanding shells.
class NearestNeighbors {
 public:
  explicit NearestNeighbors(std::span<const Vec3> points);
  double distance(const Vec3& q) const;

 private:
  std::vector<Vec3> pts_;
  std::vector<int> start_;  // cell -> first index into order_, size cells + 1
  std::vector<int> order_;
  Vec3 lo_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{};
};

/// mean_a min_b |a - b| + mean_b min_a |a - b|. Throws on an empty set.
double chamfer_l1(std::span<const Vec3> A, std::span<const Vec3> B);

struct AxisError {
  double ang_deg = 0;    // in [0, 90], sign-invariant
  double pos = 0;        // line distance in world units; 0 for prismatic
  bool has_pos = false;  // revolute pairs only
};

/// Normalises non-unit directions, appending a note to `warnings` if given.
AxisError axis_errors(const JointRecord& pred, const JointRecord& gt,
                      std::vector<std::string>* warnings = nullptr);

/// Minimum distance between two infinite lines.
double line_distance(const Vec3& o1, const Vec3& d1, const Vec3& o2, const Vec3& d2);

/// Revolute: geodesic angle between rotations in degrees. Prismatic:
/// translation distance in world units.
double motion_error(const Rigid& pred, const JointRecord& gt);

/// Predicted part index -> ground-truth part index minimising the summed
/// chamfer distance over all permutations. Throws on count mismatch.
std::vector<int> match_parts(const std::vector<std::vector<Vec3>>& pred,
                             const std::vector<std::vector<Vec3>>& gt);

struct JointEval {
  int gt_part = 0;
  int pred_part = 0;
  bool type_correct = false;
  double axis_ang = 0;     // degrees
  double axis_pos = 0;     // 0.1 m units, revolute only
  double axis_pos_units = 0;
  bool has_pos = false;
  double part_motion = 0;  // degrees or metres
  double part_motion_units = 0;  // degrees or world units
};

struct EvalReport {
  double cd_w = 0;              // whole object, mm
  double cd_s = 0;              // static part, mm
  std::vector<double> cd_m;     // per movable GT part, mm
  std::vector<JointEval> joints;  // per movable GT part
  std::vector<int> part_assignment;  // predicted -> GT
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string to_table() const;
};

struct EvalOptions {
  int n_samples = 10000;
  std::uint64_t seed = 0;
};

/// Evaluates extracted parts and joints against a ground-truth scene. Parts
/// from source state 1 are brought back to state 0 with the inverse of their
/// predicted joint motion before any chamfer distance is taken.
EvalReport evaluate(const std::vector<TriMesh>& parts, const std::vector<ExtractedJoint>& joints,
                    int source_state, const GroundTruthScene& gt, const EvalOptions& opt = {});

}  // namespace ak
