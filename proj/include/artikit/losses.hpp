#pragma once

#include "artikit/artmodel.hpp"
#include "artikit/match.hpp"
#include "artikit/volume.hpp"

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ak {

struct LossWeights {
  double lambda_s = 10.0;
  double lambda_c = 0.1;
  double lambda_o = 5.0;
  double lambda_cns = 1.0;
  double lambda_match = 500.0;
  double lambda_coll = 50.0;
  double alpha = 5.0;
  double w_vis = 0.5;
  double lambda_surf = 0.03;
  double s = 0.01;       // occupancy sharpness
  double epsilon = 0.03; // visibility threshold
  double sdf_unit = 0.03; // w(x) sees the ESDF in units of the truncation distance
  double match_window = 0.01;   // match ray samples span +-match_window about the crossing
  double match_depth_tol = 0.01; // max |ray crossing depth - observed depth| for a match

  /// Bell weight w(x) of a point with ESDF value `esdf`.
  double point_weight(double esdf) const;

  /// Weights may be zero (ablations) but never negative; w_vis in (0, 1].
  void validate() const;
};

/// Frozen stage-one output for one state.
struct StateObservation {
  VolumeGrid fields;      // channel 0 ESDF; channels 1..3 RGB when present
  VolumeGrid visibility;  // 0/1 per voxel
  std::vector<DepthView> views;

  bool has_color() const { return fields.channels() >= 4; }
};

/// Builds the observation, computing the visibility grid on the field lattice.
StateObservation make_observation(VolumeGrid fields, std::vector<DepthView> views, double epsilon);

struct RayPoint {
  Vec3 x;
  Vec3 dir;      // unit ray direction
  double esdf;   // ESDF at x in its own state
  int state;
};

struct UniformPoint {
  Vec3 x;
  int state;     // state the point lives in
};

/// Ray points satisfy |esdf| < lambda_surf; uniform points lie in [-0.5, 0.5]^3.
struct SampleBatch {
  std::vector<RayPoint> ray_points;
  std::vector<UniformPoint> uniform_points;
};

/// Surface samples along the ray of one match, fixed because fields are frozen.
struct MatchRay {
  int t = 0;     // source state
  int u = 0;     // target view at state 1 - t
  Vec2 q;
  std::array<Vec3, 8> x;
  std::array<double, 8> w;
  double wsum = 0.0;
};

/// Gradient with respect to every free variable of an ArticulationState.
struct ParamGrad {
  std::vector<double> seg[2];
  std::vector<std::array<double, 9>> motion;  // rot6d then trans

  void reset(const ArticulationState& s);
  double norm() const;
};

/// Per-term breakdown of the total loss (weighted terms sum to total).
struct LossBreakdown {
  double cns = 0.0;       // L_cns (unweighted by lambda_cns)
  double match = 0.0;     // L_match, squared pixels
  double coll = 0.0;      // L_coll
  double total = 0.0;
  int matches_used = 0;
  std::string to_json(int step) const;
};

/// Frozen inputs of stage two plus precomputed per-match ray samples.
class Stage2Problem {
 public:
  Stage2Problem(StateObservation obs0, StateObservation obs1, std::vector<MatchPair> matches,
                const LossWeights& weights);

  const StateObservation& obs(int t) const { return obs_[t]; }
  const LossWeights& weights() const { return weights_; }
  void set_weights(const LossWeights& w);
  const std::vector<MatchRay>& match_rays() const { return rays_; }
  int skipped_matches() const { return skipped_; }

  /// n_ray ray points and n_uniform uniform points per state.
  SampleBatch sample_batch(int n_ray, int n_uniform, std::mt19937_64& rng) const;
  /// Indices into match_rays(), with replacement when n exceeds the pool.
  std::vector<int> sample_matches(int n, std::mt19937_64& rng) const;

 private:
  void precompute_matches(const std::vector<MatchPair>& matches);

  StateObservation obs_[2];
  LossWeights weights_;
  std::vector<MatchRay> rays_;
  int skipped_ = 0;
  std::vector<std::vector<int>> masked_[2];  // per view: masked pixel indices
};

/// Ray samples through pixel p of view v: first inside crossing of the ESDF
/// and 8 samples symmetric about it within +-match_window. Returns false when
/// the ray never crosses the surface, the crossing disagrees with the depth
/// observed at p by more than match_depth_tol, or the weights vanish.
bool trace_match_ray(const StateObservation& obs, const DepthView& view, const Vec2& p,
                     const LossWeights& w, MatchRay& out);

/// Which optional terms are active (the schedule gates l_o and collision).
struct TermMask {
  bool occupancy = true;
  bool collision = true;
};

/// Each function returns its (unweighted-by-lambda_term) loss and, when grad
/// is non-null, adds lambda_scale * dLoss/dparam to it.
double consistency_loss(const SampleBatch& batch, const ArticulationState& art,
                        const Stage2Problem& prob, bool occupancy_term, ParamGrad* grad,
                        double lambda_scale = 1.0);

/// Mean squared pixel residual over the selected match rays; throws when no
/// match is usable.
double matching_loss(std::span<const int> match_ids, const ArticulationState& art,
                     const Stage2Problem& prob, ParamGrad* grad, double lambda_scale = 1.0);

double collision_loss(std::span<const UniformPoint> points, const ArticulationState& art,
                      const Stage2Problem& prob, ParamGrad* grad, double lambda_scale = 1.0);

/// L = lambda_cns L_cns + lambda_match L_match + lambda_coll L_coll.
LossBreakdown total_loss(const SampleBatch& batch, std::span<const int> match_ids,
                         const ArticulationState& art, const Stage2Problem& prob,
                         const TermMask& mask, ParamGrad* grad);

}  // namespace ak
