#pragma once

#include "artikit/volume.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace ak {

using Rot6 = std::array<double, 6>;

/// Gram-Schmidt of the two stacked columns plus their cross product.
/// `strict` throws on zero or parallel columns; otherwise a 1e-8 nudge along
/// e2 is applied to the second column when it is near-parallel to the first.
Mat3 decode_rot6d(const Rot6& a, bool strict = false);

/// Pull dL/dR back to dL/da through decode_rot6d.
Rot6 decode_rot6d_backward(const Rot6& a, const Mat3& dR);

/// (R^T, -R^T t).
Rigid invert_motion(const Rigid& m);

/// Pull gradients wrt an inverted motion (R', t') back to the original (R, t).
void invert_motion_backward(const Rigid& m, const Mat3& dR_inv, const Vec3& dt_inv,
                            Mat3& dR, Vec3& dt);

/// Unconstrained motion parameters of one part: 6D rotation and translation.
struct MotionParam {
  Rot6 rot6d{1, 0, 0, 0, 1, 0};
  Vec3 trans = Vec3::Zero();

  static MotionParam identity() { return {}; }
  static MotionParam from_rigid(const Rigid& m);
  Rigid decode() const { return {decode_rot6d(rot6d), trans}; }
};

/// Dense logit volume with M channels; P(x) = softmax(trilinear(logits)).
/// Storage is voxel-major with the part index fastest.
class SegField {
 public:
  SegField() = default;
  SegField(const GridSpec& spec, int parts, double fill = 0.0);

  const GridSpec& spec() const { return spec_; }
  int parts() const { return parts_; }
  std::vector<double>& logits() { return logits_; }
  const std::vector<double>& logits() const { return logits_; }
  double& logit(std::size_t voxel, int part) { return logits_[voxel * parts_ + part]; }
  double logit(std::size_t voxel, int part) const { return logits_[voxel * parts_ + part]; }

  /// Interpolated logits z (length M) for a stencil.
  void interpolate(const TrilinearStencil& st, double* z) const;
  /// Softmax probabilities at x; optionally returns the stencil used.
  void prob(const Vec3& x, double* P, TrilinearStencil* st = nullptr) const;
  Eigen::VectorXd prob(const Vec3& x) const;
  /// Hard label argmax_i P(x, i) (ties to the lowest index).
  int label(const Vec3& x) const;

  /// Scatter dL/dz (interpolated logits) into a logit-shaped gradient.
  void scatter(const TrilinearStencil& st, const double* dz, double* grad) const;
  /// dL/dx given dL/dz, through the trilinear weights.
  Vec3 position_gradient(const TrilinearStencil& st, const double* dz) const;

 private:
  GridSpec spec_;
  int parts_ = 0;
  std::vector<double> logits_;
};

/// In-place numerically stable softmax of z (length n).
void softmax(const double* z, double* P, int n);
/// dL/dz from dL/dP for P = softmax(z): P_j (g_j - sum_i g_i P_i).
void softmax_backward(const double* P, const double* g, double* dz, int n);

/// Free variables of stage two: one segmentation field per state plus the
/// forward motions T^0 (state 0 -> 1). Motions at state 1 are the inverses.
struct ArticulationState {
  SegField seg[2];
  std::vector<MotionParam> motions;  // motions[0] is frozen to identity

  int part_count() const { return int(motions.size()); }

  /// Logits ~ N(0, 0.01), rot6d = (e1, e2) + N(0, 0.01), trans ~ N(0, 0.01);
  /// part 0 stays exactly identity.
  static ArticulationState initialize(int parts, const GridSpec& seg_spec, std::uint64_t seed);

  /// Decoded motions for correspondences leaving state t.
  std::vector<Rigid> motions_from(int t) const;
};

/// Default segmentation lattice: 50^3 over [-0.5, 0.5]^3.
GridSpec default_seg_spec();

/// x' = sum_i P(x, i) (R_i x + t_i).
Vec3 forward_point(const Vec3& x, const SegField& seg, const std::vector<Rigid>& motions);

/// Candidates x_i = R_i^T (y - t_i), one per part.
std::vector<Vec3> backward_candidates(const Vec3& y, const std::vector<Rigid>& motions);

}  // namespace ak
