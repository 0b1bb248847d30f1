#include "artikit/artmodel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ak {

namespace {

struct GramSchmidt {
  Vec3 a1, a2;  // a2 after the optional degeneracy nudge
  double n1, n2;
  Vec3 b1, u2, b2, b3;
};

GramSchmidt gram_schmidt(const Rot6& a, bool strict) {
  GramSchmidt g;
  g.a1 = Vec3(a[0], a[1], a[2]);
  g.a2 = Vec3(a[3], a[4], a[5]);
  g.n1 = g.a1.norm();
  if (!(g.n1 > 1e-9)) throw std::invalid_argument("decode_rot6d: first column is zero");
  g.b1 = g.a1 / g.n1;
  g.u2 = g.a2 - g.b1.dot(g.a2) * g.b1;
  if (!(g.u2.norm() > 1e-9 * std::max(1.0, g.a2.norm()))) {
    if (strict) throw std::invalid_argument("decode_rot6d: columns are parallel");
    g.a2 += 1e-8 * Vec3::UnitY();
    g.u2 = g.a2 - g.b1.dot(g.a2) * g.b1;
    if (!(g.u2.norm() > 0)) {
      g.a2 += 1e-8 * Vec3::UnitZ();
      g.u2 = g.a2 - g.b1.dot(g.a2) * g.b1;
    }
  }
  g.n2 = g.u2.norm();
  g.b2 = g.u2 / g.n2;
  g.b3 = g.b1.cross(g.b2);
  return g;
}

}  // namespace

Mat3 decode_rot6d(const Rot6& a, bool strict) {
  const GramSchmidt g = gram_schmidt(a, strict);
  Mat3 R;
  R.col(0) = g.b1;
  R.col(1) = g.b2;
  R.col(2) = g.b3;
  return R;
}

Rot6 decode_rot6d_backward(const Rot6& a, const Mat3& dR) {
  const GramSchmidt g = gram_schmidt(a, false);
  Vec3 gb1 = dR.col(0), gb2 = dR.col(1);
  const Vec3 g3 = dR.col(2);
  gb1 += g.b2.cross(g3);
  gb2 += g3.cross(g.b1);
  const Vec3 gu2 = (gb2 - gb2.dot(g.b2) * g.b2) / g.n2;
  const double s = g.b1.dot(gu2);
  const Vec3 ga2 = gu2 - s * g.b1;
  gb1 += -s * g.a2 - g.b1.dot(g.a2) * gu2;
  const Vec3 ga1 = (gb1 - gb1.dot(g.b1) * g.b1) / g.n1;
  return {ga1.x(), ga1.y(), ga1.z(), ga2.x(), ga2.y(), ga2.z()};
}

Rigid invert_motion(const Rigid& m) { return {m.R.transpose(), -(m.R.transpose() * m.t)}; }

void invert_motion_backward(const Rigid& m, const Mat3& dR_inv, const Vec3& dt_inv,
                            Mat3& dR, Vec3& dt) {
  dR += dR_inv.transpose() - m.t * dt_inv.transpose();
  dt += -(m.R * dt_inv);
}

MotionParam MotionParam::from_rigid(const Rigid& m) {
  MotionParam p;
  p.rot6d = {m.R(0, 0), m.R(1, 0), m.R(2, 0), m.R(0, 1), m.R(1, 1), m.R(2, 1)};
  p.trans = m.t;
  return p;
}

SegField::SegField(const GridSpec& spec, int parts, double fill)
    : spec_(spec), parts_(parts) {
  spec.validate();
  if (parts < 1 || parts > 16) throw std::invalid_argument("SegField: parts must be in [1, 16]");
  logits_.assign(spec.voxel_count() * parts, fill);
}

void SegField::interpolate(const TrilinearStencil& st, double* z) const {
  std::fill(z, z + parts_, 0.0);
  for (int c = 0; c < 8; ++c) {
    const double w = st.weight[c];
    const double* l = logits_.data() + st.index[c] * parts_;
    for (int i = 0; i < parts_; ++i) z[i] += w * l[i];
  }
}

void SegField::prob(const Vec3& x, double* P, TrilinearStencil* st_out) const {
  const TrilinearStencil st = trilinear_stencil(spec_, x);
  double z[16];
  interpolate(st, z);
  softmax(z, P, parts_);
  if (st_out) *st_out = st;
}

Eigen::VectorXd SegField::prob(const Vec3& x) const {
  Eigen::VectorXd P(parts_);
  prob(x, P.data());
  return P;
}

int SegField::label(const Vec3& x) const {
  const TrilinearStencil st = trilinear_stencil(spec_, x);
  double z[16];
  interpolate(st, z);
  return int(std::max_element(z, z + parts_) - z);
}

void SegField::scatter(const TrilinearStencil& st, const double* dz, double* grad) const {
  for (int c = 0; c < 8; ++c) {
    const double w = st.weight[c];
    double* g = grad + st.index[c] * parts_;
    for (int i = 0; i < parts_; ++i) g[i] += w * dz[i];
  }
}

Vec3 SegField::position_gradient(const TrilinearStencil& st, const double* dz) const {
  Vec3 gx = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    const double* l = logits_.data() + st.index[c] * parts_;
    double s = 0.0;
    for (int i = 0; i < parts_; ++i) s += dz[i] * l[i];
    gx += s * st.dweight[c];
  }
  return gx;
}

void softmax(const double* z, double* P, int n) {
  const double m = *std::max_element(z, z + n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += (P[i] = std::exp(z[i] - m));
  for (int i = 0; i < n; ++i) P[i] /= sum;
}

void softmax_backward(const double* P, const double* g, double* dz, int n) {
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += g[i] * P[i];
  for (int i = 0; i < n; ++i) dz[i] = P[i] * (g[i] - dot);
}

GridSpec default_seg_spec() { return GridSpec::cube(50); }

ArticulationState ArticulationState::initialize(int parts, const GridSpec& seg_spec,
                                                std::uint64_t seed) {
  if (parts < 2) throw std::invalid_argument("articulation needs at least two parts");
  ArticulationState s;
  std::mt19937_64 rng(seed * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int t = 0; t < 2; ++t) {
    s.seg[t] = SegField(seg_spec, parts);
    for (double& v : s.seg[t].logits()) v = n(rng);
  }
  s.motions.assign(parts, MotionParam::identity());
  for (int p = 1; p < parts; ++p) {
    for (double& v : s.motions[p].rot6d) v += n(rng);
    for (int a = 0; a < 3; ++a) s.motions[p].trans[a] = n(rng);
    decode_rot6d(s.motions[p].rot6d, true);
  }
  return s;
}

std::vector<Rigid> ArticulationState::motions_from(int t) const {
  std::vector<Rigid> out;
  out.reserve(motions.size());
  for (const MotionParam& m : motions) {
    const Rigid r = m.decode();
    out.push_back(t == 0 ? r : invert_motion(r));
  }
  return out;
}

Vec3 forward_point(const Vec3& x, const SegField& seg, const std::vector<Rigid>& motions) {
  if (int(motions.size()) != seg.parts())
    throw std::invalid_argument("forward_point: motion count differs from part count");
  double P[16];
  seg.prob(x, P);
  Vec3 y = x;
  for (int i = 0; i < seg.parts(); ++i) y += P[i] * (motions[i].apply(x) - x);
  return y;
}

std::vector<Vec3> backward_candidates(const Vec3& y, const std::vector<Rigid>& motions) {
  std::vector<Vec3> out;
  out.reserve(motions.size());
  for (const Rigid& m : motions) out.push_back(m.R.transpose() * (y - m.t));
  return out;
}

}  // namespace ak
