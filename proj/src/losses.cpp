#include "artikit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ak {

namespace {

constexpr int kMaxParts = 16;

/// Value and world gradient of one channel from a precomputed stencil.
double sample_grad(const VolumeGrid& g, const TrilinearStencil& st, int ch, Vec3& grad) {
  const float* p = g.channel(ch).data();
  double v = 0.0;
  grad.setZero();
  for (int c = 0; c < 8; ++c) {
    const double val = p[st.index[c]];
    v += st.weight[c] * val;
    grad += st.dweight[c] * val;
  }
  return v;
}

/// ESDF with the out-of-hull distance extension.
double esdf_grad(const VolumeGrid& g, const TrilinearStencil& st, const Vec3& x, Vec3& grad) {
  double v = sample_grad(g, st, 0, grad);
  if (!st.inside) {
    const Vec3 off = x - st.clamped;
    const double d = off.norm();
    if (d > 0.0) {
      v += d;
      grad += off / d;
    }
  }
  return v;
}

double esdf_value(const VolumeGrid& g, const TrilinearStencil& st, const Vec3& x) {
  double v = g.sample(st, 0);
  if (!st.inside) v += (x - st.clamped).norm();
  return v;
}

struct MotionAcc {
  std::vector<Mat3> dR;
  std::vector<Vec3> dt;
  explicit MotionAcc(int parts) : dR(parts, Mat3::Zero()), dt(parts, Vec3::Zero()) {}
};

/// Forward correspondence with everything needed for its backward pass.
struct Fwd {
  TrilinearStencil st;
  double P[kMaxParts];
  Vec3 img[kMaxParts];
  Vec3 y;
};

void forward(const Vec3& x, const SegField& seg, const std::vector<Rigid>& m, Fwd& f) {
  seg.prob(x, f.P, &f.st);
  // x + sum_i P_i (T_i x - x): identity motions return x exactly.
  f.y = x;
  for (int i = 0; i < seg.parts(); ++i) {
    f.img[i] = m[i].apply(x);
    f.y += f.P[i] * (f.img[i] - x);
  }
}

/// Adds the pullback of dL/dy (already scaled) into seg and motion gradients.
void backward(const Fwd& f, const Vec3& x, const Vec3& gy, const SegField& seg, double* gseg,
              MotionAcc& acc) {
  const int M = seg.parts();
  double gP[kMaxParts], dz[kMaxParts];
  for (int i = 0; i < M; ++i) {
    gP[i] = gy.dot(f.img[i]);
    acc.dR[i] += f.P[i] * gy * x.transpose();
    acc.dt[i] += f.P[i] * gy;
  }
  softmax_backward(f.P, gP, dz, M);
  if (gseg) seg.scatter(f.st, dz, gseg);
}

/// Folds per-direction motion gradients into the rot6d/trans gradient.
void finalize(const MotionAcc acc[2], const ArticulationState& art, ParamGrad& g) {
  for (int p = 0; p < art.part_count(); ++p) {
    Mat3 dR = acc[0].dR[p];
    Vec3 dt = acc[0].dt[p];
    invert_motion_backward(art.motions[p].decode(), acc[1].dR[p], acc[1].dt[p], dR, dt);
    const Rot6 ga = decode_rot6d_backward(art.motions[p].rot6d, dR);
    for (int k = 0; k < 6; ++k) g.motion[p][k] += ga[k];
    for (int k = 0; k < 3; ++k) g.motion[p][6 + k] += dt[k];
  }
}

void check_grad(const ParamGrad* g, const ArticulationState& art) {
  if (!g) return;
  if (int(g->motion.size()) != art.part_count() ||
      g->seg[0].size() != art.seg[0].logits().size() ||
      g->seg[1].size() != art.seg[1].logits().size())
    throw std::invalid_argument("ParamGrad shape does not match the articulation state");
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda_s, lambda_c, lambda_o, lambda_cns, lambda_match, lambda_coll})
    if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be non-negative");
  if (!(alpha > 0.0) || !(lambda_surf > 0.0) || !(s > 0.0) || !(epsilon > 0.0) ||
      !(sdf_unit > 0.0) || !(match_depth_tol > 0.0) ||
      !(match_window > 0.0))
    throw std::invalid_argument("alpha, lambda_surf, s, epsilon, sdf_unit and match_depth_tol must be positive");
  if (!(w_vis > 0.0 && w_vis <= 1.0)) throw std::invalid_argument("w_vis must lie in (0, 1]");
}

double LossWeights::point_weight(double esdf) const {
  return surface_weight(esdf / sdf_unit, alpha);
}

StateObservation make_observation(VolumeGrid fields, std::vector<DepthView> views,
                                  double epsilon) {
  StateObservation o;
  o.visibility = visibility_grid(views, fields.spec(), epsilon);
  o.fields = std::move(fields);
  o.views = std::move(views);
  return o;
}

void ParamGrad::reset(const ArticulationState& s) {
  for (int t = 0; t < 2; ++t) seg[t].assign(s.seg[t].logits().size(), 0.0);
  motion.assign(s.part_count(), std::array<double, 9>{});
}

double ParamGrad::norm() const {
  double n = 0.0;
  for (int t = 0; t < 2; ++t)
    for (double v : seg[t]) n += v * v;
  for (const auto& m : motion)
    for (double v : m) n += v * v;
  return std::sqrt(n);
}

std::string LossBreakdown::to_json(int step) const {
  std::ostringstream os;
  os.precision(10);
  os << "{\"step\": " << step << ", \"L_cns\": " << cns << ", \"L_match\": " << match
     << ", \"L_coll\": " << coll << ", \"total\": " << total << "}";
  return os.str();
}

Stage2Problem::Stage2Problem(StateObservation obs0, StateObservation obs1,
                             std::vector<MatchPair> matches, const LossWeights& weights)
    : weights_(weights) {
  weights.validate();
  obs_[0] = std::move(obs0);
  obs_[1] = std::move(obs1);
  for (int t = 0; t < 2; ++t) {
    if (obs_[t].fields.empty()) throw std::invalid_argument("stage two needs fields at both states");
    if (obs_[t].views.empty()) throw std::invalid_argument("stage two needs views at both states");
    if (obs_[t].visibility.empty() || !(obs_[t].visibility.spec() == obs_[t].fields.spec()))
      obs_[t].visibility = visibility_grid(obs_[t].views, obs_[t].fields.spec(), weights.epsilon);
    for (const DepthView& v : obs_[t].views) {
      std::vector<int> px;
      for (int i = 0; i < int(v.mask.size()); ++i)
        if (v.mask[i] && v.depth[i] > 0) px.push_back(i);
      masked_[t].push_back(std::move(px));
    }
  }
  precompute_matches(matches);
}

void Stage2Problem::set_weights(const LossWeights& w) {
  w.validate();
  if (w.alpha != weights_.alpha || w.lambda_surf != weights_.lambda_surf ||
      w.sdf_unit != weights_.sdf_unit || w.match_depth_tol != weights_.match_depth_tol ||
      w.match_window != weights_.match_window)
    throw std::invalid_argument("ray-sampling parameters are fixed at construction");
  weights_ = w;
}

bool trace_match_ray(const StateObservation& obs, const DepthView& view, const Vec2& p,
                     const LossWeights& w, MatchRay& out) {
  const VolumeGrid& f = obs.fields;
  const GridSpec& g = f.spec();
  const Vec3 o = view.camera_center();
  const Vec3 d = view.ray_direction(p);
  // Clip the ray against the grid box.
  double s0 = 0.0, s1 = 1e9;
  for (int a = 0; a < 3; ++a) {
    const double lo = g.origin[a], hi = g.origin[a] + g.dims[a] * g.voxel_size;
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo || o[a] > hi) return false;
      continue;
    }
    double ta = (lo - o[a]) / d[a], tb = (hi - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    s0 = std::max(s0, ta);
    s1 = std::min(s1, tb);
  }
  if (s0 >= s1) return false;
  // March in quarter-voxel steps (sphere-tracing when far) to the first
  // positive-to-non-positive transition, then bisect.
  const double h = 0.25 * g.voxel_size;
  double s = s0;
  double prev = f.sample_esdf(o + s * d);
  if (prev <= 0.0) return false;  // camera ray starts inside: no front surface
  bool found = false;
  double sa = s, sb = s;
  while (s < s1) {
    const double step = std::max(h, 0.8 * prev);
    const double sn = std::min(s + step, s1);
    const double v = f.sample_esdf(o + sn * d);
    if (v <= 0.0) {
      sa = s;
      sb = sn;
      found = true;
      break;
    }
    s = sn;
    prev = v;
    if (sn >= s1) break;
  }
  if (!found) return false;
  for (int it = 0; it < 40; ++it) {
    const double sm = 0.5 * (sa + sb);
    (f.sample_esdf(o + sm * d) > 0.0 ? sa : sb) = sm;
  }
  const Vec3 c = o + 0.5 * (sa + sb) * d;
  // The crossing must agree with the depth observed at p; otherwise the ray
  // grazes a silhouette and the field and image disagree about what p sees.
  const double observed = view.interpolated_depth(p);
  if (!(observed > 0.0) || std::abs(view.pose.apply(c).z() - observed) > w.match_depth_tol)
    return false;
  out.wsum = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double off = w.match_window * (2.0 * (k % 4) + 1.0) / 8.0 * (k < 4 ? -1.0 : 1.0);
    out.x[k] = c + off * d;
    const double e = f.sample_esdf(out.x[k]);
    out.w[k] = std::abs(e) < w.lambda_surf ? w.point_weight(e) : 0.0;
    out.wsum += out.w[k];
  }
  return out.wsum >= 1e-6;
}

void Stage2Problem::precompute_matches(const std::vector<MatchPair>& matches) {
  rays_.clear();
  skipped_ = 0;
  for (const MatchPair& m : matches) {
    if (m.t < 0 || m.t > 1) throw std::invalid_argument("match state must be 0 or 1");
    const auto& src = obs_[m.t].views;
    const auto& dst = obs_[1 - m.t].views;
    if (m.v < 0 || m.v >= int(src.size()) || m.u < 0 || m.u >= int(dst.size()))
      throw std::out_of_range("match view index out of range");
    MatchRay r;
    r.t = m.t;
    r.u = m.u;
    r.q = m.q;
    if (trace_match_ray(obs_[m.t], src[m.v], m.p, weights_, r)) rays_.push_back(r);
    else ++skipped_;
  }
}

SampleBatch Stage2Problem::sample_batch(int n_ray, int n_uniform, std::mt19937_64& rng) const {
  SampleBatch b;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lam = weights_.lambda_surf;
  for (int t = 0; t < 2; ++t) {
    const auto& views = obs_[t].views;
    std::vector<int> usable;
    for (int v = 0; v < int(views.size()); ++v)
      if (!masked_[t][v].empty()) usable.push_back(v);
    if (usable.empty()) throw std::runtime_error("no view has observed object pixels");
    int got = 0;
    for (int attempt = 0; got < n_ray && attempt < 8 * n_ray + 64; ++attempt) {
      const int v = usable[std::size_t(unit(rng) * usable.size()) % usable.size()];
      const auto& px = masked_[t][v];
      const int idx = px[std::size_t(unit(rng) * px.size()) % px.size()];
      const DepthView& view = views[v];
      const Vec2 p(idx % view.width + 0.5, idx / view.width + 0.5);
      const Vec3 dir = view.ray_direction(p);
      const Vec3 x = view.unproject(p, view.depth[idx]) + lam * (2.0 * unit(rng) - 1.0) * dir;
      const double e = obs_[t].fields.sample_esdf(x);
      if (!(std::abs(e) < lam)) continue;
      b.ray_points.push_back({x, dir, e, t});
      ++got;
    }
    for (int i = 0; i < n_uniform; ++i)
      b.uniform_points.push_back({Vec3(unit(rng), unit(rng), unit(rng)) - Vec3::Constant(0.5), t});
  }
  return b;
}

std::vector<int> Stage2Problem::sample_matches(int n, std::mt19937_64& rng) const {
  std::vector<int> ids;
  if (rays_.empty() || n <= 0) return ids;
  if (n >= int(rays_.size())) {
    ids.resize(rays_.size());
    for (int i = 0; i < int(ids.size()); ++i) ids[i] = i;
    return ids;
  }
  std::uniform_int_distribution<int> pick(0, int(rays_.size()) - 1);
  ids.resize(n);
  for (int& i : ids) i = pick(rng);
  return ids;
}

double consistency_loss(const SampleBatch& batch, const ArticulationState& art,
                        const Stage2Problem& prob, bool occupancy_term, ParamGrad* grad,
                        double scale) {
  if (batch.ray_points.empty() && (batch.uniform_points.empty() || !occupancy_term))
    throw std::invalid_argument("consistency_loss: empty batch");
  check_grad(grad, art);
  const LossWeights& w = prob.weights();
  const int M = art.part_count();
  const std::vector<Rigid> motions[2] = {art.motions_from(0), art.motions_from(1)};
  MotionAcc acc[2] = {MotionAcc(M), MotionAcc(M)};

  int n_ray[2] = {0, 0}, n_uni[2] = {0, 0};
  for (const RayPoint& p : batch.ray_points) ++n_ray[p.state];
  for (const UniformPoint& p : batch.uniform_points) ++n_uni[p.state];

  double total = 0.0;
  Fwd f;
  for (const RayPoint& rp : batch.ray_points) {
    const int t = rp.state, tp = 1 - t;
    const StateObservation& src = prob.obs(t);
    const StateObservation& dst = prob.obs(tp);
    forward(rp.x, art.seg[t], motions[t], f);
    const TrilinearStencil st = trilinear_stencil(dst.fields.spec(), f.y);
    Vec3 gO;
    const double O2 = esdf_grad(dst.fields, st, f.y, gO);
    const double ws = w.point_weight(rp.esdf);
    const double vis = lookup_visible(dst.visibility, f.y) ? 1.0 : w.w_vis;
    double term = w.lambda_s * (rp.esdf - O2) * (rp.esdf - O2);
    Vec3 gy = w.lambda_s * 2.0 * (O2 - rp.esdf) * gO;
    if (w.lambda_c > 0 && src.has_color() && dst.has_color()) {
      const TrilinearStencil sx = trilinear_stencil(src.fields.spec(), rp.x);
      for (int c = 1; c <= 3; ++c) {
        Vec3 gc;
        const double cy = sample_grad(dst.fields, st, c, gc);
        const double diff = src.fields.sample(sx, c) - cy;
        term += w.lambda_c * diff * diff;
        gy += w.lambda_c * (-2.0 * diff) * gc;
      }
    }
    const double coef = vis * ws / n_ray[t];
    total += coef * term;
    if (grad) backward(f, rp.x, scale * coef * gy, art.seg[t], grad->seg[t].data(), acc[t]);
  }

  if (occupancy_term && w.lambda_o > 0) {
    for (const UniformPoint& up : batch.uniform_points) {
      const int t = up.state, tp = 1 - t;
      const StateObservation& src = prob.obs(t);
      const StateObservation& dst = prob.obs(tp);
      forward(up.x, art.seg[t], motions[t], f);
      const double occ = occupancy(src.fields.sample_esdf(up.x), w.s);
      const TrilinearStencil st = trilinear_stencil(dst.fields.spec(), f.y);
      Vec3 gO;
      const double O2 = esdf_grad(dst.fields, st, f.y, gO);
      const double occ2 = occupancy(O2, w.s);
      const double docc = occupancy_derivative(O2, w.s);
      if (occ == occ2 && docc == 0.0) continue;
      const double vis = lookup_visible(dst.visibility, f.y) ? 1.0 : w.w_vis;
      const double coef = vis * w.lambda_o / n_uni[t];
      total += coef * (occ - occ2) * (occ - occ2);
      if (grad && docc != 0.0) {
        const Vec3 gy = scale * coef * 2.0 * (occ2 - occ) * docc * gO;
        backward(f, up.x, gy, art.seg[t], grad->seg[t].data(), acc[t]);
      }
    }
  }
  if (grad) finalize(acc, art, *grad);
  return total;
}

double matching_loss(std::span<const int> match_ids, const ArticulationState& art,
                     const Stage2Problem& prob, ParamGrad* grad, double scale) {
  check_grad(grad, art);
  const int M = art.part_count();
  const std::vector<Rigid> motions[2] = {art.motions_from(0), art.motions_from(1)};
  MotionAcc acc[2] = {MotionAcc(M), MotionAcc(M)};
  const auto& rays = prob.match_rays();
  // Normalised by the batch size; a transported point behind the target
  // camera contributes nothing that step.
  const double inv_n = match_ids.empty() ? 0.0 : 1.0 / match_ids.size();
  double total = 0.0;
  int used = 0;
  Fwd f[8];
  for (int id : match_ids) {
    const MatchRay& r = rays.at(id);
    const int t = r.t;
    const DepthView& view = prob.obs(1 - t).views[r.u];
    Vec3 m = Vec3::Zero();
    for (int k = 0; k < 8; ++k) {
      forward(r.x[k], art.seg[t], motions[t], f[k]);
      m += r.w[k] * f[k].y;
    }
    m /= r.wsum;
    double z = 0.0;
    const auto px = view.project(m, &z);
    if (!px || z < 1e-6) continue;
    ++used;
    const Vec2 res = *px - r.q;
    total += inv_n * res.squaredNorm();
    if (grad) {
      const Vec3 gm = scale * inv_n * 2.0 * (view.projection_jacobian(m).transpose() * res);
      for (int k = 0; k < 8; ++k)
        if (r.w[k] > 0)
          backward(f[k], r.x[k], (r.w[k] / r.wsum) * gm, art.seg[t], grad->seg[t].data(), acc[t]);
    }
  }
  if (used == 0) throw std::runtime_error("matching_loss: every match was skipped");
  if (grad) finalize(acc, art, *grad);
  return total;
}

double collision_loss(std::span<const UniformPoint> points, const ArticulationState& art,
                      const Stage2Problem& prob, ParamGrad* grad, double scale) {
  check_grad(grad, art);
  const LossWeights& w = prob.weights();
  const int M = art.part_count();
  const std::vector<Rigid> motions[2] = {art.motions_from(0), art.motions_from(1)};
  MotionAcc acc[2] = {MotionAcc(M), MotionAcc(M)};
  // y lives at state s; its candidates live at t = 1 - s.
  int n[2] = {0, 0};
  for (const UniformPoint& p : points) ++n[1 - p.state];

  double total = 0.0;
  Vec3 xi[kMaxParts], gE[kMaxParts];
  double occ[kMaxParts], docc[kMaxParts], a[kMaxParts];
  double P[kMaxParts][kMaxParts];
  TrilinearStencil sst[kMaxParts];
  bool live[kMaxParts];
  for (const UniformPoint& up : points) {
    const int t = 1 - up.state;
    const StateObservation& src = prob.obs(t);
    const SegField& seg = art.seg[t];
    double count = 0.0;
    for (int i = 0; i < M; ++i) {
      const Rigid& m = motions[t][i];
      xi[i] = m.R.transpose() * (up.x - m.t);
      const TrilinearStencil st = trilinear_stencil(src.fields.spec(), xi[i]);
      const double e = grad ? esdf_grad(src.fields, st, xi[i], gE[i]) : esdf_value(src.fields, st, xi[i]);
      occ[i] = occupancy(e, w.s);
      docc[i] = occupancy_derivative(e, w.s);
      live[i] = occ[i] > 0.0 || docc[i] != 0.0;
      a[i] = 0.0;
      if (!live[i]) continue;
      seg.prob(xi[i], P[i], &sst[i]);
      a[i] = P[i][i] * occ[i];
      count += a[i];
    }
    if (count <= 1.0) continue;
    const double coef = 1.0 / n[t];
    total += coef * (count - 1.0) * (count - 1.0);
    if (!grad) continue;
    const double g = scale * coef * 2.0 * (count - 1.0);
    for (int i = 0; i < M; ++i) {
      if (!live[i]) continue;
      // a_i = P_i(x_i) Occ(x_i): dz_j = g Occ_i P_i (delta_ij - P_j)
      double dz[kMaxParts];
      for (int j = 0; j < M; ++j) dz[j] = g * occ[i] * P[i][i] * ((i == j ? 1.0 : 0.0) - P[i][j]);
      seg.scatter(sst[i], dz, grad->seg[t].data());
      const Vec3 gx = seg.position_gradient(sst[i], dz) + g * P[i][i] * docc[i] * gE[i];
      const Rigid& m = motions[t][i];
      acc[t].dR[i] += (up.x - m.t) * gx.transpose();
      acc[t].dt[i] += -(m.R * gx);
    }
  }
  if (grad) finalize(acc, art, *grad);
  return total;
}

LossBreakdown total_loss(const SampleBatch& batch, std::span<const int> match_ids,
                         const ArticulationState& art, const Stage2Problem& prob,
                         const TermMask& mask, ParamGrad* grad) {
  const LossWeights& w = prob.weights();
  LossBreakdown b;
  if (w.lambda_cns > 0)
    b.cns = consistency_loss(batch, art, prob, mask.occupancy, grad, w.lambda_cns);
  if (w.lambda_match > 0 && !match_ids.empty()) {
    b.match = matching_loss(match_ids, art, prob, grad, w.lambda_match);
    b.matches_used = int(match_ids.size());
  }
  if (w.lambda_coll > 0 && mask.collision)
    b.coll = collision_loss(batch.uniform_points, art, prob, grad, w.lambda_coll);
  b.total = w.lambda_cns * b.cns + w.lambda_match * b.match + w.lambda_coll * b.coll;
  for (double v : {b.cns, b.match, b.coll, b.total})
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite loss: L_cns=" << b.cns << " L_match=" << b.match << " L_coll=" << b.coll;
      throw std::runtime_error(os.str());
    }
  return b;
}

}  // namespace ak
