#include "artikit/optim.hpp"

#include "binary.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace ak {

using detail::get;
using detail::put;

void OptimConfig::validate() const {
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0, 1]");
  if (gate_step < 0 || gate_step >= steps)
    throw std::invalid_argument("gate_step must lie in [0, steps)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
    throw std::invalid_argument("invalid Adam hyperparameters");
  if (n_ray <= 0 || n_uniform < 0 || n_match < 0)
    throw std::invalid_argument("sample counts must be non-negative (ray count positive)");
  if (!(seg_lr_scale > 0.0)) throw std::invalid_argument("seg_lr_scale must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

double OptimConfig::lr_at(int step) const {
  return lr * std::pow(decay, double(step) / double(steps));
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::step(double* params, const double* grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, t_);
  const double c2 = 1.0 - std::pow(b2_, t_);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

OptimResult optimize(const Stage2Problem& problem, int parts, const OptimConfig& cfg,
                     const StepCallback& on_step, const GridSpec& seg_spec) {
  return optimize_from(problem, ArticulationState::initialize(parts, seg_spec, cfg.seed), cfg,
                       on_step);
}

OptimResult optimize_from(const Stage2Problem& problem, ArticulationState init,
                          const OptimConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  OptimResult res;
  res.state = std::move(init);
  ArticulationState& s = res.state;
  const int M = s.part_count();
  if (M < 2) throw std::invalid_argument("optimize: need at least two parts");

  std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66Dull);
  Adam adam_seg[2] = {Adam(s.seg[0].logits().size(), cfg.beta1, cfg.beta2, cfg.adam_eps),
                      Adam(s.seg[1].logits().size(), cfg.beta1, cfg.beta2, cfg.adam_eps)};
  Adam adam_motion(std::size_t(9) * (M - 1), cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::vector<double> mparam(9 * (M - 1)), mgrad(9 * (M - 1));
  const bool use_matches = problem.weights().lambda_match > 0 && !problem.match_rays().empty();

  ParamGrad grad;
  for (int step = 0; step < cfg.steps; ++step) {
    const SampleBatch batch = problem.sample_batch(cfg.n_ray, cfg.n_uniform, rng);
    const std::vector<int> ids =
        use_matches ? problem.sample_matches(cfg.n_match, rng) : std::vector<int>{};
    const TermMask mask{step >= cfg.gate_step, step >= cfg.gate_step};
    grad.reset(s);
    LossBreakdown b;
    try {
      b = total_loss(batch, ids, s, problem, mask, &grad);
    } catch (const std::runtime_error& e) {
      std::ostringstream os;
      os << "diverged at step " << step << ": " << e.what();
      throw DivergenceError(os.str(), std::move(res.trace));
    }
    res.trace.push_back(b);
    if (!(b.total <= 1e6)) {
      std::ostringstream os;
      os << "diverged at step " << step << ": total loss " << b.total << " (L_cns=" << b.cns
         << " L_match=" << b.match << " L_coll=" << b.coll << ")";
      throw DivergenceError(os.str(), std::move(res.trace));
    }
    if (on_step) on_step(step, b, s);

    const double lr = cfg.lr_at(step);
    for (int t = 0; t < 2; ++t) adam_seg[t].step(s.seg[t].logits().data(), grad.seg[t].data(), lr * cfg.seg_lr_scale);
    for (int p = 1; p < M; ++p)
      for (int k = 0; k < 9; ++k) {
        mparam[9 * (p - 1) + k] = k < 6 ? s.motions[p].rot6d[k] : s.motions[p].trans[k - 6];
        mgrad[9 * (p - 1) + k] = grad.motion[p][k];
      }
    adam_motion.step(mparam.data(), mgrad.data(), lr);
    for (int p = 1; p < M; ++p)
      for (int k = 0; k < 9; ++k)
        (k < 6 ? s.motions[p].rot6d[k] : s.motions[p].trans[k - 6]) = mparam[9 * (p - 1) + k];

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
        ((step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.steps)) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_%06d.akck", step + 1);
      write_checkpoint(cfg.checkpoint_dir / name, s, step + 1);
    }
  }
  return res;
}

void write_checkpoint(const std::filesystem::path& path, const ArticulationState& s, int step) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write("AKCK", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, std::uint32_t(step));
  put<std::uint32_t>(os, std::uint32_t(s.part_count()));
  const GridSpec& g = s.seg[0].spec();
  for (int a = 0; a < 3; ++a) put<double>(os, g.origin[a]);
  put<double>(os, g.voxel_size);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(os, std::uint32_t(g.dims[a]));
  for (const MotionParam& m : s.motions) {
    for (double v : m.rot6d) put<double>(os, v);
    for (int a = 0; a < 3; ++a) put<double>(os, m.trans[a]);
  }
  for (int t = 0; t < 2; ++t)
    for (double v : s.seg[t].logits()) put<double>(os, v);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

ArticulationState read_checkpoint(const std::filesystem::path& path, int* step) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "AKCK")
    throw std::runtime_error("not a checkpoint file: " + path.string());
  if (get<std::uint32_t>(is, path) != 1)
    throw std::runtime_error("unsupported checkpoint version: " + path.string());
  const int st = int(get<std::uint32_t>(is, path));
  const int parts = int(get<std::uint32_t>(is, path));
  if (parts < 2 || parts > 16) throw std::runtime_error("bad part count in " + path.string());
  GridSpec g;
  for (int a = 0; a < 3; ++a) g.origin[a] = get<double>(is, path);
  g.voxel_size = get<double>(is, path);
  for (int a = 0; a < 3; ++a) g.dims[a] = int(get<std::uint32_t>(is, path));
  g.validate();
  ArticulationState s;
  s.motions.resize(parts);
  for (MotionParam& m : s.motions) {
    for (double& v : m.rot6d) v = get<double>(is, path);
    for (int a = 0; a < 3; ++a) m.trans[a] = get<double>(is, path);
  }
  for (int t = 0; t < 2; ++t) {
    s.seg[t] = SegField(g, parts);
    for (double& v : s.seg[t].logits()) v = get<double>(is, path);
  }
  if (step) *step = st;
  return s;
}

}  // namespace ak
