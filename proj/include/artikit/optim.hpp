#pragma once

#include "artikit/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ak {

struct OptimConfig {
  int steps = 2000;
  double lr = 0.01;
  double decay = 0.1;      // lr(step) = lr * decay^(step / steps)
  int gate_step = 500;     // occupancy and collision terms start here
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int n_ray = 4096;        // per state
  int n_uniform = 8192;    // per state
  int n_match = 2048;      // match minibatch per step
  double seg_lr_scale = 50.0;  // segmentation logits use lr * seg_lr_scale
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
  double lr_at(int step) const;
};

/// Adam over a flat parameter vector; inactive entries are skipped.
class Adam {
 public:
  Adam(std::size_t n, double beta1, double beta2, double eps);
  void step(double* params, const double* grad, double lr);
  int iterations() const { return t_; }

 private:
  std::vector<double> m_, v_;
  double b1_, b2_, eps_;
  int t_ = 0;
};

/// Raised when the loss exceeds 1e6 or turns non-finite; carries the trace.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<LossBreakdown> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<LossBreakdown>& trace() const { return trace_; }

 private:
  std::vector<LossBreakdown> trace_;
};

struct OptimResult {
  ArticulationState state;
  std::vector<LossBreakdown> trace;  // one entry per step
};

/// Called after each step's loss evaluation, before the parameter update.
using StepCallback =
    std::function<void(int step, const LossBreakdown&, const ArticulationState&)>;

/// Stage-two optimisation from a seeded random initial state. Part 0's motion
/// is never updated. Identical inputs and seed give bit-identical results.
OptimResult optimize(const Stage2Problem& problem, int parts, const OptimConfig& cfg,
                     const StepCallback& on_step = {},
                     const GridSpec& seg_spec = default_seg_spec());

/// Same, continuing from an explicit initial state.
OptimResult optimize_from(const Stage2Problem& problem, ArticulationState init,
                          const OptimConfig& cfg, const StepCallback& on_step = {});

/// Binary checkpoint "AKCK": version u32, step u32, parts u32, seg GridSpec
/// (origin 3xf64, voxel f64, dims 3xu32), motions (9xf64 each), then the two
/// logit arrays as f64, all little-endian.
void write_checkpoint(const std::filesystem::path& path, const ArticulationState& s, int step);
ArticulationState read_checkpoint(const std::filesystem::path& path, int* step = nullptr);

}  // namespace ak
