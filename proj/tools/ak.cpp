// Command-line pipeline: gen | fuse | optimize | extract | eval | reconstruct.
#include "artikit/io.hpp"
#include "artikit/metrics.hpp"
#include "artikit/optim.hpp"
#include "artikit/pipeline.hpp"
#include "artikit/scenegen.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ak;

namespace {

struct Settings {
  GenOptions gen;
  fs::path in, out, pred, gt, state, views, report;
  int parts = 0;
  int field_res = 128;
  double truncation = 0.03;
  LossWeights weights;
  OptimConfig optim;
  ExtractOptions extract;
  EvalOptions eval;
  bool deterministic = false;  // reductions are always serial
  int log_every = 100;
};

void add_loss_options(CLI::App* c, Settings& s) {
  c->add_option("--lambda-s", s.weights.lambda_s, "ESDF consistency weight");
  c->add_option("--lambda-c", s.weights.lambda_c, "colour consistency weight");
  c->add_option("--lambda-o", s.weights.lambda_o, "occupancy consistency weight");
  c->add_option("--lambda-cns", s.weights.lambda_cns, "consistency loss weight");
  c->add_option("--lambda-match", s.weights.lambda_match, "matching loss weight");
  c->add_option("--lambda-coll", s.weights.lambda_coll, "collision loss weight");
  c->add_option("--alpha", s.weights.alpha, "surface bell sharpness");
  c->add_option("--w-vis", s.weights.w_vis, "discount for invisible points");
  c->add_option("--occ-s", s.weights.s, "occupancy sharpness");
  c->add_option("--epsilon", s.weights.epsilon, "visibility threshold");
}

void add_optim_options(CLI::App* c, Settings& s) {
  c->add_option("--steps", s.optim.steps, "optimisation steps");
  c->add_option("--lr", s.optim.lr, "initial learning rate");
  c->add_option("--decay", s.optim.decay, "learning-rate decay over the run");
  c->add_option("--gate-step", s.optim.gate_step, "step enabling occupancy and collision");
  c->add_option("--seed", s.optim.seed, "initialisation and sampling seed");
  c->add_option("--seg-lr-scale", s.optim.seg_lr_scale, "segmentation learning-rate multiplier");
  c->add_option("--n-ray", s.optim.n_ray, "ray samples per state and step");
  c->add_option("--n-uniform", s.optim.n_uniform, "uniform samples per state and step");
  c->add_option("--n-match", s.optim.n_match, "matches per step");
  c->add_option("--checkpoint-every", s.optim.checkpoint_every, "checkpoint period in steps (0 off)");
  c->add_option("--log-every", s.log_every, "progress line period in steps (0 off)");
  c->add_flag("--deterministic", s.deterministic, "serial reductions (always on)");
}

void add_extract_options(CLI::App* c, Settings& s) {
  c->add_option("--t-star", s.extract.source_state, "source state for geometry (-1 automatic)")
      ->check(CLI::Range(-1, 1));
  c->add_option("--tau-r", s.extract.tau_r_deg, "revolute threshold in degrees");
  c->add_option("--tau-cluster", s.extract.tau_cluster, "cluster filter fraction");
  c->add_option("--mesh-res", s.extract.mesh_res, "marching-cubes resolution per axis");
}

void add_input_options(CLI::App* c, Settings& s) {
  c->add_option("--in", s.in, "scene directory (fields0/1.akvg, views0/1, matches.json)")
      ->required()
      ->check(CLI::ExistingDirectory);
  c->add_option("--parts", s.parts, "part count M (default: from gt.json)");
  c->add_option("--field-res", s.field_res, "fusion resolution when fields are absent");
  c->add_option("--truncation", s.truncation, "fusion truncation distance");
}

int part_count(const Settings& s) {
  int m = s.parts;
  if (m == 0 && fs::exists(SceneFiles{s.in}.gt())) m = read_scene_json(SceneFiles{s.in}.gt()).part_count;
  if (m < 2) throw std::runtime_error("part count must be >= 2 (pass --parts)");
  return m;
}

StateObservation load_state(const Settings& s, int t) {
  const SceneFiles f{s.in};
  std::vector<DepthView> views = io::read_views(f.views(t));
  VolumeGrid fields;
  if (fs::exists(f.fields(t))) {
    fields = io::read_grid(f.fields(t));
  } else {
    std::cerr << "fusing " << f.views(t).string() << " at " << s.field_res << "^3\n";
    fields = fuse_depth(views, GridSpec::cube(s.field_res), s.truncation);
  }
  return make_observation(std::move(fields), std::move(views), s.weights.epsilon);
}

Stage2Problem load_problem(const Settings& s) {
  const SceneFiles f{s.in};
  LossWeights w = s.weights;
  std::vector<MatchPair> matches;
  if (fs::exists(f.matches())) {
    matches = io::read_matches(f.matches());
  } else if (w.lambda_match > 0) {
    std::cerr << "warning: " << f.matches().string() << " not found, running with lambda_match = 0\n";
    w.lambda_match = 0;
  }
  if (w.lambda_match == 0) matches.clear();
  Stage2Problem p(load_state(s, 0), load_state(s, 1), std::move(matches), w);
  if (p.skipped_matches() > 0) std::cerr << "skipped " << p.skipped_matches() << " matches\n";
  return p;
}

ArticulationState run_optimize(const Stage2Problem& p, int parts, const Settings& s) {
  OptimConfig cfg = s.optim;
  if (cfg.checkpoint_every > 0) {
    cfg.checkpoint_dir = s.out / "checkpoints";
    fs::create_directories(cfg.checkpoint_dir);
  }
  const auto start = std::chrono::steady_clock::now();
  auto log = [&](int step, const LossBreakdown& b, const ArticulationState&) {
    if (s.log_every <= 0 || (step % s.log_every != 0 && step + 1 != cfg.steps)) return;
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "step " << step << " total " << b.total << " cns " << b.cns << " match "
              << b.match << " coll " << b.coll << " (" << sec << " s)\n";
  };
  try {
    OptimResult r = optimize(p, parts, cfg, log);
    write_trace(s.out / "trace.jsonl", r.trace);
    return std::move(r.state);
  } catch (const DivergenceError& e) {
    write_trace(s.out / "trace.jsonl", e.trace());
    throw;
  }
}

std::array<VolumeGrid, 2> visibility_grids(const Stage2Problem& p) {
  return {p.obs(0).visibility, p.obs(1).visibility};
}

ArticulatedObject run_extract(const Stage2Problem& p, const ArticulationState& st,
                              const Settings& s) {
  const VolumeGrid fields[2] = {p.obs(0).fields, p.obs(1).fields};
  const std::array<VolumeGrid, 2> vis = visibility_grids(p);
  ArticulatedObject obj = extract_object(st, fields, vis.data(), s.extract);
  for (const std::string& w : obj.warnings) std::cerr << "warning: " << w << '\n';
  write_object(s.out, obj);
  return obj;
}

EvalReport run_eval(const fs::path& pred, const fs::path& gt, const fs::path& report,
                    const EvalOptions& opt) {
  const ArticulatedObject obj = read_object(pred);
  const GroundTruthScene scene = read_scene_json(gt);
  if (int(obj.parts.size()) != scene.part_count)
    throw std::runtime_error("prediction has " + std::to_string(obj.parts.size()) +
                             " parts, ground truth has " + std::to_string(scene.part_count));
  EvalReport r = evaluate(obj.parts, obj.joints, obj.source_state, scene, opt);
  for (const std::string& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::ofstream os(report);
  if (!os) throw std::runtime_error("cannot write " + report.string());
  os << r.to_json() << '\n';
  std::cout << r.to_table();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Articulated object reconstruction from two observed states"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);
  Settings s;

  CLI::App* gen = app.add_subcommand("gen", "generate an oracle scene");
  gen->add_option("--template", s.gen.template_name, "drawer | door | laptop | multi")
      ->check(CLI::IsMember({"drawer", "door", "laptop", "multi"}));
  gen->add_option("--seed", s.gen.seed, "scene seed");
  gen->add_option("--out", s.out, "output directory")->required();
  gen->add_option("--views", s.gen.views, "views per state");
  gen->add_option("--image", s.gen.image, "image width and height");
  gen->add_option("--field-res", s.gen.field_res, "field resolution per axis");
  gen->add_option("--match-noise", s.gen.match_noise_px, "match noise sigma in pixels");
  gen->add_option("--outliers", s.gen.outlier_frac, "outlier match fraction");
  gen->add_option("--depth-noise", s.gen.depth_noise, "depth noise sigma");
  gen->add_flag("--fuse", s.gen.fuse, "fuse rendered depth instead of the analytic ESDF");

  CLI::App* fuse = app.add_subcommand("fuse", "fuse a views directory into an ESDF grid");
  fuse->add_option("--views", s.views, "views directory")->required()->check(CLI::ExistingDirectory);
  fuse->add_option("--out", s.out, "output .akvg file")->required();
  fuse->add_option("--field-res", s.field_res, "resolution per axis");
  fuse->add_option("--truncation", s.truncation, "truncation distance");

  CLI::App* opt = app.add_subcommand("optimize", "optimise segmentation and motions");
  add_input_options(opt, s);
  opt->add_option("--out", s.out, "output directory (state.akck, trace.jsonl)")->required();
  add_loss_options(opt, s);
  add_optim_options(opt, s);

  CLI::App* ext = app.add_subcommand("extract", "extract part meshes and joints");
  add_input_options(ext, s);
  ext->add_option("--state", s.state, "optimised state (.akck)")->required()->check(CLI::ExistingFile);
  ext->add_option("--out", s.out, "output directory")->required();
  add_extract_options(ext, s);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a prediction against ground truth");
  ev->add_option("--pred", s.pred, "prediction directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--gt", s.gt, "ground-truth scene JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--report", s.report, "report JSON (default <pred>/report.json)");
  ev->add_option("--samples", s.eval.n_samples, "surface samples per mesh");
  ev->add_option("--eval-seed", s.eval.seed, "sampling seed");

  CLI::App* rec = app.add_subcommand("reconstruct", "fuse, optimise, extract and evaluate");
  add_input_options(rec, s);
  rec->add_option("--out", s.out, "output directory")->required();
  add_loss_options(rec, s);
  add_optim_options(rec, s);
  add_extract_options(rec, s);
  rec->add_option("--samples", s.eval.n_samples, "surface samples per mesh");
  rec->add_option("--eval-seed", s.eval.seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    s.weights.validate();
    s.optim.validate();
    if (*gen) {
      const GroundTruthScene sc = generate_files(s.out, s.gen);
      std::cerr << "wrote " << sc.template_name << " scene (" << sc.part_count << " parts) to "
                << s.out.string() << '\n';
    } else if (*fuse) {
      const std::vector<DepthView> v = io::read_views(s.views);
      io::write_grid(s.out, fuse_depth(v, GridSpec::cube(s.field_res), s.truncation));
    } else if (*opt) {
      fs::create_directories(s.out);
      const Stage2Problem p = load_problem(s);
      const ArticulationState st = run_optimize(p, part_count(s), s);
      write_checkpoint(s.out / "state.akck", st, s.optim.steps);
    } else if (*ext) {
      const Stage2Problem p = load_problem(s);
      const ArticulationState st = read_checkpoint(s.state);
      if (s.parts != 0 && st.part_count() != s.parts)
        throw std::runtime_error("state has " + std::to_string(st.part_count()) + " parts");
      run_extract(p, st, s);
    } else if (*ev) {
      run_eval(s.pred, s.gt, s.report.empty() ? s.pred / "report.json" : s.report, s.eval);
    } else if (*rec) {
      fs::create_directories(s.out);
      const Stage2Problem p = load_problem(s);
      const ArticulationState st = run_optimize(p, part_count(s), s);
      write_checkpoint(s.out / "state.akck", st, s.optim.steps);
      run_extract(p, st, s);
      const SceneFiles f{s.in};
      // Evaluated from the files just written, so `eval` on them reproduces it.
      if (fs::exists(f.gt())) run_eval(s.out, f.gt(), s.out / "report.json", s.eval);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (trace in trace.jsonl)\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
