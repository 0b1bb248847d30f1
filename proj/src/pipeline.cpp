#include "artikit/pipeline.hpp"

#include "artikit/io.hpp"
#include "artikit/scenegen.hpp"

#include "json.hpp"

#include <fstream>
#include <stdexcept>

namespace ak {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw std::runtime_error(where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number()) throw std::runtime_error(where + ": field '" + key + "' is not a number");
  return v.get<double>();
}

Vec3 vec3(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    throw std::runtime_error(where + ": field '" + key + "' is not a 3-vector");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

fs::path part_path(const fs::path& dir, int i) {
  return dir / ("part_" + std::to_string(i) + ".ply");
}

}  // namespace

GroundTruthScene generate_files(const fs::path& dir, const GenOptions& opt) {
  const GroundTruthScene scene = generate_scene(opt.seed, opt.template_name);
  fs::create_directories(dir);
  const SceneFiles f{dir};
  RenderOptions ro;
  ro.width = ro.height = opt.image;
  ro.focal = 150.0 * opt.image / 128.0;
  ro.depth_noise = opt.depth_noise;
  std::vector<DepthView> v[2] = {render_views(scene, 0, opt.views, opt.seed, ro),
                                 render_views(scene, 1, opt.views, opt.seed + 1000, ro)};
  MatchOptions mo;
  mo.noise_px = opt.match_noise_px;
  mo.outlier_frac = opt.outlier_frac;
  mo.seed = opt.seed;
  io::write_matches(f.matches(), synth_matches(scene, v[0], v[1], mo));
  const GridSpec g = GridSpec::cube(opt.field_res);
  for (int t = 0; t < 2; ++t) {
    io::write_grid(f.fields(t), opt.fuse ? fuse_depth(v[t], g, opt.truncation)
                                         : ground_truth_fields(scene, t, g));
    io::write_views(f.views(t), v[t]);
  }
  write_scene_json(f.gt(), scene);
  return scene;
}

void write_object(const fs::path& dir, const ArticulatedObject& obj) {
  fs::create_directories(dir);
  for (int i = 0; i < int(obj.parts.size()); ++i) io::write_ply(part_path(dir, i), obj.parts[i], i);
  json joints = json::array();
  for (const ExtractedJoint& e : obj.joints)
    joints.push_back({{"part", e.part},
                      {"type", joint_type_name(e.record.type)},
                      {"axis_dir", vec(e.record.axis_dir)},
                      {"axis_origin", vec(e.record.axis_origin)},
                      {"state_delta", e.record.state_delta},
                      {"residual", e.residual}});
  json j = {{"source_state", obj.source_state}, {"joints", joints}};
  std::ofstream os(dir / "joints.json");
  if (!os) throw std::runtime_error("cannot write " + (dir / "joints.json").string());
  os << j.dump(2) << '\n';
}

ArticulatedObject read_object(const fs::path& dir) {
  const fs::path jp = dir / "joints.json";
  std::ifstream is(jp);
  if (!is) throw std::runtime_error("cannot open " + jp.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(jp.string() + ": " + e.what());
  }
  const std::string where = jp.filename().string();
  ArticulatedObject obj;
  const double st = number(j, "source_state", where);
  if (st != 0 && st != 1) throw std::runtime_error(where + ": field 'source_state' must be 0 or 1");
  obj.source_state = int(st);
  const json& joints = field(j, "joints", where);
  if (!joints.is_array()) throw std::runtime_error(where + ": field 'joints' is not a list");
  for (std::size_t k = 0; k < joints.size(); ++k) {
    const std::string w = where + ": joints[" + std::to_string(k) + "]";
    const json& e = joints[k];
    ExtractedJoint x;
    x.part = int(number(e, "part", w));
    const json& type = field(e, "type", w);
    if (!type.is_string()) throw std::runtime_error(w + ": field 'type' is not a string");
    try {
      x.record.type = parse_joint_type(type.get<std::string>());
    } catch (const std::exception&) {
      throw std::runtime_error(w + ": field 'type' has unknown value '" + type.get<std::string>() + "'");
    }
    x.record.axis_dir = vec3(e, "axis_dir", w);
    x.record.axis_origin = vec3(e, "axis_origin", w);
    x.record.state_delta = number(e, "state_delta", w);
    x.residual = number(e, "residual", w);
    obj.joints.push_back(x);
  }
  const int parts = int(obj.joints.size()) + 1;
  for (int i = 0; i < parts; ++i) {
    if (!fs::exists(part_path(dir, i)))
      throw std::runtime_error("missing part mesh " + part_path(dir, i).string());
    obj.parts.push_back(io::read_ply(part_path(dir, i)));
  }
  for (const ExtractedJoint& e : obj.joints)
    if (e.part < 1 || e.part >= parts)
      throw std::runtime_error(where + ": field 'part' out of range");
  return obj;
}

void write_trace(const fs::path& path, const std::vector<LossBreakdown>& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < trace.size(); ++i) os << trace[i].to_json(int(i)) << '\n';
}

}  // namespace ak
