#include "artikit/scenegen.hpp"

#include "json.hpp"

#include <fstream>
#include <stdexcept>

namespace ak {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json rigid(const Rigid& r) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({r.R(i, 0), r.R(i, 1), r.R(i, 2)}));
  return {{"R", rows}, {"t", vec(r.t)}};
}

Rigid rigid(const json& j) {
  Rigid r;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) r.R(i, c) = j.at("R").at(i).at(c).get<double>();
  r.t = vec(j.at("t"));
  return r;
}

}  // namespace

void write_scene_json(const std::filesystem::path& path, const GroundTruthScene& s) {
  json j;
  j["template"] = s.template_name;
  j["seed"] = s.seed;
  j["part_count"] = s.part_count;
  j["scale"] = s.scale;
  j["joints"] = json::array();
  for (std::size_t i = 0; i < s.joints.size(); ++i) {
    const JointRecord& r = s.joints[i];
    j["joints"].push_back({{"part", int(i) + 1},
                           {"type", joint_type_name(r.type)},
                           {"axis_dir", vec(r.axis_dir)},
                           {"axis_origin", vec(r.axis_origin)},
                           {"state_delta", r.state_delta}});
  }
  j["parts"] = json::array();
  for (const Primitive& p : s.primitives) {
    json c = json::array();
    for (const Vec3& col : p.face_color) c.push_back(vec(col));
    j["parts"].push_back({{"part", p.part},
                          {"kind", p.kind == Primitive::Kind::Box ? "box" : "cylinder"},
                          {"frame", rigid(p.frame)},
                          {"half", vec(p.half)},
                          {"face_color", c}});
  }
  j["state0"] = json::array();
  j["state1"] = json::array();
  for (int p = 0; p < s.part_count; ++p) {
    j["state0"].push_back(rigid(s.state0[p]));
    j["state1"].push_back(rigid(s.state1[p]));
  }
  j["interior_points"] = json::array();
  for (const InteriorPoint& ip : s.interior_points)
    j["interior_points"].push_back(
        {{"x", vec(ip.x)}, {"part", ip.part}, {"visible_state", ip.visible_state}});

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(1) << '\n';
}

GroundTruthScene read_scene_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  json j;
  is >> j;
  GroundTruthScene s;
  try {
    s.template_name = j.value("template", "");
    s.seed = j.value("seed", std::uint64_t{0});
    s.part_count = j.at("part_count").get<int>();
    s.scale = j.value("scale", 1.0);
    for (const auto& r : j.at("joints"))
      s.joints.push_back({parse_joint_type(r.at("type").get<std::string>()),
                          vec(r.at("axis_dir")), vec(r.at("axis_origin")),
                          r.at("state_delta").get<double>()});
    for (const auto& r : j.at("parts")) {
      Primitive p;
      const std::string kind = r.at("kind").get<std::string>();
      if (kind != "box" && kind != "cylinder") throw std::runtime_error("unknown primitive kind " + kind);
      p.kind = kind == "box" ? Primitive::Kind::Box : Primitive::Kind::Cylinder;
      p.part = r.at("part").get<int>();
      p.frame = rigid(r.at("frame"));
      p.half = vec(r.at("half"));
      for (int f = 0; f < 6; ++f) p.face_color[f] = vec(r.at("face_color").at(f));
      s.primitives.push_back(p);
    }
    for (const auto& r : j.at("state0")) s.state0.push_back(rigid(r));
    for (const auto& r : j.at("state1")) s.state1.push_back(rigid(r));
    if (j.contains("interior_points"))
      for (const auto& r : j.at("interior_points"))
        s.interior_points.push_back(
            {vec(r.at("x")), r.at("part").get<int>(), r.at("visible_state").get<int>()});
  } catch (const json::exception& e) {
    throw std::runtime_error("ground truth " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

}  // namespace ak
