#include "artikit/io.hpp"

#include "binary.hpp"
#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ak::io {

using nlohmann::json;

namespace {

using detail::get;
using detail::put;

std::ofstream open_out(const fs::path& path, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return is;
}

void write_f32_array(const fs::path& path, const std::vector<float>& v) {
  auto os = open_out(path, true);
  for (float x : v) put<float>(os, x);
}

std::vector<float> read_f32_array(const fs::path& path, std::size_t n) {
  auto is = open_in(path, true);
  std::vector<float> v(n);
  for (auto& x : v) x = get<float>(is, path);
  return v;
}

}  // namespace

void write_grid(const fs::path& path, const VolumeGrid& grid) {
  auto os = open_out(path, true);
  os.write("AKVG", 4);
  put<std::uint32_t>(os, 1);
  const GridSpec& s = grid.spec();
  for (int a = 0; a < 3; ++a) put<double>(os, s.origin[a]);
  put<double>(os, s.voxel_size);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(os, static_cast<std::uint32_t>(s.dims[a]));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.channels()));
  for (float v : grid.data()) put<float>(os, v);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

VolumeGrid read_grid(const fs::path& path) {
  auto is = open_in(path, true);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "AKVG", 4) != 0)
    throw std::runtime_error("not an AKVG grid: " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != 1) throw std::runtime_error("unsupported AKVG version " + std::to_string(version));
  GridSpec s;
  for (int a = 0; a < 3; ++a) s.origin[a] = get<double>(is, path);
  s.voxel_size = get<double>(is, path);
  for (int a = 0; a < 3; ++a) s.dims[a] = static_cast<int>(get<std::uint32_t>(is, path));
  const int channels = static_cast<int>(get<std::uint32_t>(is, path));
  VolumeGrid g(s, channels);
  for (float& v : g.data()) v = get<float>(is, path);
  return g;
}

void write_obj(const fs::path& path, const TriMesh& mesh) {
  auto os = open_out(path, false);
  os << std::setprecision(9);
  for (const Vec3& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_ply(const fs::path& path, const TriMesh& mesh, int default_part) {
  mesh.validate();
  auto os = open_out(path, false);
  const bool labels = !mesh.part_ids.empty() || default_part >= 0;
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (labels) os << "property int part_id\n";
  os << "element face " << mesh.triangles.size() << "\n";
  os << "property list uchar int vertex_indices\nend_header\n";
  os << std::setprecision(9);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    os << v.x() << ' ' << v.y() << ' ' << v.z();
    if (labels) os << ' ' << (mesh.part_ids.empty() ? default_part : mesh.part_ids[i]);
    os << '\n';
  }
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriMesh read_ply(const fs::path& path) {
  auto is = open_in(path, false);
  std::string line;
  std::getline(is, line);
  if (line != "ply") throw std::runtime_error("not a PLY file: " + path.string());
  std::size_t nv = 0, nf = 0;
  std::vector<std::string> vprops;
  std::string element;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw std::runtime_error("only ASCII PLY is supported: " + path.string());
    } else if (word == "element") {
      ls >> element;
      std::size_t n = 0;
      ls >> n;
      (element == "vertex" ? nv : nf) = n;
    } else if (word == "property" && element == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vprops.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  TriMesh mesh;
  int ix = -1, iy = -1, iz = -1, ip = -1;
  for (int i = 0; i < static_cast<int>(vprops.size()); ++i) {
    if (vprops[i] == "x") ix = i;
    if (vprops[i] == "y") iy = i;
    if (vprops[i] == "z") iz = i;
    if (vprops[i] == "part_id") ip = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error("PLY without x/y/z: " + path.string());
  std::vector<double> vals(vprops.size());
  for (std::size_t i = 0; i < nv; ++i) {
    for (double& v : vals)
      if (!(is >> v)) throw std::runtime_error("truncated PLY: " + path.string());
    mesh.vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (ip >= 0) mesh.part_ids.push_back(static_cast<int>(vals[ip]));
  }
  for (std::size_t i = 0; i < nf; ++i) {
    int n = 0;
    std::array<int, 3> t{};
    if (!(is >> n >> t[0] >> t[1] >> t[2]) || n != 3)
      throw std::runtime_error("PLY faces must be triangles: " + path.string());
    mesh.triangles.push_back(t);
  }
  mesh.validate();
  return mesh;
}

void write_views(const fs::path& dir, const std::vector<DepthView>& views) {
  fs::create_directories(dir);
  json index = json::array();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const DepthView& v = views[i];
    std::ostringstream name;
    name << "view_" << std::setw(3) << std::setfill('0') << i;
    json j;
    j["width"] = v.width;
    j["height"] = v.height;
    j["fx"] = v.K.fx;
    j["fy"] = v.K.fy;
    j["cx"] = v.K.cx;
    j["cy"] = v.K.cy;
    const Mat4 m = v.pose.matrix();
    std::vector<double> pose;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
    j["pose"] = pose;
    j["depth"] = name.str() + ".depth";
    j["mask"] = name.str() + ".mask";
    open_out(dir / (name.str() + ".json"), false) << j.dump(2) << '\n';
    write_f32_array(dir / (name.str() + ".depth"), v.depth);
    auto ms = open_out(dir / (name.str() + ".mask"), true);
    ms.write(reinterpret_cast<const char*>(v.mask.data()), std::streamsize(v.mask.size()));
    index.push_back(name.str());
  }
  open_out(dir / "views.json", false) << json{{"views", index}}.dump(2) << '\n';
}

std::vector<DepthView> read_views(const fs::path& dir) {
  json index;
  open_in(dir / "views.json", false) >> index;
  std::vector<DepthView> views;
  for (const auto& name : index.at("views")) {
    json j;
    open_in(dir / (name.get<std::string>() + ".json"), false) >> j;
    DepthView v;
    v.width = j.at("width");
    v.height = j.at("height");
    v.K = {j.at("fx"), j.at("fy"), j.at("cx"), j.at("cy")};
    const auto pose = j.at("pose").get<std::vector<double>>();
    if (pose.size() != 16) throw std::runtime_error("view pose must have 16 entries");
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = pose[r * 4 + c];
    v.pose = Rigid::from_matrix(m);
    const std::size_t n = std::size_t(v.width) * v.height;
    v.depth = read_f32_array(dir / j.at("depth").get<std::string>(), n);
    auto ms = open_in(dir / j.at("mask").get<std::string>(), true);
    v.mask.resize(n);
    if (!ms.read(reinterpret_cast<char*>(v.mask.data()), std::streamsize(n)))
      throw std::runtime_error("truncated mask for " + name.get<std::string>());
    v.validate();
    views.push_back(std::move(v));
  }
  return views;
}

void write_matches(const fs::path& path, const std::vector<MatchPair>& matches) {
  json arr = json::array();
  for (const MatchPair& m : matches)
    arr.push_back({{"t", m.t}, {"v", m.v}, {"u", m.u},
                   {"p", {m.p.x(), m.p.y()}}, {"q", {m.q.x(), m.q.y()}}});
  open_out(path, false) << arr.dump() << '\n';
}

std::vector<MatchPair> read_matches(const fs::path& path) {
  json arr;
  open_in(path, false) >> arr;
  std::vector<MatchPair> out;
  for (const auto& j : arr) {
    MatchPair m;
    m.t = j.at("t");
    m.v = j.at("v");
    m.u = j.at("u");
    m.p = Vec2(j.at("p").at(0), j.at("p").at(1));
    m.q = Vec2(j.at("q").at(0), j.at("q").at(1));
    out.push_back(m);
  }
  return out;
}

}  // namespace ak::io
