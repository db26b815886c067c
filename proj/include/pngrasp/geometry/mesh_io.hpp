#pragma once

#include "pngrasp/geometry/primitives.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace pngrasp {

namespace detail {

struct VertexWelder {
  std::map<std::array<double, 3>, int> index;
  std::vector<Vec3> vertices;

  int add(const Vec3& p) {
    const std::array<double, 3> key{p.x(), p.y(), p.z()};
    auto [it, inserted] = index.emplace(key, static_cast<int>(vertices.size()));
    if (inserted) vertices.push_back(p);
    return it->second;
  }
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline TriMesh parse_stl_binary(const std::string& data) {
  require(data.size() >= 84, ErrorCode::Format, "binary STL too short");
  std::uint32_t count;
  std::memcpy(&count, data.data() + 80, 4);
  require(data.size() >= 84 + static_cast<std::size_t>(count) * 50, ErrorCode::Format,
          "binary STL truncated");
  VertexWelder weld;
  std::vector<Triangle> tris;
  tris.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const char* rec = data.data() + 84 + static_cast<std::size_t>(i) * 50;
    Triangle t;
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, rec + 12 + 12 * k, 12);
      t[k] = weld.add(Vec3(xyz[0], xyz[1], xyz[2]));
    }
    tris.push_back(t);
  }
  return TriMesh(std::move(weld.vertices), tris);
}

inline TriMesh parse_stl_ascii(const std::string& data) {
  std::istringstream in(data);
  VertexWelder weld;
  std::vector<Triangle> tris;
  std::string word;
  Triangle cur{};
  int k = 0;
  while (in >> word) {
    if (word == "vertex") {
      double x, y, z;
      require(static_cast<bool>(in >> x >> y >> z), ErrorCode::Format, "bad STL vertex");
      require(k < 3, ErrorCode::Format, "STL facet with more than 3 vertices");
      cur[k++] = weld.add(Vec3(x, y, z));
    } else if (word == "endfacet") {
      require(k == 3, ErrorCode::Format, "STL facet without 3 vertices");
      tris.push_back(cur);
      k = 0;
    }
  }
  return TriMesh(std::move(weld.vertices), tris);
}

}  // namespace detail

inline TriMesh parse_stl(const std::string& data) {
  // Binary files may also start with "solid"; trust the size field when it matches.
  if (data.size() >= 84) {
    std::uint32_t count;
    std::memcpy(&count, data.data() + 80, 4);
    if (data.size() == 84 + static_cast<std::size_t>(count) * 50) return detail::parse_stl_binary(data);
  }
  if (data.rfind("solid", 0) == 0) return detail::parse_stl_ascii(data);
  return detail::parse_stl_binary(data);
}

/// Positions and faces only; polygons are fan-triangulated.
inline TriMesh parse_obj(const std::string& data) {
  std::istringstream in(data);
  std::vector<Vec3> v;
  std::vector<Triangle> tris;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      require(static_cast<bool>(ls >> x >> y >> z), ErrorCode::Format, "bad OBJ vertex");
      v.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string tok;
      while (ls >> tok) {
        const int idx = std::stoi(tok.substr(0, tok.find('/')));
        face.push_back(idx > 0 ? idx - 1 : static_cast<int>(v.size()) + idx);
      }
      require(face.size() >= 3, ErrorCode::Format, "OBJ face with fewer than 3 vertices");
      for (std::size_t i = 1; i + 1 < face.size(); ++i) tris.push_back({face[0], face[i], face[i + 1]});
    }
  }
  return TriMesh(std::move(v), tris);
}

/// Loads .stl or .obj, converting from `unit_to_mm` (e.g. 1000 for meters)
/// and orienting faces outward.
inline TriMesh load_mesh(const std::filesystem::path& path, double unit_to_mm = 1.0) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  const std::string data = detail::read_file(path);
  TriMesh mesh;
  if (ext == ".stl") mesh = parse_stl(data);
  else if (ext == ".obj") mesh = parse_obj(data);
  else fail(ErrorCode::Format, "unsupported mesh format: " + path.string());
  if (unit_to_mm != 1.0) mesh = mesh.scaled(unit_to_mm);
  return orient_outward(mesh);
}

inline void write_stl_ascii(std::ostream& out, const TriMesh& mesh, const std::string& name = "mesh") {
  out << "solid " << name << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3& n = mesh.face_normals()[i];
    out << "facet normal " << n.x() << " " << n.y() << " " << n.z() << "\n outer loop\n";
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.corner(i, k);
      out << "  vertex " << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
    out << " endloop\nendfacet\n";
  }
  out << "endsolid " << name << "\n";
}

}  // namespace pngrasp
