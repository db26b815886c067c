#pragma once

#include "pngrasp/geometry/transform.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace pngrasp {

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::Format, "expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Json to_json(const RigidTransform& T) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({T.rotation(r, 0), T.rotation(r, 1), T.rotation(r, 2)}));
  return Json{{"rotation", rows}, {"translation", to_json(T.translation)}};
}

inline RigidTransform transform_from_json(const Json& j) {
  RigidTransform T;
  const Json& rows = j.at("rotation");
  if (!rows.is_array() || rows.size() != 3) fail(ErrorCode::Format, "rotation must have 3 rows");
  for (int r = 0; r < 3; ++r) T.rotation.row(r) = vec3_from_json(rows[r]).transpose();
  T.translation = vec3_from_json(j.at("translation"));
  return T;
}

/// Reads optional keys from one JSON object and rejects any key nobody asked for.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorCode::Format, where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::Format, where_ + "." + key + ": wrong type");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(ErrorCode::Format, where_ + ": unknown key '" + k + "'");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace pngrasp
