#pragma once

#include "pngrasp/common.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

namespace pngrasp {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written little-endian; add byte swapping for this target");

/// Append-only little-endian buffer.
class BinaryWriter {
 public:
  template <typename T>
  void put(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view bytes) { buf_.append(bytes); }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void put_vec3(const Vec3& v) {
    put(v.x());
    put(v.y());
    put(v.z());
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    require(pos_ + sizeof(T) <= data_.size(), ErrorCode::Format, "unexpected end of binary data");
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string_view get_bytes(std::size_t n) {
    require(pos_ + n <= data_.size(), ErrorCode::Format, "unexpected end of binary data");
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    return std::string(get_bytes(n));
  }
  Vec3 get_vec3() {
    const double x = get<double>(), y = get<double>(), z = get<double>();
    return Vec3(x, y, z);
  }
  void expect_magic(std::string_view magic) {
    require(get_bytes(magic.size()) == magic, ErrorCode::Format,
            "bad magic, expected " + std::string(magic));
  }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_binary_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace pngrasp
