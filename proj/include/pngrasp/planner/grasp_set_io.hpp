#pragma once

#include "pngrasp/binary_io.hpp"
#include "pngrasp/planner/planner.hpp"

namespace pngrasp {

// Per-object grasp-set file: "PNGS", u32 version, then the set with every
// real number stored as float64 so re-scoring reproduces stored values.
inline constexpr std::uint32_t kGraspSetVersion = 1;

namespace detail {

inline void put_grasp(BinaryWriter& w, const ScoredGrasp& s) {
  w.put_vec3(s.grasp.point);
  w.put_vec3(s.grasp.approach);
  w.put_vec3(s.grasp.opening);
  w.put(s.grasp.depth);
  w.put(s.q_c);
}

inline ScoredGrasp get_grasp(BinaryReader& r) {
  ScoredGrasp s;
  s.grasp.point = r.get_vec3();
  s.grasp.approach = r.get_vec3();
  s.grasp.opening = r.get_vec3();
  s.grasp.depth = r.get<double>();
  s.q_c = r.get<double>();
  return s;
}

}  // namespace detail

inline std::string encode_grasp_set(const SingleObjectGraspSet& set) {
  BinaryWriter w;
  w.put_bytes("PNGS");
  w.put(kGraspSetVersion);
  w.put_string(set.object_id);
  w.put(set.seed);
  w.put(static_cast<std::uint32_t>(set.sample_count));
  w.put(static_cast<std::uint32_t>(set.majors.size()));
  for (const MajorGrasp& m : set.majors) {
    w.put(static_cast<std::uint32_t>(m.sample));
    detail::put_grasp(w, m.major);
    w.put(static_cast<std::uint32_t>(m.supplementary.size()));
    for (const ScoredGrasp& s : m.supplementary) detail::put_grasp(w, s);
  }
  w.put(static_cast<std::uint32_t>(set.negatives.size()));
  for (const NegativePoint& n : set.negatives) {
    w.put(static_cast<std::uint32_t>(n.sample));
    w.put_vec3(n.point);
    w.put_vec3(n.normal);
  }
  return w.data();
}

inline SingleObjectGraspSet decode_grasp_set(std::string_view data) {
  BinaryReader r(data);
  r.expect_magic("PNGS");
  const auto version = r.get<std::uint32_t>();
  require(version == kGraspSetVersion, ErrorCode::Format,
          "unsupported grasp-set version " + std::to_string(version));
  SingleObjectGraspSet set;
  set.object_id = r.get_string();
  set.seed = r.get<std::uint64_t>();
  set.sample_count = static_cast<int>(r.get<std::uint32_t>());
  const auto majors = r.get<std::uint32_t>();
  // Each major needs at least 124 bytes; guards against absurd counts.
  require(majors <= r.remaining() / 124, ErrorCode::Format, "grasp-set major count exceeds file size");
  set.majors.resize(majors);
  for (MajorGrasp& m : set.majors) {
    m.sample = static_cast<int>(r.get<std::uint32_t>());
    m.major = detail::get_grasp(r);
    const auto supp = r.get<std::uint32_t>();
    require(supp <= r.remaining() / 88, ErrorCode::Format, "grasp-set supplementary count exceeds file size");
    m.supplementary.resize(supp);
    for (ScoredGrasp& s : m.supplementary) s = detail::get_grasp(r);
  }
  const auto negatives = r.get<std::uint32_t>();
  require(negatives <= r.remaining() / 52, ErrorCode::Format, "grasp-set negative count exceeds file size");
  set.negatives.resize(negatives);
  for (NegativePoint& n : set.negatives) {
    n.sample = static_cast<int>(r.get<std::uint32_t>());
    n.point = r.get_vec3();
    n.normal = r.get_vec3();
  }
  require(r.done(), ErrorCode::Format, "trailing bytes in grasp-set file");
  return set;
}

inline void save_grasp_set(const std::filesystem::path& path, const SingleObjectGraspSet& set) {
  write_binary_file(path, encode_grasp_set(set));
}

inline SingleObjectGraspSet load_grasp_set(const std::filesystem::path& path) {
  return decode_grasp_set(read_binary_file(path));
}

}  // namespace pngrasp
