#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pngrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
  InvalidArgument,
  DomainError,
  EmptySampleDomain,
  NonWatertight,
  HullFailure,
  PlacementFailure,
  EmptyCapture,
  EmptyInput,
  ConfigMismatch,
  NonFiniteLoss,
  Io,
  Format,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptySampleDomain: return "EmptySampleDomain";
    case ErrorCode::NonWatertight: return "NonWatertight";
    case ErrorCode::HullFailure: return "HullFailure";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::EmptyCapture: return "EmptyCapture";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// SplitMix64 finalizer; used to derive independent per-task seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Work is claimed
// dynamically; callers must write results by index to stay deterministic.
inline void parallel_for(std::size_t count, int jobs,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Any unit vector orthogonal to v (v need not be normalized).
inline Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 a = std::abs(v.x()) <= std::abs(v.y()) && std::abs(v.x()) <= std::abs(v.z())
                     ? Vec3::UnitX()
                     : (std::abs(v.y()) <= std::abs(v.z()) ? Vec3::UnitY() : Vec3::UnitZ());
  return v.cross(a).normalized();
}

}  // namespace pngrasp
