#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace paray {

// Thrown when an operation's runtime precondition fails (e.g. a time window
// that does not cover the required propagation distances).
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by the trainer when the loss becomes non-finite.
class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& msg, int iteration)
      : std::runtime_error(msg), iteration(iteration) {}
  int iteration;
};

// Thrown by the CLI layer for malformed experiment configs.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// SplitMix64-based generator. Used everywhere seeds matter so that results
// are reproducible across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n), n >= 1. Rejection sampling.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * next_double(); }

 private:
  std::uint64_t state_;
};

// Resolves the worker count for parallel kernels: explicit request wins,
// then PARAY_THREADS, then the OpenMP default.
int resolve_threads(int requested);

}  // namespace paray
