#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>

namespace ptri {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using Complex = std::complex<double>;

namespace tol {
// Relative rank / genericity tolerance against the largest singular value.
inline constexpr double kRank = 1e-9;
inline constexpr double kGenericity = 1e-9;
// Dehomogenization: affine coordinates are defined iff the last homogeneous
// coordinate exceeds this fraction of the vector norm.
inline constexpr double kDehomogenize = 1e-12;
// Plane incidence residual |pi^T X| / (|pi| |X|) for constrained results.
inline constexpr double kPlaneIncidence = 1e-9;
// Solver-side tolerances (see PathTrackerConfig for the tunable set).
inline constexpr double kDenominatorFilter = 1e-8;
inline constexpr double kDedup = 1e-6;
inline constexpr double kImaginary = 1e-8;
}  // namespace tol

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed for sub-task `index` of `master`.
// Parallel and serial execution orders then consume identical streams.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

// Seeded RNG with self-contained distributions. std:: distributions are
// implementation-defined, which would break byte-identical CSV output
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps things exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Unit vector on the circle.
  Vec2 unit_direction2() {
    const double theta = uniform(0.0, 2.0 * EIGEN_PI);
    return {std::cos(theta), std::sin(theta)};
  }

  Complex unit_complex() {
    const double theta = uniform(0.0, 2.0 * EIGEN_PI);
    return {std::cos(theta), std::sin(theta)};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ptri
