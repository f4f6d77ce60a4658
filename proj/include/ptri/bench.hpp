#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ptri/sampling.hpp"
#include "ptri/triangulate.hpp"
#include "ptri/types.hpp"

namespace ptri {

// A reproducible planar scene: every point lies exactly on the anchor plane
// and every noisy observation sits at distance exactly noise_level from the
// clean one (uniformly random direction).
struct SyntheticScene {
  CameraRig rig;
  std::vector<ProjectivePoint3> points;
  std::vector<ObservationTuple> clean_observations;
  double noise_level = 0.0;
  std::vector<ObservationTuple> noisy_observations;
  std::uint64_t seed = 0;
};

inline SyntheticScene generate_scene(std::size_t m, std::size_t n,
                                     double noise_level, std::uint64_t seed,
                                     int max_attempts = 256) {
  if (m < 2 || n < 1 || noise_level < 0.0) {
    throw Error("generate_scene: invalid configuration");
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    try {
      CameraRig rig = random_rig(m, rng);

      std::vector<ProjectivePoint3> points;
      std::vector<ObservationTuple> clean;
      points.reserve(n);
      clean.reserve(n);
      int rejects = 0;
      while (points.size() < n && rejects < 1000) {
        const ProjectivePoint3 x =
            rig.chart.point(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        ObservationTuple u;
        bool ok = true;
        for (const Camera& cam : rig.cameras) {
          const ImagePoint img = project(cam, x);
          // Keep points comfortably inside every affine image.
          if (std::abs(img.coords()[2]) < 1e-3 * img.coords().norm()) {
            ok = false;
            break;
          }
          u.push_back(img.affine());
        }
        if (!ok) {
          ++rejects;
          continue;
        }
        points.push_back(x);
        clean.push_back(std::move(u));
      }
      if (points.size() < n) continue;

      SyntheticScene scene{std::move(rig), std::move(points), std::move(clean),
                           noise_level, {}, seed};
      scene.noisy_observations = scene.clean_observations;
      if (noise_level > 0.0) {
        for (ObservationTuple& u : scene.noisy_observations) {
          for (Vec2& p : u) {
            p += noise_level * rng.unit_direction2();
          }
        }
      }
      return scene;
    } catch (const Error&) {
      continue;
    }
  }
  throw GenericitySamplingFailed(
      "generate_scene: no generic scene found within the attempt budget");
}

// log10 of the noise-normalized mean triangulation error,
// log10( sum_i |W_i - X_i| / (n * eps) ). Requires eps > 0.
inline double e_tr(const std::vector<ProjectivePoint3>& recovered,
                   const std::vector<ProjectivePoint3>& truth, double eps) {
  if (recovered.size() != truth.size() || recovered.empty()) {
    throw Error("e_tr: size mismatch");
  }
  if (!(eps > 0.0)) {
    throw ZeroNoiseMetric("e_tr: undefined for zero noise level");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    sum += (recovered[i].euclidean() - truth[i].euclidean()).norm();
  }
  return std::log10(sum / (static_cast<double>(recovered.size()) * eps));
}

// Zero-noise fallback: log10 of the mean absolute error, floored to keep the
// logarithm finite on exact recovery.
inline double log_absolute_error(const std::vector<ProjectivePoint3>& recovered,
                                 const std::vector<ProjectivePoint3>& truth) {
  if (recovered.size() != truth.size() || recovered.empty()) {
    throw Error("log_absolute_error: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    sum += (recovered[i].euclidean() - truth[i].euclidean()).norm();
  }
  return std::log10(
      std::max(sum / static_cast<double>(recovered.size()), 1e-300));
}

enum class Method { kC, kUC, kH, kFast };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kC: return "c";
    case Method::kUC: return "uc";
    case Method::kH: return "h";
    case Method::kFast: return "fast";
  }
  return "unknown";
}

struct BenchRecord {
  Method method = Method::kC;
  int iteration = 0;
  double e_tr = 0.0;
  std::int64_t wall_time_ns = 0;
  std::uint64_t seed = 0;
  bool failed = false;
};

inline std::vector<BenchRecord> run_benchmark(
    std::size_t m, std::size_t n, double noise_level, int iterations,
    const std::vector<Method>& methods, std::uint64_t seed,
    const PathTrackerConfig& cfg = {}) {
  if (iterations < 1 || methods.empty()) {
    throw Error("run_benchmark: invalid configuration");
  }
  std::vector<BenchRecord> records;
  records.reserve(static_cast<std::size_t>(iterations) * methods.size());

  for (int iter = 0; iter < iterations; ++iter) {
    const std::uint64_t scene_seed = split_seed(seed, iter);
    const SyntheticScene scene = generate_scene(m, n, noise_level, scene_seed);

    for (Method method : methods) {
      BenchRecord rec;
      rec.method = method;
      rec.iteration = iter;
      rec.seed = scene_seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        std::vector<ProjectivePoint3> recovered;
        recovered.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          const ObservationTuple& u = scene.noisy_observations[i];
          switch (method) {
            case Method::kC:
              recovered.push_back(
                  triangulate_constrained(scene.rig, u, cfg).world_point);
              break;
            case Method::kUC:
              recovered.push_back(
                  triangulate_unconstrained(scene.rig, u).world_point);
              break;
            case Method::kH:
              recovered.push_back(
                  triangulate_hybrid(scene.rig, u, 5.0, cfg).world_point);
              break;
            case Method::kFast:
              recovered.push_back(
                  triangulate_constrained_fast(scene.rig, u).world_point);
              break;
          }
        }
        rec.e_tr = noise_level > 0.0
                       ? e_tr(recovered, scene.points, noise_level)
                       : log_absolute_error(recovered, scene.points);
      } catch (const Error&) {
        rec.failed = true;
        rec.e_tr = std::numeric_limits<double>::quiet_NaN();
      }
      rec.wall_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
      records.push_back(rec);
    }
  }
  return records;
}

// Fixed 120-bin log-uniform histogram over [1e-20, 1e10] with a sentinel
// overflow bin; underflows (including exact zeros) land in the first bin.
struct StabilityHistogram {
  static constexpr int kBins = 120;
  static constexpr double kLogLo = -20.0;
  static constexpr double kLogHi = 10.0;

  std::array<std::uint64_t, kBins> counts{};
  std::uint64_t overflow = 0;  // failures and values >= 1e10

  static double bin_left(int k) {
    return std::pow(10.0, kLogLo + (kLogHi - kLogLo) * k / kBins);
  }
  static double bin_right(int k) { return bin_left(k + 1); }

  void add(double value) {
    if (!std::isfinite(value) || value >= std::pow(10.0, kLogHi)) {
      ++overflow;
      return;
    }
    if (value < std::pow(10.0, kLogLo)) {
      ++counts[0];
      return;
    }
    const int k = static_cast<int>((std::log10(value) - kLogLo) /
                                   ((kLogHi - kLogLo) / kBins));
    ++counts[std::clamp(k, 0, kBins - 1)];
  }

  void add_failure() { ++overflow; }

  std::uint64_t total() const {
    std::uint64_t t = overflow;
    for (std::uint64_t c : counts) t += c;
    return t;
  }

  double median() const {
    const std::uint64_t t = total();
    if (t == 0) return std::numeric_limits<double>::quiet_NaN();
    std::uint64_t acc = 0;
    for (int k = 0; k < kBins; ++k) {
      acc += counts[k];
      if (2 * acc >= t) return std::sqrt(bin_left(k) * bin_right(k));
    }
    return std::pow(10.0, kLogHi);
  }

  // Fraction of mass strictly below `value`, counting whole bins.
  double fraction_below(double value) const {
    const std::uint64_t t = total();
    if (t == 0) return 0.0;
    std::uint64_t acc = 0;
    for (int k = 0; k < kBins; ++k) {
      if (bin_right(k) <= value) acc += counts[k];
    }
    return static_cast<double>(acc) / static_cast<double>(t);
  }
};

enum class StabilitySolver { kComplete, kFast };

// Derivative-error histogram over random instances: solve, evaluate the
// objective partials at every returned solution, and bin their maxima.
inline StabilityHistogram stability_harness(std::size_t m, int samples,
                                            StabilitySolver solver,
                                            std::uint64_t seed,
                                            const PathTrackerConfig& cfg = {}) {
  if (m < 2 || samples < 1) {
    throw Error("stability_harness: invalid configuration");
  }
  StabilityHistogram hist;
  for (int s = 0; s < samples; ++s) {
    try {
      Rng rng(split_seed(seed, s));
      const CameraRig rig = random_rig(m, rng);
      const HomographySet h = build_homographies(rig);
      const ObservationTuple u = random_observations(m, rng);
      const Objective obj(h, u);
      if (solver == StabilitySolver::kComplete) {
        PathTrackerConfig sample_cfg = cfg;
        sample_cfg.gamma_seed = split_seed(cfg.gamma_seed, s);
        const SolveReport report = solve_anchored(obj, sample_cfg);
        if (report.solutions.empty()) {
          hist.add_failure();
          continue;
        }
        for (const auto& [a, b] : report.solutions) {
          hist.add(obj.derivative_error(a, b));
        }
      } else {
        const TriangulationResult r = triangulate_constrained_fast(rig, u);
        hist.add(r.derivative_error);
      }
    } catch (const Error&) {
      hist.add_failure();
    }
  }
  return hist;
}

}  // namespace ptri
