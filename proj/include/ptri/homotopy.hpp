#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "ptri/critical_system.hpp"
#include "ptri/errors.hpp"
#include "ptri/types.hpp"

namespace ptri {

struct PathTrackerConfig {
  double initial_step = 0.05;
  double min_step = 1e-9;
  double max_step = 0.2;
  double corrector_tolerance = 1e-10;
  int max_corrector_iterations = 3;
  double divergence_radius = 1e8;
  // Generous iteration budget: regular roots exit after a few quadratic
  // steps, while roots of higher multiplicity (the denominator crossings)
  // contract only linearly and need the full budget to resolve.
  int polish_iterations = 40;
  std::uint64_t gamma_seed = 0x9d2c5680u;  // unit-modulus gamma drawn from this
  double denominator_tolerance = tol::kDenominatorFilter;
  // Backward-error gate for the converged classification. Simple roots
  // polish to machine precision; anything that cannot get below this after
  // Newton refinement is not a regular finite root.
  double residual_tolerance = 1e-12;
  // A converged endpoint must also contract under one further Newton step to
  // within this fraction of (1 + |z|). The step at a regular root is of
  // order cond(J) * eps; non-roots take steps of order |z| / degree.
  double contraction_tolerance = 1e-6;
  // Largest move the rational-gradient refinement may make before the
  // endpoint is considered to have left its own basin.
  double refinement_basin_radius = 0.05;
  // Uncertified endpoints closer than this to a denominator line are ghost
  // artifacts of the clearing, reported as filtered rather than failed.
  double line_cluster_tolerance = 1e-2;
  // Endpoints within this relative distance of an exact pairwise crossing of
  // denominator lines are clearing artifacts: the crossings are roots of the
  // cleared system of high multiplicity, and polished paths cluster around
  // them.
  double crossing_cluster_radius = 1e-3;
  double dedup_tolerance = tol::kDedup;

  void validate() const {
    if (!(0.0 < min_step && min_step <= initial_step &&
          initial_step <= max_step && max_step < 1.0)) {
      throw Error("PathTrackerConfig: require 0 < min <= initial <= max < 1");
    }
    if (!(corrector_tolerance > 0.0)) {
      throw Error("PathTrackerConfig: corrector tolerance must be positive");
    }
    if (!(divergence_radius > 1.0)) {
      throw Error("PathTrackerConfig: divergence radius must exceed 1");
    }
  }
};

enum class PathStatus {
  kConverged,
  kDiverged,
  kSingular,
  kFilteredDenominator,
  kStalled,
};

inline const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::kConverged: return "converged";
    case PathStatus::kDiverged: return "diverged";
    case PathStatus::kSingular: return "singular";
    case PathStatus::kFilteredDenominator: return "filtered_denominator";
    case PathStatus::kStalled: return "stalled";
  }
  return "unknown";
}

struct SolveReport {
  std::vector<std::pair<Complex, Complex>> solutions;  // distinct survivors
  std::vector<PathStatus> path_statuses;               // by start-point index
  int raw_count = 0;       // paths tracked, d1 * d2
  int finite_count = 0;    // distinct solutions after all filters
  int filtered_count = 0;  // paths removed by the denominator filter

  int count(PathStatus s) const {
    int n = 0;
    for (PathStatus p : path_statuses) n += (p == s);
    return n;
  }

  int failed_count() const {
    return count(PathStatus::kStalled) + count(PathStatus::kSingular);
  }
};

namespace detail {

using Cvec2 = Eigen::Vector2cd;

// Cramer solve of a 2x2 complex system; returns false when the determinant
// underflows relative to the matrix scale.
inline bool solve2x2(const Eigen::Matrix2cd& m, const Cvec2& rhs, Cvec2* out) {
  const Complex det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double scale = std::max(
      {std::abs(m(0, 0)) * std::abs(m(1, 1)),
       std::abs(m(0, 1)) * std::abs(m(1, 0)), 1e-300});
  if (std::abs(det) <= 1e-15 * scale) return false;
  (*out)[0] = (rhs[0] * m(1, 1) - rhs[1] * m(0, 1)) / det;
  (*out)[1] = (m(0, 0) * rhs[1] - m(1, 0) * rhs[0]) / det;
  return true;
}

// Componentwise backward-error scale: the evaluation magnitude sum, floored
// by the largest coefficient.
inline double residual_scale(const BivariatePolynomial& p, const Cvec2& z) {
  return std::max({p.eval_abs(std::abs(z[0]), std::abs(z[1])),
                   p.max_abs_coeff(), 1e-300});
}

inline double chordal(Complex x, Complex y) {
  return std::abs(x - y) /
         std::sqrt((1.0 + std::norm(x)) * (1.0 + std::norm(y)));
}

// Pairwise intersections of the (real) denominator lines. Each is a root of
// the cleared system with multiplicity and must be discarded no matter how
// the paths land around it.
inline std::vector<Eigen::Vector2d> denominator_crossings(
    const CriticalSystem& sys) {
  const auto& ds = sys.denominator_factors();
  std::vector<Eigen::Vector2d> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      const double det = ds[i].ca * ds[j].cb - ds[i].cb * ds[j].ca;
      const double scale =
          std::hypot(ds[i].ca, ds[i].cb) * std::hypot(ds[j].ca, ds[j].cb);
      if (std::abs(det) <= 1e-12 * std::max(scale, 1e-300)) continue;
      out.emplace_back((-ds[i].c1 * ds[j].cb + ds[j].c1 * ds[i].cb) / det,
                       (-ds[j].c1 * ds[i].ca + ds[i].c1 * ds[j].ca) / det);
    }
  }
  return out;
}

struct PathResult {
  PathStatus status = PathStatus::kStalled;
  Cvec2 z = Cvec2::Zero();
  double stalled_at = -1.0;  // last valid t when the step size underflowed
};

class TotalDegreeTracker {
 public:
  TotalDegreeTracker(const CriticalSystem& system, Complex gamma)
      : sys_(system), gamma_(gamma), crossings_(denominator_crossings(system)) {
    d1_ = std::max(1, sys_.degree_a());
    d2_ = std::max(1, sys_.degree_b());
  }

  int d1() const { return d1_; }
  int d2() const { return d2_; }

  // Tracks one path from the (i1, i2)-th start root.
  PathResult track(int i1, int i2, const PathTrackerConfig& cfg) const {
    Cvec2 z = start_point(i1, i2);
    double t = 0.0;
    double h = cfg.initial_step;
    int streak = 0;

    while (t < 1.0) {
      const double step = std::min(h, 1.0 - t);
      const Cvec2 saved = z;

      // Classical RK4 predictor on z'(t) = -Hz^-1 Ht, then a Newton
      // corrector at the advanced time. The corrector gets a displacement
      // budget tied to the predicted motion: corrections beyond it signal a
      // jump toward a different branch (the ghost structure along the
      // denominator lines is an attractor), so the step is rejected instead.
      Cvec2 trial = z;
      double tangent_norm = 0.0;
      bool ok = rk4_predict(&trial, t, step, &tangent_norm);
      const double t_new = t + step;
      const double budget =
          std::max(0.1 * step * (1.0 + tangent_norm),
                   1e-12 * (1.0 + z.norm()));
      if (ok) ok = correct(&trial, t_new, cfg, budget);

      if (ok && trial.allFinite()) {
        z = trial;
        t = t_new;
        if (z.norm() > cfg.divergence_radius) {
          return {PathStatus::kDiverged, z, -1.0};
        }
        if (++streak >= 4) {
          h = std::min(2.0 * h, cfg.max_step);
          streak = 0;
        }
      } else {
        z = saved;
        streak = 0;
        h *= 0.5;
        if (h < cfg.min_step) {
          if (z.norm() > cfg.divergence_radius) {
            return {PathStatus::kDiverged, z, t};
          }
          // The endpoint refinement may still resolve the stall onto a root.
          return classify_endpoint(z, cfg, t);
        }
      }
    }
    return classify_endpoint(z, cfg, -1.0);
  }

  // Endpoint refinement and classification, shared by clean endpoint
  // arrivals (stalled_at < 0) and stalls (stalled_at = last valid t).
  PathResult classify_endpoint(Cvec2 z, const PathTrackerConfig& cfg,
                               double stalled_at) const {
    bool singular = false;
    polish(&z, cfg.polish_iterations, &singular);
    if (z.norm() > cfg.divergence_radius || !z.allFinite()) {
      return {PathStatus::kDiverged, z, stalled_at};
    }

    // With the objective attached, the root certificate is Newton on the
    // rational gradient: coefficient rounding displaces the cleared system's
    // roots by eps / d^3 near the denominator lines, while the rational
    // formulation stays well conditioned everywhere off them. A convergent
    // refinement is a certified critical point no matter how far it moved;
    // duplicates are collapsed later. Endpoints whose refinement fails are
    // ghosts of the clearing when they hug a denominator line or crossing.
    if (sys_.has_gradient_oracle()) {
      const auto r = sys_.refine_critical_point(z[0], z[1]);
      if (r.converged) {
        const Cvec2 refined(r.a, r.b);
        if (sys_.min_denominator(r.a, r.b) < cfg.denominator_tolerance) {
          return {PathStatus::kFilteredDenominator, refined, stalled_at};
        }
        return {PathStatus::kConverged, refined, stalled_at};
      }
      if (near_crossing(z, cfg) ||
          sys_.min_denominator(z[0], z[1]) < cfg.line_cluster_tolerance) {
        return {PathStatus::kFilteredDenominator, z, stalled_at};
      }
      return {stalled_at < 0.0 ? PathStatus::kSingular : PathStatus::kStalled,
              z, stalled_at};
    }

    // Plain polynomial systems: machine-precision backward error plus a
    // vanishing extra Newton step.
    if (near_crossing(z, cfg)) {
      return {PathStatus::kFilteredDenominator, z, stalled_at};
    }
    if (residual(z) > cfg.residual_tolerance || !newton_step_vanishes(z, cfg)) {
      return {stalled_at < 0.0 ? PathStatus::kSingular : PathStatus::kStalled,
              z, stalled_at};
    }
    if (sys_.min_denominator(z[0], z[1]) < cfg.denominator_tolerance) {
      return {PathStatus::kFilteredDenominator, z, stalled_at};
    }
    return {PathStatus::kConverged, z, stalled_at};
  }

  bool newton_step_vanishes(const Cvec2& z, const PathTrackerConfig& cfg) const {
    const auto [f1, f2] = sys_.eval(z[0], z[1]);
    Cvec2 delta;
    if (!solve2x2(sys_.jacobian(z[0], z[1]), Cvec2(-f1, -f2), &delta)) {
      return false;
    }
    return delta.norm() <= cfg.contraction_tolerance * (1.0 + z.norm());
  }

  bool near_crossing(const Cvec2& z, const PathTrackerConfig& cfg) const {
    for (const Eigen::Vector2d& x : crossings_) {
      const double dist = std::hypot(std::abs(z[0] - x[0]), std::abs(z[1] - x[1]));
      if (dist <= cfg.crossing_cluster_radius * (1.0 + x.norm())) return true;
    }
    return false;
  }

  // Newton iteration on the target system; sets *singular if the Jacobian
  // degenerates before the residual is small.
  void polish(Cvec2* z, int iters, bool* singular) const {
    Cvec2 best = *z;
    double best_res = residual(best);
    for (int it = 0; it < iters; ++it) {
      const auto [f1, f2] = sys_.eval((*z)[0], (*z)[1]);
      Cvec2 delta;
      if (!solve2x2(sys_.jacobian((*z)[0], (*z)[1]), Cvec2(-f1, -f2),
                    &delta)) {
        *singular = best_res > 1e-12;
        break;
      }
      *z += delta;
      const double res = residual(*z);
      if (res < best_res) {
        best = *z;
        best_res = res;
      }
      if (best_res < 1e-15) break;
    }
    *z = best;
  }

  double residual(const Cvec2& z) const {
    const auto [f1, f2] = sys_.eval(z[0], z[1]);
    if (!std::isfinite(std::abs(f1)) || !std::isfinite(std::abs(f2))) {
      return std::numeric_limits<double>::infinity();
    }
    return std::max(std::abs(f1) / residual_scale(sys_.g_a(), z),
                    std::abs(f2) / residual_scale(sys_.g_b(), z));
  }

 private:
  Cvec2 start_point(int i1, int i2) const {
    const double two_pi = 2.0 * EIGEN_PI;
    return {std::polar(1.0, two_pi * i1 / d1_),
            std::polar(1.0, two_pi * i2 / d2_)};
  }

  Cvec2 start_system(const Cvec2& z) const {
    return {std::pow(z[0], d1_) - 1.0, std::pow(z[1], d2_) - 1.0};
  }

  Eigen::Matrix2cd start_jacobian(const Cvec2& z) const {
    Eigen::Matrix2cd j = Eigen::Matrix2cd::Zero();
    j(0, 0) = static_cast<double>(d1_) * std::pow(z[0], d1_ - 1);
    j(1, 1) = static_cast<double>(d2_) * std::pow(z[1], d2_ - 1);
    return j;
  }

  // H(z, t) = (1 - t) gamma S(z) + t F(z)
  Cvec2 homotopy(const Cvec2& z, double t) const {
    const auto [f1, f2] = sys_.eval(z[0], z[1]);
    const Cvec2 s = start_system(z);
    return {(1.0 - t) * gamma_ * s[0] + t * f1,
            (1.0 - t) * gamma_ * s[1] + t * f2};
  }

  Eigen::Matrix2cd homotopy_jacobian(const Cvec2& z, double t) const {
    return (1.0 - t) * gamma_ * start_jacobian(z) +
           t * sys_.jacobian(z[0], z[1]);
  }

  Cvec2 homotopy_dt(const Cvec2& z) const {
    const auto [f1, f2] = sys_.eval(z[0], z[1]);
    const Cvec2 s = start_system(z);
    return {f1 - gamma_ * s[0], f2 - gamma_ * s[1]};
  }

  bool tangent(const Cvec2& z, double t, Cvec2* dz) const {
    return solve2x2(homotopy_jacobian(z, t), -homotopy_dt(z), dz);
  }

  bool rk4_predict(Cvec2* z, double t, double h, double* tangent_norm) const {
    Cvec2 k1, k2, k3, k4;
    if (!tangent(*z, t, &k1)) return false;
    if (!tangent(*z + 0.5 * h * k1, t + 0.5 * h, &k2)) return false;
    if (!tangent(*z + 0.5 * h * k2, t + 0.5 * h, &k3)) return false;
    if (!tangent(*z + h * k3, t + h, &k4)) return false;
    *tangent_norm = k1.norm();
    *z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return z->allFinite();
  }

  bool correct(Cvec2* z, double t, const PathTrackerConfig& cfg,
               double budget) const {
    double moved = 0.0;
    for (int it = 0; it < cfg.max_corrector_iterations; ++it) {
      Cvec2 delta;
      if (!solve2x2(homotopy_jacobian(*z, t), -homotopy(*z, t), &delta)) {
        return false;
      }
      *z += delta;
      moved += delta.norm();
      if (!z->allFinite() || moved > budget) return false;
      if (delta.norm() <= cfg.corrector_tolerance * (1.0 + z->norm())) {
        return true;
      }
    }
    return false;
  }

  const CriticalSystem& sys_;
  Complex gamma_;
  std::vector<Eigen::Vector2d> crossings_;
  int d1_, d2_;
};

}  // namespace detail

// Tracks all d1 * d2 total-degree paths of H(z, t) = (1-t) gamma S(z) + t F(z)
// with start system S = (z1^d1 - 1, z2^d2 - 1), polishes the endpoints, and
// filters divergent, residual-failing, and denominator-zero endpoints.
// Deterministic: paths are processed in start-point order and results keyed
// by that order. Paths that stall or end singular are retried once with a
// finer step budget before being reported as failures.
inline SolveReport solve_total_degree(const CriticalSystem& system,
                                      const PathTrackerConfig& cfg) {
  cfg.validate();
  if (system.degree_a() < 1 || system.degree_b() < 1) {
    throw Error("solve_total_degree: both polynomials must have degree >= 1");
  }

  Rng gamma_rng(cfg.gamma_seed);
  const Complex gamma = gamma_rng.unit_complex();
  detail::TotalDegreeTracker tracker(system, gamma);

  PathTrackerConfig retry_cfg = cfg;
  retry_cfg.initial_step = cfg.initial_step / 8.0;
  retry_cfg.min_step = cfg.min_step / 64.0;
  retry_cfg.max_corrector_iterations = cfg.max_corrector_iterations + 2;

  SolveReport report;
  report.raw_count = tracker.d1() * tracker.d2();
  report.path_statuses.resize(report.raw_count);

  std::vector<detail::Cvec2> endpoints(report.raw_count);
  for (int i1 = 0; i1 < tracker.d1(); ++i1) {
    for (int i2 = 0; i2 < tracker.d2(); ++i2) {
      const int idx = i1 * tracker.d2() + i2;
      detail::PathResult result = tracker.track(i1, i2, cfg);
      if (result.status == PathStatus::kStalled ||
          result.status == PathStatus::kSingular) {
        const detail::PathResult second = tracker.track(i1, i2, retry_cfg);
        if (second.status != PathStatus::kStalled &&
            second.status != PathStatus::kSingular) {
          result = second;
        } else {
          result = second.stalled_at >= result.stalled_at ? second : result;
          // Out of tracking room at t = 1 with no finite limit in reach:
          // that is divergence truncated without a projective endgame.
          if (result.status == PathStatus::kStalled &&
              result.stalled_at > 1.0 - 10.0 * retry_cfg.min_step) {
            result.status = PathStatus::kDiverged;
          }
        }
      }
      report.path_statuses[idx] = result.status;
      endpoints[idx] = result.z;
    }
  }

  for (int idx = 0; idx < report.raw_count; ++idx) {
    if (report.path_statuses[idx] == PathStatus::kFilteredDenominator) {
      ++report.filtered_count;
    }
    if (report.path_statuses[idx] != PathStatus::kConverged) continue;
    const detail::Cvec2& z = endpoints[idx];
    bool duplicate = false;
    for (const auto& s : report.solutions) {
      if (detail::chordal(z[0], s.first) + detail::chordal(z[1], s.second) <
          cfg.dedup_tolerance) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      report.solutions.emplace_back(z[0], z[1]);
    }
  }
  report.finite_count = static_cast<int>(report.solutions.size());
  return report;
}

// Real solutions of a real-coefficient solve: imaginary parts below imag_tol
// are projected away.
inline std::vector<ChartPoint> real_solutions(const SolveReport& report,
                                              double imag_tol = tol::kImaginary) {
  std::vector<ChartPoint> out;
  for (const auto& [a, b] : report.solutions) {
    if (std::max(std::abs(a.imag()), std::abs(b.imag())) < imag_tol) {
      out.push_back(ChartPoint{a.real(), b.real()});
    }
  }
  return out;
}

// Newton refinement of an approximate root of the cleared system. Throws
// SingularJacobian when the Jacobian degenerates before the residual is
// small; otherwise returns the best (lowest-residual) iterate.
inline std::pair<Complex, Complex> newton_polish(const CriticalSystem& system,
                                                 std::pair<Complex, Complex> z,
                                                 int iters = 8) {
  detail::TotalDegreeTracker tracker(system, Complex(1.0, 0.0));
  detail::Cvec2 v(z.first, z.second);
  bool singular = false;
  tracker.polish(&v, iters, &singular);
  if (singular) {
    throw SingularJacobian("newton_polish: Jacobian singular at iterate");
  }
  return {v[0], v[1]};
}

}  // namespace ptri
