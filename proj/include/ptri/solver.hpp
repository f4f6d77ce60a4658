#pragma once

#include <utility>
#include <vector>

#include "ptri/critical_system.hpp"
#include "ptri/homotopy.hpp"
#include "ptri/objective.hpp"
#include "ptri/types.hpp"

namespace ptri {

namespace detail {

inline Mat3 random_rotation(Rng& rng) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  }
  return Eigen::HouseholderQR<Mat3>(m).householderQ();
}

}  // namespace detail

// Complete solve of the critical equations of an anchored objective.
//
// The standard view-1 chart is solved first. The cleared polynomials are
// badly conditioned for critical points that happen to fall close to the
// chart's dehomogenization lines, so the solve is repeated in randomly
// rotated charts, each endpoint is certified by Newton on the rational
// gradient, and the certified sets are merged in standard-chart
// coordinates. Rotation of the chart moves the lines but not the critical
// points, so every critical point is far from the lines in some chart with
// overwhelming probability.
//
// Deterministic: chart rotations and per-chart gammas derive from
// cfg.gamma_seed. Path diagnostics in the returned report refer to the
// standard-chart solve.
inline SolveReport solve_anchored(const Objective& obj,
                                  const PathTrackerConfig& cfg,
                                  int max_charts = 4) {
  PathTrackerConfig chart_cfg = cfg;
  chart_cfg.gamma_seed = split_seed(cfg.gamma_seed, 100);
  const CriticalSystem base_system = build_critical_system(obj);
  SolveReport report = solve_total_degree(base_system, chart_cfg);

  std::vector<std::pair<Complex, Complex>> merged = report.solutions;
  const auto merge = [&](Complex a, Complex b) {
    for (const auto& s : merged) {
      if (detail::chordal(a, s.first) + detail::chordal(b, s.second) <
          cfg.dedup_tolerance) {
        return false;
      }
    }
    merged.emplace_back(a, b);
    return true;
  };

  for (int chart = 1; chart < max_charts; ++chart) {
    Rng rot_rng(split_seed(cfg.gamma_seed, 7000 + chart));
    const Mat3 rotation = detail::random_rotation(rot_rng);
    std::vector<Mat3> transfers;
    transfers.reserve(obj.view_count());
    for (std::size_t j = 0; j < obj.view_count(); ++j) {
      transfers.push_back(obj.transfer(j) * rotation);
    }
    const Objective rotated(std::move(transfers), obj.observations());
    const CriticalSystem system = build_critical_system(rotated);
    PathTrackerConfig rot_cfg = cfg;
    rot_cfg.gamma_seed = split_seed(cfg.gamma_seed, 100 + chart);

    bool added = false;
    try {
      const SolveReport rotated_report = solve_total_degree(system, rot_cfg);
      for (const auto& [ya, yb] : rotated_report.solutions) {
        // Map the rotated-chart solution back to the standard chart.
        const Complex v0 = rotation(0, 0) * ya + rotation(0, 1) * yb + rotation(0, 2);
        const Complex v1 = rotation(1, 0) * ya + rotation(1, 1) * yb + rotation(1, 2);
        const Complex v2 = rotation(2, 0) * ya + rotation(2, 1) * yb + rotation(2, 2);
        if (std::abs(v2) <=
            tol::kDehomogenize * std::sqrt(std::norm(v0) + std::norm(v1) +
                                           std::norm(v2))) {
          continue;
        }
        const Complex a = v0 / v2;
        const Complex b = v1 / v2;
        // Re-certify in the standard chart before merging.
        const auto r = obj.refine_critical_point(a, b);
        if (!r.converged ||
            r.moved > cfg.refinement_basin_radius *
                          (1.0 + std::hypot(std::abs(a), std::abs(b)))) {
          continue;
        }
        added = merge(r.a, r.b) || added;
      }
    } catch (const Error&) {
      continue;  // a failed rotated chart contributes nothing
    }
    // Stop once an extra chart confirms the set without extending it.
    if (!added && !merged.empty()) break;
  }

  report.solutions = std::move(merged);
  report.finite_count = static_cast<int>(report.solutions.size());
  return report;
}

}  // namespace ptri
