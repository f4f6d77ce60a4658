#pragma once

#include <cstdint>
#include <vector>

#include "ptri/critical_system.hpp"
#include "ptri/homotopy.hpp"
#include "ptri/sampling.hpp"
#include "ptri/solver.hpp"
#include "ptri/types.hpp"

namespace ptri {

// Euler-characteristic decomposition of the ED degree: the count equals
// chi(variety) - chi(divisor at infinity) + chi(distance divisor cap
// infinity) - chi(distance divisor).
struct EDDegreeBreakdown {
  int m = 0;
  long long chi_variety = 0;
  long long chi_d_infinity = 0;
  long long chi_dq_cap_dinf = 0;
  long long chi_dq = 0;
  long long eddeg = 0;
};

// Number of complex critical points of the planar-constrained reprojection
// objective for m generic views: (9 m^2 - 13 m + 6) / 2.
inline long long eddeg_closed_form(int m) {
  if (m < 2) throw InvalidViewCount("eddeg_closed_form: need m >= 2");
  const long long mm = m;
  const long long numerator = 9 * mm * mm - 13 * mm + 6;
  // 9m^2 - 13m + 6 == m(m+1) mod 2, always even.
  return numerator / 2;
}

inline EDDegreeBreakdown eddeg_via_euler(int m) {
  if (m < 2) throw InvalidViewCount("eddeg_via_euler: need m >= 2");
  const long long mm = m;
  const long long pairs = mm * (mm - 1) / 2;
  EDDegreeBreakdown b;
  b.m = m;
  b.chi_variety = 3;
  b.chi_d_infinity = 2 * mm - pairs;
  b.chi_dq_cap_dinf = 2 * mm + pairs;
  b.chi_dq = -4 * mm * mm + 6 * mm + pairs;
  b.eddeg = b.chi_variety - b.chi_d_infinity + b.chi_dq_cap_dinf - b.chi_dq;
  return b;
}

// Empirical ED-degree counts: random generic rigs and observations, complete
// solve, one finite root count per trial. Failed trials record -1.
inline std::vector<int> eddeg_empirical(int m, int trials,
                                        const PathTrackerConfig& cfg,
                                        std::uint64_t seed) {
  if (m < 2) throw InvalidViewCount("eddeg_empirical: need m >= 2");
  if (trials < 1) throw Error("eddeg_empirical: need at least one trial");

  std::vector<int> counts;
  counts.reserve(trials);
  for (int trial = 0; trial < trials; ++trial) {
    try {
      Rng rng(split_seed(seed, trial));
      const CameraRig rig = random_rig(m, rng);
      const HomographySet h = build_homographies(rig);
      const Objective obj(h, random_observations(m, rng));
      PathTrackerConfig trial_cfg = cfg;
      trial_cfg.gamma_seed = split_seed(cfg.gamma_seed, trial);
      counts.push_back(solve_anchored(obj, trial_cfg).finite_count);
    } catch (const Error&) {
      counts.push_back(-1);
    }
  }
  return counts;
}

inline int modal_count(const std::vector<int>& counts) {
  int mode = -1;
  int best = 0;
  for (int c : counts) {
    if (c < 0) continue;
    int n = 0;
    for (int d : counts) n += (d == c);
    if (n > best || (n == best && c < mode)) {
      mode = c;
      best = n;
    }
  }
  return mode;
}

struct QuadraticFit {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
  double residual = 0.0;  // rms of the fit residuals

  double eval(double x) const { return (c2 * x + c1) * x + c0; }
};

// Least-squares quadratic through (m, count) samples.
inline QuadraticFit quadratic_fit(
    const std::vector<std::pair<double, double>>& points) {
  std::vector<double> distinct;
  for (const auto& [x, y] : points) {
    bool seen = false;
    for (double d : distinct) seen = seen || d == x;
    if (!seen) distinct.push_back(x);
  }
  if (distinct.size() < 3) {
    throw UnderdeterminedFit("quadratic_fit: need at least 3 distinct m");
  }

  Eigen::MatrixXd design(points.size(), 3);
  Eigen::VectorXd rhs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i].first;
    design(i, 0) = x * x;
    design(i, 1) = x;
    design(i, 2) = 1.0;
    rhs[i] = points[i].second;
  }
  const Eigen::Vector3d c =
      design.colPivHouseholderQr().solve(rhs);
  QuadraticFit fit;
  fit.c2 = c[0];
  fit.c1 = c[1];
  fit.c0 = c[2];
  fit.residual = std::sqrt((design * c - rhs).squaredNorm() /
                           static_cast<double>(points.size()));
  return fit;
}

}  // namespace ptri
