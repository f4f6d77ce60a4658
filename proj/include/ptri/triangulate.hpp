#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ptri/critical_system.hpp"
#include "ptri/geometry.hpp"
#include "ptri/homotopy.hpp"
#include "ptri/objective.hpp"
#include "ptri/solver.hpp"
#include "ptri/types.hpp"

namespace ptri {

enum class StrategyTag { kUC, kC, kHKeptC, kHFellBack };

inline const char* to_string(StrategyTag t) {
  switch (t) {
    case StrategyTag::kUC: return "UC";
    case StrategyTag::kC: return "C";
    case StrategyTag::kHKeptC: return "H-kept-C";
    case StrategyTag::kHFellBack: return "H-fell-back";
  }
  return "unknown";
}

struct SolverDiagnostics {
  int raw_count = 0;
  int finite_count = 0;
  int filtered_count = 0;
  int diverged = 0;
  int singular = 0;
  int stalled = 0;

  static SolverDiagnostics from(const SolveReport& r) {
    SolverDiagnostics d;
    d.raw_count = r.raw_count;
    d.finite_count = r.finite_count;
    d.filtered_count = r.filtered_count;
    d.diverged = r.count(PathStatus::kDiverged);
    d.singular = r.count(PathStatus::kSingular);
    d.stalled = r.count(PathStatus::kStalled);
    return d;
  }
};

struct TriangulationResult {
  ProjectivePoint3 world_point;
  std::optional<ChartPoint> chart_point;  // constrained paths only
  double objective_value = 0.0;
  std::vector<double> reprojection_errors;  // per view, pixels
  double derivative_error = std::numeric_limits<double>::quiet_NaN();
  StrategyTag strategy_used = StrategyTag::kC;
  SolverDiagnostics solver_diagnostics;

  double max_reprojection_error() const {
    double m = 0.0;
    for (double e : reprojection_errors) m = std::max(m, e);
    return m;
  }
};

// Per-view affine distances between the observations and the reprojection of
// a world point. Views that send the point to infinity report +inf.
inline std::vector<double> reprojection_errors(
    const std::vector<Camera>& cameras, const ObservationTuple& u,
    const ProjectivePoint3& w) {
  std::vector<double> errors;
  errors.reserve(cameras.size());
  for (std::size_t j = 0; j < cameras.size(); ++j) {
    const ImagePoint x = project(cameras[j], w);
    errors.push_back(x.has_affine()
                         ? (x.affine() - u[j]).norm()
                         : std::numeric_limits<double>::infinity());
  }
  return errors;
}

namespace detail {

// World point of a chart coordinate: (a, b, 1) is the view-1 image, so the
// plane point is U A_1^{-1} (a, b, 1).
inline ProjectivePoint3 chart_to_world(const CameraRig& rig,
                                       const HomographySet& h,
                                       const ChartPoint& p) {
  const Vec3 y = h.a(0).inverse() * Vec3(p.a, p.b, 1.0);
  return ProjectivePoint3(Vec4(rig.chart.basis * y));
}

inline TriangulationResult make_constrained_result(
    const CameraRig& rig, const HomographySet& h, const Objective& obj,
    const ObservationTuple& u, const ChartPoint& p, StrategyTag tag,
    SolverDiagnostics diagnostics) {
  TriangulationResult result;
  result.world_point = chart_to_world(rig, h, p);
  result.chart_point = p;
  result.objective_value = obj.value(p);
  result.reprojection_errors = reprojection_errors(rig.cameras, u,
                                                   result.world_point);
  result.derivative_error = obj.derivative_error(p.a, p.b);
  result.strategy_used = tag;
  result.solver_diagnostics = diagnostics;
  return result;
}

}  // namespace detail

// Complete planar-constrained triangulation: solves the cleared critical
// system by homotopy continuation and returns the real in-domain critical
// point with the smallest objective value.
inline TriangulationResult triangulate_constrained(
    const CameraRig& rig, const ObservationTuple& u,
    const PathTrackerConfig& cfg = {}, int max_failed_paths = 2) {
  detail::check_observations(u, rig.view_count());
  const HomographySet h = build_homographies(rig);
  const Objective obj(h, u);
  const SolveReport report = solve_anchored(obj, cfg);

  const int failed = report.count(PathStatus::kStalled) +
                     report.count(PathStatus::kSingular);
  if (failed > max_failed_paths) {
    throw SolverIncomplete("triangulate_constrained: " +
                           std::to_string(failed) +
                           " path failures, cannot certify a minimum");
  }

  const std::vector<ChartPoint> candidates = real_solutions(report);
  bool found = false;
  ChartPoint best{};
  double best_f = std::numeric_limits<double>::infinity();
  for (const ChartPoint& p : candidates) {
    if (!obj.in_domain(p)) continue;
    const double f = obj.value(p);
    const bool tie = std::abs(f - best_f) < 1e-12;
    const bool better =
        f < best_f - 1e-12 ||
        (tie && (p.a < best.a || (p.a == best.a && p.b < best.b)));
    if (!found || better) {
      best = p;
      best_f = f;
      found = true;
    }
  }
  if (!found) {
    throw NoRealSolution(
        "triangulate_constrained: no real in-domain critical point");
  }
  return detail::make_constrained_result(rig, h, obj, u, best, StrategyTag::kC,
                                         SolverDiagnostics::from(report));
}

// Local planar-constrained triangulation: Levenberg-damped Gauss-Newton on
// the reprojection residuals from a seed (by default the view-1 observation
// read as chart coordinates). Fails rather than returning a point whose
// gradient has not vanished.
inline TriangulationResult triangulate_constrained_fast(
    const CameraRig& rig, const ObservationTuple& u,
    std::optional<ChartPoint> seed = std::nullopt,
    double gradient_tolerance = 1e-9, int max_iterations = 200) {
  detail::check_observations(u, rig.view_count());
  const HomographySet h = build_homographies(rig);
  const Objective obj(h, u);
  const std::size_t m = rig.view_count();

  ChartPoint p = seed.value_or(ChartPoint{u[0][0], u[0][1]});
  if (!obj.in_domain(p)) {
    throw LocalSearchFailed("triangulate_constrained_fast: seed off-domain");
  }

  // Residuals r in R^(2m) and their 2-column Jacobian.
  const auto residuals = [&](const ChartPoint& q, Eigen::VectorXd* r,
                             Eigen::MatrixXd* jac) {
    r->resize(2 * m);
    if (jac) jac->resize(2 * m, 2);
    for (std::size_t j = 0; j < m; ++j) {
      const LinearForm nxl = obj.numerator_x(j);
      const LinearForm nyl = obj.numerator_y(j);
      const LinearForm dlf = obj.denominator(j);
      const double nx = nxl.eval(q.a, q.b);
      const double ny = nyl.eval(q.a, q.b);
      const double d = dlf.eval(q.a, q.b);
      (*r)[2 * j] = nx / d - u[j][0];
      (*r)[2 * j + 1] = ny / d - u[j][1];
      if (jac) {
        const double d2 = d * d;
        (*jac)(2 * j, 0) = (nxl.ca * d - nx * dlf.ca) / d2;
        (*jac)(2 * j, 1) = (nxl.cb * d - nx * dlf.cb) / d2;
        (*jac)(2 * j + 1, 0) = (nyl.ca * d - ny * dlf.ca) / d2;
        (*jac)(2 * j + 1, 1) = (nyl.cb * d - ny * dlf.cb) / d2;
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(p, &r, &jac);
  double f = r.squaredNorm();
  double lambda = 1e-6;

  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::Vector2d grad = 2.0 * jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < gradient_tolerance) break;

    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d step =
        -(jtj + lambda * Eigen::Matrix2d::Identity())
             .ldlt()
             .solve(Eigen::Vector2d(jac.transpose() * r));
    const ChartPoint trial{p.a + step[0], p.b + step[1]};

    bool accepted = false;
    if (obj.in_domain(trial) && std::isfinite(trial.a) &&
        std::isfinite(trial.b)) {
      Eigen::VectorXd rt;
      Eigen::MatrixXd jt;
      residuals(trial, &rt, &jt);
      const double ft = rt.squaredNorm();
      if (ft <= f) {
        p = trial;
        r.swap(rt);
        jac.swap(jt);
        f = ft;
        lambda = std::max(lambda * 0.25, 1e-12);
        accepted = true;
      }
    }
    if (!accepted) {
      lambda *= 8.0;
      if (lambda > 1e12) break;
    }
  }

  const auto [ga, gb] = obj.gradient(p);
  if (std::max(std::abs(ga), std::abs(gb)) >= 1e-8 * (1.0 + f)) {
    throw LocalSearchFailed(
        "triangulate_constrained_fast: gradient did not vanish");
  }
  return detail::make_constrained_result(rig, h, obj, u, p, StrategyTag::kC,
                                         SolverDiagnostics{});
}

// Unconstrained baseline: DLT null direction of the stacked projection
// constraints, refined by Levenberg-damped Gauss-Newton over R^3.
inline TriangulationResult triangulate_unconstrained(
    const std::vector<Camera>& cameras, const ObservationTuple& u) {
  detail::check_observations(u, cameras.size());
  const std::size_t m = cameras.size();

  Eigen::MatrixXd design(2 * m, 4);
  for (std::size_t j = 0; j < m; ++j) {
    const Mat34& c = cameras[j].matrix();
    design.row(2 * j) = u[j][0] * c.row(2) - c.row(0);
    design.row(2 * j + 1) = u[j][1] * c.row(2) - c.row(1);
    design.row(2 * j).normalize();
    design.row(2 * j + 1).normalize();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv[2] - sv[3] <= tol::kRank * sv[0]) {
    throw DegenerateGeometry(
        "triangulate_unconstrained: null direction is not isolated "
        "(rays nearly parallel)");
  }
  Vec4 xh = svd.matrixV().col(3);
  if (std::abs(xh[3]) <= tol::kDehomogenize * xh.norm()) {
    throw DegenerateGeometry(
        "triangulate_unconstrained: linear estimate at infinity");
  }
  Vec3 x = xh.head<3>() / xh[3];

  const auto residuals = [&](const Vec3& q, Eigen::VectorXd* r,
                             Eigen::MatrixXd* jac) -> bool {
    r->resize(2 * m);
    if (jac) jac->resize(2 * m, 3);
    for (std::size_t j = 0; j < m; ++j) {
      const Mat34& c = cameras[j].matrix();
      const Vec3 y = c * q.homogeneous();
      if (std::abs(y[2]) <= tol::kDehomogenize * y.norm()) return false;
      (*r)[2 * j] = y[0] / y[2] - u[j][0];
      (*r)[2 * j + 1] = y[1] / y[2] - u[j][1];
      if (jac) {
        const double w2 = y[2] * y[2];
        jac->row(2 * j) =
            (c.row(0).head<3>() * y[2] - y[0] * c.row(2).head<3>()) / w2;
        jac->row(2 * j + 1) =
            (c.row(1).head<3>() * y[2] - y[1] * c.row(2).head<3>()) / w2;
      }
    }
    return true;
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!residuals(x, &r, &jac)) {
    throw DegenerateGeometry(
        "triangulate_unconstrained: estimate projects to infinity");
  }
  double f = r.squaredNorm();
  double lambda = 1e-8;
  for (int it = 0; it < 100; ++it) {
    const Vec3 grad = 2.0 * jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + f)) break;
    const Mat3 jtj = jac.transpose() * jac;
    const Vec3 step = -(jtj + lambda * Mat3::Identity())
                           .ldlt()
                           .solve(Vec3(jac.transpose() * r));
    const Vec3 trial = x + step;
    Eigen::VectorXd rt;
    Eigen::MatrixXd jt;
    if (residuals(trial, &rt, &jt) && rt.squaredNorm() <= f) {
      x = trial;
      r.swap(rt);
      jac.swap(jt);
      f = r.squaredNorm();
      lambda = std::max(lambda * 0.25, 1e-14);
    } else {
      lambda *= 8.0;
      if (lambda > 1e12) break;
    }
  }

  TriangulationResult result;
  result.world_point = ProjectivePoint3(Vec4(x[0], x[1], x[2], 1.0));
  result.objective_value = f;
  result.reprojection_errors = reprojection_errors(cameras, u,
                                                   result.world_point);
  result.strategy_used = StrategyTag::kUC;
  return result;
}

inline TriangulationResult triangulate_unconstrained(
    const CameraRig& rig, const ObservationTuple& u) {
  return triangulate_unconstrained(rig.cameras, u);
}

// The composite constrained strategy: local solver first; complete solver
// when it fails or leaves a reprojection error above fallback_px.
inline TriangulationResult triangulate_constrained_auto(
    const CameraRig& rig, const ObservationTuple& u,
    const PathTrackerConfig& cfg = {}, double fallback_px = 5.0,
    double derivative_error_limit = 1e-6) {
  try {
    TriangulationResult fast = triangulate_constrained_fast(rig, u);
    if (fast.derivative_error < derivative_error_limit &&
        fast.max_reprojection_error() <= fallback_px) {
      return fast;
    }
  } catch (const Error&) {
    // fall through to the complete solver
  }
  return triangulate_constrained(rig, u, cfg);
}

// Hybrid strategy: constrained first; if the constrained reprojection error
// exceeds threshold_px the point is retriangulated without the plane.
inline TriangulationResult triangulate_hybrid(const CameraRig& rig,
                                              const ObservationTuple& u,
                                              double threshold_px = 5.0,
                                              const PathTrackerConfig& cfg = {}) {
  if (!(threshold_px > 0.0)) {
    throw Error("triangulate_hybrid: threshold must be positive");
  }
  std::optional<TriangulationResult> constrained;
  try {
    constrained = triangulate_constrained_auto(rig, u, cfg, threshold_px);
  } catch (const Error&) {
    constrained.reset();
  }
  if (constrained && constrained->max_reprojection_error() <= threshold_px) {
    constrained->strategy_used = StrategyTag::kHKeptC;
    return *constrained;
  }
  try {
    TriangulationResult uc = triangulate_unconstrained(rig, u);
    uc.strategy_used = StrategyTag::kHFellBack;
    return uc;
  } catch (const Error&) {
    if (constrained) {
      constrained->strategy_used = StrategyTag::kHKeptC;
      return *constrained;
    }
    throw;
  }
}

}  // namespace ptri
