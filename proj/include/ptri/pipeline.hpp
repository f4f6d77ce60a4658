#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptri/geometry.hpp"
#include "ptri/scene.hpp"
#include "ptri/triangulate.hpp"
#include "ptri/types.hpp"

namespace ptri {

// First-order geometric distance to the epipolar constraint between two
// calibrated views, in pixels. The fundamental matrix is assembled as
// [e']_x P_b pinv(P_a) with e' the image of the first center in the second
// view.
inline double sampson_error(const Camera& cam_a, const Camera& cam_b,
                            const Vec2& xa, const Vec2& xb) {
  if (cam_a.center().projective_distance(cam_b.center()) <= tol::kGenericity) {
    throw IdenticalCenters("sampson_error: cameras share a center");
  }
  const Mat34& pa = cam_a.matrix();
  const Mat34& pb = cam_b.matrix();
  const Eigen::Matrix<double, 4, 3> pinv =
      pa.transpose() * (pa * pa.transpose()).inverse();
  const Vec3 e = pb * cam_a.center().coords();
  Mat3 ex;
  ex << 0, -e[2], e[1], e[2], 0, -e[0], -e[1], e[0], 0;
  const Mat3 f = ex * (pb * pinv);

  const Vec3 ha(xa[0], xa[1], 1.0);
  const Vec3 hb(xb[0], xb[1], 1.0);
  const Vec3 fa = f * ha;
  const Vec3 ftb = f.transpose() * hb;
  const double top = hb.dot(fa);
  const double denom =
      fa[0] * fa[0] + fa[1] * fa[1] + ftb[0] * ftb[0] + ftb[1] * ftb[1];
  if (denom <= 0.0) return 0.0;
  return std::sqrt(top * top / denom);
}

struct DetectedPlane {
  Plane plane = Plane(0.0, 0.0, 0.0, 1.0);
  std::vector<int> member_track_ids;
  double inlier_threshold = 0.0;  // world units
  int support = 0;
};

// Classic 3-point RANSAC plane fit with a least-squares refit over the
// consensus set. member_track_ids holds indices into `points`.
inline DetectedPlane ransac_plane(const std::vector<Vec3>& points,
                                  double threshold, int max_iters,
                                  std::uint64_t seed) {
  if (points.size() < 3) {
    throw InsufficientInput("ransac_plane: need at least 3 points");
  }
  Rng rng(seed);

  double scale = 0.0;
  for (const Vec3& p : points) scale = std::max(scale, p.norm());
  scale = std::max(scale, 1.0);

  int best_support = -1;
  Vec3 best_normal = Vec3::UnitZ();
  Vec3 best_anchor = Vec3::Zero();
  int degenerate = 0;

  for (int it = 0; it < max_iters; ++it) {
    const std::size_t n = points.size();
    const std::size_t i1 = rng.below(n);
    std::size_t i2 = rng.below(n - 1);
    if (i2 >= i1) ++i2;
    std::size_t i3 = rng.below(n - 2);
    if (i3 >= std::min(i1, i2)) ++i3;
    if (i3 >= std::max(i1, i2)) ++i3;

    const Vec3 normal =
        (points[i2] - points[i1]).cross(points[i3] - points[i1]);
    if (normal.norm() <= 1e-12 * scale * scale) {
      ++degenerate;
      continue;
    }
    const Vec3 nh = normal.normalized();
    int support = 0;
    for (const Vec3& p : points) {
      if (std::abs(nh.dot(p - points[i1])) <= threshold) ++support;
    }
    if (support > best_support) {
      best_support = support;
      best_normal = nh;
      best_anchor = points[i1];
    }
  }
  if (best_support < 0) {
    throw DegenerateSample(
        "ransac_plane: every sampled triple was collinear");
  }

  // Least-squares refit over the consensus set: centroid plus the smallest
  // eigenvector of the centered covariance.
  std::vector<int> inliers;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(best_normal.dot(points[i] - best_anchor)) <= threshold) {
      inliers.push_back(static_cast<int>(i));
    }
  }
  Vec3 centroid = Vec3::Zero();
  for (int i : inliers) centroid += points[i];
  centroid /= static_cast<double>(inliers.size());
  Mat3 cov = Mat3::Zero();
  for (int i : inliers) {
    const Vec3 d = points[i] - centroid;
    cov += d * d.transpose();
  }
  Vec3 normal = best_normal;
  if (inliers.size() > 3) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    normal = eig.eigenvectors().col(0);
  }

  DetectedPlane result{Plane(Vec4(normal[0], normal[1], normal[2],
                                  -normal.dot(centroid))),
                       {},
                       threshold,
                       0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(normal.dot(points[i] - centroid)) <= threshold) {
      result.member_track_ids.push_back(static_cast<int>(i));
    }
  }
  result.support = static_cast<int>(result.member_track_ids.size());
  return result;
}

struct PlaneDetectionConfig {
  int num_planes = 1;
  double depth_inlier_threshold = 0.0;  // world units, scene-dependent
  double sampson_gate_px = 2.0;
  int min_support = 10;
  int ransac_iterations = 1000;
  bool sampson_all_pairs = false;  // gate every view pair, not just view 1
};

namespace detail {

inline ObservationTuple track_observations(const SceneFile::Track& track,
                                           std::vector<int>* view_indices) {
  ObservationTuple u;
  view_indices->clear();
  for (const SceneFile::Observation& o : track.observations) {
    u.emplace_back(o.x, o.y);
    view_indices->push_back(o.view_index);
  }
  return u;
}

inline bool sampson_gated(const std::vector<Camera>& cameras,
                          const SceneFile::Track& track, double gate_px,
                          bool all_pairs) {
  std::vector<int> views;
  const ObservationTuple u = track_observations(track, &views);
  // Reference observation: the lowest-indexed view (the chart anchor).
  std::size_t ref = 0;
  for (std::size_t k = 1; k < views.size(); ++k) {
    if (views[k] < views[ref]) ref = k;
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (k == ref) continue;
    if (sampson_error(cameras[views[ref]], cameras[views[k]], u[ref], u[k]) >=
        gate_px) {
      return false;
    }
    if (all_pairs) {
      for (std::size_t l = k + 1; l < views.size(); ++l) {
        if (l == ref) continue;
        if (sampson_error(cameras[views[k]], cameras[views[l]], u[k], u[l]) >=
            gate_px) {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace detail

// Iterative plane discovery over the depth hypotheses: RANSAC a plane over
// the remaining depth points, gate its tracks by Sampson error, triangulate
// the gated tracks without the plane, refit the plane to those 3D points,
// and consume the depth points it claimed.
inline std::vector<DetectedPlane> detect_planes(
    const SceneFile& scene, const PlaneDetectionConfig& cfg, std::uint64_t seed,
    std::vector<std::string>* log = nullptr) {
  if (scene.depth_points.empty()) {
    throw InsufficientInput("detect_planes: scene has no depth_points");
  }
  if (scene.views.size() < 2) {
    throw InsufficientInput("detect_planes: need at least 2 views");
  }
  if (!(cfg.depth_inlier_threshold > 0.0)) {
    throw Error("detect_planes: depth inlier threshold must be positive");
  }

  std::vector<Camera> cameras;
  cameras.reserve(scene.views.size());
  for (const SceneFile::View& v : scene.views) cameras.emplace_back(v.camera);

  std::map<int, const SceneFile::Track*> track_by_id;
  for (const SceneFile::Track& t : scene.tracks) track_by_id[t.id] = &t;

  std::vector<SceneFile::DepthPoint> remaining = scene.depth_points;
  std::vector<DetectedPlane> planes;

  for (int p = 0; p < cfg.num_planes; ++p) {
    if (remaining.size() < 3) {
      if (log) log->push_back("plane " + std::to_string(p) +
                              ": fewer than 3 depth points remain");
      break;
    }
    std::vector<Vec3> cloud;
    cloud.reserve(remaining.size());
    for (const auto& d : remaining) cloud.push_back(d.xyz);

    DetectedPlane rough;
    try {
      rough = ransac_plane(cloud, cfg.depth_inlier_threshold,
                           cfg.ransac_iterations, split_seed(seed, 2 * p));
    } catch (const Error& e) {
      if (log) log->push_back("plane " + std::to_string(p) + ": " + e.what());
      break;
    }

    // Tracks whose depth hypothesis joined the consensus.
    std::vector<int> candidate_ids;
    for (int idx : rough.member_track_ids) {
      candidate_ids.push_back(remaining[idx].track_id);
    }

    // Sampson gate, then plane-free triangulation of the survivors.
    std::vector<int> gated_ids;
    std::vector<Vec3> triangulated;
    for (int id : candidate_ids) {
      const auto it = track_by_id.find(id);
      if (it == track_by_id.end()) continue;
      const SceneFile::Track& track = *it->second;
      try {
        if (!detail::sampson_gated(cameras, track, cfg.sampson_gate_px,
                                   cfg.sampson_all_pairs)) {
          continue;
        }
        std::vector<int> views;
        const ObservationTuple u = detail::track_observations(track, &views);
        std::vector<Camera> cams;
        for (int v : views) cams.push_back(cameras[v]);
        const TriangulationResult r = triangulate_unconstrained(cams, u);
        gated_ids.push_back(id);
        triangulated.push_back(r.world_point.euclidean());
      } catch (const Error&) {
        continue;  // per-track failure: the track simply drops out
      }
    }

    // Consume the depth points claimed by this plane regardless of support.
    std::vector<SceneFile::DepthPoint> next;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      bool consumed = false;
      for (int idx : rough.member_track_ids) {
        if (static_cast<std::size_t>(idx) == i) consumed = true;
      }
      if (!consumed) next.push_back(remaining[i]);
    }
    remaining.swap(next);

    if (static_cast<int>(gated_ids.size()) < 3) {
      if (log) log->push_back("plane " + std::to_string(p) +
                              ": insufficient gated tracks");
      continue;
    }

    DetectedPlane refit;
    try {
      refit = ransac_plane(triangulated, cfg.depth_inlier_threshold,
                           cfg.ransac_iterations, split_seed(seed, 2 * p + 1));
    } catch (const Error& e) {
      if (log) log->push_back("plane " + std::to_string(p) + ": " + e.what());
      continue;
    }

    DetectedPlane out{refit.plane, {}, cfg.depth_inlier_threshold, 0};
    for (int idx : refit.member_track_ids) {
      out.member_track_ids.push_back(gated_ids[idx]);
    }
    std::sort(out.member_track_ids.begin(), out.member_track_ids.end());
    out.support = static_cast<int>(out.member_track_ids.size());
    if (out.support < cfg.min_support) {
      if (log) log->push_back("plane " + std::to_string(p) +
                              ": support " + std::to_string(out.support) +
                              " below minimum");
      continue;
    }
    planes.push_back(std::move(out));
  }
  return planes;
}

struct PipelineConfig {
  PlaneDetectionConfig detection;
  double threshold_px = 5.0;  // hybrid / constrained fallback threshold
  bool run_uc = true;
  bool run_c = true;
  bool run_h = true;
  PathTrackerConfig tracker;
};

struct PipelineRow {
  int window = 0;
  int plane = 0;
  int track_id = 0;
  std::string strategy;       // requested strategy: uc, c, h
  double e_tr = std::numeric_limits<double>::quiet_NaN();
  double max_reprojection_px = std::numeric_limits<double>::quiet_NaN();
  std::string strategy_used;  // UC, C, H-kept-C, H-fell-back, failed
};

// Sliding-window experimental pipeline: detect planes per window of m
// consecutive views, triangulate every member track with the requested
// strategies, and score against ground truth where available.
inline std::vector<PipelineRow> run_pipeline(const SceneFile& scene,
                                             std::size_t m,
                                             const PipelineConfig& cfg,
                                             std::uint64_t seed) {
  if (scene.views.size() < m || m < 2) {
    throw InsufficientInput("run_pipeline: not enough views for the window");
  }

  std::vector<PipelineRow> rows;
  const int windows = static_cast<int>(scene.views.size() - m) + 1;
  for (int w = 0; w < windows; ++w) {
    // Window sub-scene: tracks fully visible in all m views, re-indexed.
    SceneFile window_scene;
    for (std::size_t k = 0; k < m; ++k) {
      window_scene.views.push_back(scene.views[w + k]);
    }
    for (const SceneFile::Track& t : scene.tracks) {
      SceneFile::Track local;
      local.id = t.id;
      for (std::size_t k = 0; k < m; ++k) {
        for (const SceneFile::Observation& o : t.observations) {
          if (o.view_index == w + static_cast<int>(k)) {
            local.observations.push_back(
                SceneFile::Observation{static_cast<int>(k), o.x, o.y});
          }
        }
      }
      if (local.observations.size() == m) {
        window_scene.tracks.push_back(std::move(local));
      }
    }
    for (const SceneFile::DepthPoint& d : scene.depth_points) {
      for (const SceneFile::Track& t : window_scene.tracks) {
        if (t.id == d.track_id) {
          window_scene.depth_points.push_back(d);
          break;
        }
      }
    }
    if (window_scene.depth_points.size() < 3) continue;

    std::vector<DetectedPlane> planes;
    try {
      planes = detect_planes(window_scene, cfg.detection, split_seed(seed, w));
    } catch (const Error&) {
      continue;
    }

    std::vector<Camera> cameras;
    for (const SceneFile::View& v : window_scene.views) {
      cameras.emplace_back(v.camera);
    }

    for (std::size_t pi = 0; pi < planes.size(); ++pi) {
      const DetectedPlane& dp = planes[pi];
      std::optional<CameraRig> rig;
      try {
        rig.emplace(cameras, make_chart(dp.plane));
      } catch (const Error&) {
        continue;
      }

      for (int track_id : dp.member_track_ids) {
        const SceneFile::Track* track = nullptr;
        for (const SceneFile::Track& t : window_scene.tracks) {
          if (t.id == track_id) track = &t;
        }
        if (!track) continue;
        ObservationTuple u(m);
        for (const SceneFile::Observation& o : track->observations) {
          u[o.view_index] = Vec2(o.x, o.y);
        }
        const SceneFile::Point3D* gt = scene.ground_truth(track_id);

        const auto emit = [&](const std::string& name, auto&& run) {
          PipelineRow row;
          row.window = w;
          row.plane = static_cast<int>(pi);
          row.track_id = track_id;
          row.strategy = name;
          try {
            const TriangulationResult r = run();
            row.max_reprojection_px = r.max_reprojection_error();
            row.strategy_used = to_string(r.strategy_used);
            if (gt) {
              row.e_tr = (r.world_point.euclidean() - gt->xyz).norm();
            }
          } catch (const Error&) {
            row.strategy_used = "failed";
          }
          rows.push_back(row);
        };

        if (cfg.run_uc) {
          emit("uc", [&] { return triangulate_unconstrained(*rig, u); });
        }
        if (cfg.run_c) {
          emit("c", [&] {
            return triangulate_constrained_auto(*rig, u, cfg.tracker,
                                                cfg.threshold_px);
          });
        }
        if (cfg.run_h) {
          emit("h", [&] {
            return triangulate_hybrid(*rig, u, cfg.threshold_px, cfg.tracker);
          });
        }
      }
    }
  }
  return rows;
}

}  // namespace ptri
