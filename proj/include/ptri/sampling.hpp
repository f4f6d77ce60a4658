#pragma once

#include <vector>

#include "ptri/errors.hpp"
#include "ptri/geometry.hpp"
#include "ptri/objective.hpp"
#include "ptri/types.hpp"

namespace ptri {

// Random generic instances: i.i.d. uniform [-1, 1] entries with rejection on
// the rig genericity checks (rank, distinct centers, centers off the plane).

inline Mat34 random_camera_matrix(Rng& rng) {
  Mat34 c;
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 4; ++k) c(r, k) = rng.uniform(-1.0, 1.0);
  }
  return c;
}

inline Plane random_plane(Rng& rng) {
  while (true) {
    Vec4 pi;
    for (int i = 0; i < 4; ++i) pi[i] = rng.uniform(-1.0, 1.0);
    if (pi.norm() > 0.1) return Plane(pi / pi.norm());
  }
}

inline CameraRig random_rig(std::size_t m, Rng& rng, int max_attempts = 256) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    try {
      std::vector<Camera> cameras;
      cameras.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        cameras.emplace_back(random_camera_matrix(rng));
      }
      const Plane plane = random_plane(rng);
      CameraRig rig(std::move(cameras), make_chart(plane));
      build_homographies(rig);  // rejects centers too close to the plane
      return rig;
    } catch (const Error&) {
      continue;
    }
  }
  throw GenericitySamplingFailed(
      "random_rig: no generic arrangement found within the attempt budget");
}

inline ObservationTuple random_observations(std::size_t m, Rng& rng,
                                            double lo = -1.0,
                                            double hi = 1.0) {
  ObservationTuple u(m);
  for (std::size_t j = 0; j < m; ++j) {
    u[j] = Vec2(rng.uniform(lo, hi), rng.uniform(lo, hi));
  }
  return u;
}

}  // namespace ptri
