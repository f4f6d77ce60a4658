#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptri/errors.hpp"
#include "ptri/types.hpp"

namespace ptri {

// File-based scene description: cameras, image tracks, optional ground-truth
// points, optional anchor plane, and optional per-track 3D depth hypotheses
// used for plane grouping.
struct SceneFile {
  struct View {
    Mat34 camera;  // stored row-major as 12 reals
  };
  struct Observation {
    int view_index = 0;
    double x = 0.0;
    double y = 0.0;
  };
  struct Track {
    int id = 0;
    std::vector<Observation> observations;
  };
  struct Point3D {
    int id = 0;
    Vec3 xyz = Vec3::Zero();
  };
  struct DepthPoint {
    int track_id = 0;
    Vec3 xyz = Vec3::Zero();
  };

  std::vector<View> views;
  std::optional<Vec4> plane;
  std::vector<Point3D> points3d;
  std::vector<Track> tracks;
  std::vector<DepthPoint> depth_points;

  const Point3D* ground_truth(int track_id) const {
    for (const Point3D& p : points3d) {
      if (p.id == track_id) return &p;
    }
    return nullptr;
  }
};

inline void validate_scene(const SceneFile& scene) {
  for (const SceneFile::Track& t : scene.tracks) {
    if (t.observations.size() < 2) {
      throw SceneParseError("scene: track " + std::to_string(t.id) +
                            " has fewer than 2 observations");
    }
    for (const SceneFile::Observation& o : t.observations) {
      if (o.view_index < 0 ||
          o.view_index >= static_cast<int>(scene.views.size())) {
        throw SceneParseError("scene: track " + std::to_string(t.id) +
                              " references view " +
                              std::to_string(o.view_index));
      }
    }
  }
}

inline SceneFile parse_scene(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SceneParseError(std::string("scene: invalid JSON: ") + e.what());
  }

  SceneFile scene;
  try {
    for (const auto& v : j.at("views")) {
      const auto& cam = v.at("camera");
      if (cam.size() != 12) {
        throw SceneParseError("scene: camera must have 12 entries");
      }
      SceneFile::View view;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
          view.camera(r, c) = cam.at(4 * r + c).get<double>();
        }
      }
      scene.views.push_back(view);
    }
    if (j.contains("plane")) {
      const auto& p = j.at("plane");
      if (p.size() != 4) throw SceneParseError("scene: plane must have 4 entries");
      scene.plane = Vec4(p.at(0).get<double>(), p.at(1).get<double>(),
                         p.at(2).get<double>(), p.at(3).get<double>());
    }
    if (j.contains("points3d")) {
      for (const auto& p : j.at("points3d")) {
        SceneFile::Point3D pt;
        pt.id = p.at("id").get<int>();
        const auto& xyz = p.at("xyz");
        pt.xyz = Vec3(xyz.at(0).get<double>(), xyz.at(1).get<double>(),
                      xyz.at(2).get<double>());
        scene.points3d.push_back(pt);
      }
    }
    for (const auto& t : j.at("tracks")) {
      SceneFile::Track track;
      track.id = t.at("id").get<int>();
      for (const auto& o : t.at("observations")) {
        track.observations.push_back(
            SceneFile::Observation{o.at("view_index").get<int>(),
                                   o.at("x").get<double>(),
                                   o.at("y").get<double>()});
      }
      scene.tracks.push_back(std::move(track));
    }
    if (j.contains("depth_points")) {
      for (const auto& d : j.at("depth_points")) {
        SceneFile::DepthPoint dp;
        dp.track_id = d.at("track_id").get<int>();
        const auto& xyz = d.at("xyz");
        dp.xyz = Vec3(xyz.at(0).get<double>(), xyz.at(1).get<double>(),
                      xyz.at(2).get<double>());
        scene.depth_points.push_back(dp);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SceneParseError(std::string("scene: missing or malformed field: ") +
                          e.what());
  }
  validate_scene(scene);
  return scene;
}

inline std::string serialize_scene(const SceneFile& scene) {
  nlohmann::json j;
  j["views"] = nlohmann::json::array();
  for (const SceneFile::View& v : scene.views) {
    nlohmann::json cam = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) cam.push_back(v.camera(r, c));
    }
    j["views"].push_back({{"camera", cam}});
  }
  if (scene.plane) {
    j["plane"] = { (*scene.plane)[0], (*scene.plane)[1], (*scene.plane)[2],
                   (*scene.plane)[3] };
  }
  if (!scene.points3d.empty()) {
    j["points3d"] = nlohmann::json::array();
    for (const SceneFile::Point3D& p : scene.points3d) {
      j["points3d"].push_back(
          {{"id", p.id}, {"xyz", {p.xyz[0], p.xyz[1], p.xyz[2]}}});
    }
  }
  j["tracks"] = nlohmann::json::array();
  for (const SceneFile::Track& t : scene.tracks) {
    nlohmann::json obs = nlohmann::json::array();
    for (const SceneFile::Observation& o : t.observations) {
      obs.push_back({{"view_index", o.view_index}, {"x", o.x}, {"y", o.y}});
    }
    j["tracks"].push_back({{"id", t.id}, {"observations", obs}});
  }
  if (!scene.depth_points.empty()) {
    j["depth_points"] = nlohmann::json::array();
    for (const SceneFile::DepthPoint& d : scene.depth_points) {
      j["depth_points"].push_back(
          {{"track_id", d.track_id}, {"xyz", {d.xyz[0], d.xyz[1], d.xyz[2]}}});
    }
  }
  return j.dump(2) + "\n";
}

inline SceneFile load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneParseError("scene: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str());
}

inline void save_scene(const SceneFile& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("scene: cannot write " + path);
  out << serialize_scene(scene);
}

}  // namespace ptri
