#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ptri/errors.hpp"
#include "ptri/types.hpp"

namespace ptri {

// Homogeneous point of 3-space. Equality is projective: coordinates are
// compared after normalizing by the largest-magnitude entry.
class ProjectivePoint3 {
 public:
  ProjectivePoint3() : coords_(Vec4::Zero()) { coords_[3] = 1.0; }

  explicit ProjectivePoint3(const Vec4& coords) : coords_(coords) {
    if (coords_.lpNorm<Eigen::Infinity>() == 0.0) {
      throw Error("ProjectivePoint3: all coordinates zero");
    }
  }

  ProjectivePoint3(double x, double y, double z, double w)
      : ProjectivePoint3(Vec4(x, y, z, w)) {}

  const Vec4& coords() const { return coords_; }

  // Scale-normalized representative: largest-magnitude coordinate becomes 1
  // (sign preserved on the remaining entries).
  Vec4 normalized() const {
    int idx;
    coords_.cwiseAbs().maxCoeff(&idx);
    return coords_ / coords_[idx];
  }

  // Euclidean representative (x, y, z) / w. Caller must know w != 0.
  Vec3 euclidean() const {
    if (std::abs(coords_[3]) <=
        tol::kDehomogenize * coords_.lpNorm<Eigen::Infinity>()) {
      throw Error("ProjectivePoint3: point at infinity has no euclidean form");
    }
    return coords_.head<3>() / coords_[3];
  }

  bool is_approx(const ProjectivePoint3& other, double eps = 1e-10) const {
    return projective_distance(other) < eps;
  }

  // Norm of the difference of scale-normalized representatives, made
  // sign-insensitive.
  double projective_distance(const ProjectivePoint3& other) const {
    const Vec4 a = coords_ / coords_.norm();
    const Vec4 b = other.coords_ / other.coords_.norm();
    return std::min((a - b).norm(), (a + b).norm());
  }

 private:
  Vec4 coords_;
};

// Homogeneous image point.
class ImagePoint {
 public:
  explicit ImagePoint(const Vec3& coords) : coords_(coords) {
    if (coords_.lpNorm<Eigen::Infinity>() == 0.0) {
      throw Error("ImagePoint: all coordinates zero");
    }
  }

  ImagePoint(double x, double y, double w) : ImagePoint(Vec3(x, y, w)) {}

  const Vec3& coords() const { return coords_; }

  bool has_affine() const {
    return std::abs(coords_[2]) >
           tol::kDehomogenize * coords_.lpNorm<Eigen::Infinity>();
  }

  Vec2 affine() const {
    if (!has_affine()) {
      throw Error("ImagePoint: point at infinity has no affine coordinates");
    }
    return coords_.head<2>() / coords_[2];
  }

 private:
  Vec3 coords_;
};

// Full-rank 3x4 projection matrix with its distinguished center (the kernel).
class Camera {
 public:
  explicit Camera(const Mat34& matrix) : matrix_(matrix) {
    Eigen::JacobiSVD<Mat34> svd(matrix,
                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv[2] <= tol::kRank * sv[0]) {
      throw Error("Camera: projection matrix is rank deficient");
    }
    center_ = ProjectivePoint3(Vec4(svd.matrixV().col(3)));
  }

  const Mat34& matrix() const { return matrix_; }
  const ProjectivePoint3& center() const { return center_; }

 private:
  Mat34 matrix_;
  ProjectivePoint3 center_;
};

// Plane as a homogeneous covector; X lies on the plane iff pi . X = 0.
class Plane {
 public:
  explicit Plane(const Vec4& pi) : pi_(pi) {
    if (pi_.lpNorm<Eigen::Infinity>() == 0.0) {
      throw Error("Plane: all coordinates zero");
    }
  }

  Plane(double a, double b, double c, double d) : Plane(Vec4(a, b, c, d)) {}

  const Vec4& pi() const { return pi_; }

  // Normalized incidence residual |pi . X| / (|pi| |X|).
  double incidence(const ProjectivePoint3& x) const {
    return std::abs(pi_.dot(x.coords())) / (pi_.norm() * x.coords().norm());
  }

  bool contains(const ProjectivePoint3& x,
                double eps = tol::kPlaneIncidence) const {
    return incidence(x) < eps;
  }

 private:
  Vec4 pi_;
};

// Plane together with a rank-3 basis U of its point span: y in P^2 maps to
// the plane point U y.
struct PlaneChart {
  Plane plane;
  Mat43 basis;

  ProjectivePoint3 point(double a, double b) const {
    return ProjectivePoint3(Vec4(basis * Vec3(a, b, 1.0)));
  }
};

// Deterministic orthonormal kernel basis of pi^T: project the standard basis
// vectors other than the pivot (largest |pi| entry) onto the kernel and
// Gram-Schmidt them in index order.
inline PlaneChart make_chart(const Plane& plane) {
  const Vec4 pi = plane.pi() / plane.pi().norm();
  int pivot;
  pi.cwiseAbs().maxCoeff(&pivot);

  Mat43 basis;
  int col = 0;
  for (int i = 0; i < 4; ++i) {
    if (i == pivot) continue;
    Vec4 v = Vec4::Unit(i) - pi * pi[i];
    for (int k = 0; k < col; ++k) {
      v -= basis.col(k) * basis.col(k).dot(v);
    }
    basis.col(col++) = v / v.norm();
  }
  return PlaneChart{plane, basis};
}

// Ordered camera arrangement anchored to a plane chart. Validates that the
// centers are pairwise distinct and that none lies on the plane.
struct CameraRig {
  std::vector<Camera> cameras;
  PlaneChart chart;

  CameraRig(std::vector<Camera> cams, PlaneChart plane_chart)
      : cameras(std::move(cams)), chart(std::move(plane_chart)) {
    if (cameras.size() < 2) {
      throw Error("CameraRig: at least two cameras required");
    }
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      if (chart.plane.incidence(cameras[i].center()) <= tol::kGenericity) {
        throw Error("CameraRig: camera center " + std::to_string(i) +
                    " lies on the anchor plane");
      }
      for (std::size_t j = i + 1; j < cameras.size(); ++j) {
        if (cameras[i].center().projective_distance(cameras[j].center()) <=
            tol::kGenericity) {
          throw Error("CameraRig: coincident camera centers " +
                      std::to_string(i) + ", " + std::to_string(j));
        }
      }
    }
  }

  std::size_t view_count() const { return cameras.size(); }
};

// Per-view chart maps A_i = C_i U and the induced transfer homographies
// H_ji = A_j A_i^{-1}.
class HomographySet {
 public:
  explicit HomographySet(std::vector<Mat3> a) : a_(std::move(a)) {
    inverses_.reserve(a_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) {
      const Mat3& ai = a_[i];
      const double det = ai.determinant();
      const double scale = ai.norm();
      if (std::abs(det) <= tol::kRank * scale * scale * scale) {
        throw NearSingularHomography(
            "HomographySet: A_" + std::to_string(i) +
            " is near singular (camera center close to the plane)");
      }
      inverses_.push_back(ai.inverse());  // closed-form adjugate at 3x3
    }
  }

  std::size_t view_count() const { return a_.size(); }
  const Mat3& a(std::size_t i) const { return a_[i]; }

  // H_ji transfers view-i image points to view j.
  Mat3 transfer(std::size_t j, std::size_t i) const {
    return a_[j] * inverses_[i];
  }

 private:
  std::vector<Mat3> a_;
  std::vector<Mat3> inverses_;
};

inline HomographySet build_homographies(const CameraRig& rig) {
  std::vector<Mat3> a;
  a.reserve(rig.cameras.size());
  for (const Camera& cam : rig.cameras) {
    a.push_back(cam.matrix() * rig.chart.basis);
  }
  return HomographySet(std::move(a));
}

inline ImagePoint project(const Camera& camera, const ProjectivePoint3& x) {
  const Vec3 y = camera.matrix() * x.coords();
  if (y.norm() <=
      tol::kGenericity * camera.matrix().norm() * x.coords().norm()) {
    throw CenterProjection("project: point coincides with the camera center");
  }
  return ImagePoint(y);
}

// Intersects the back-projected line of x with the plane: the kernel of the
// 3x4 system {two independent rows of [x]_x C, pi^T}. Throws LineInPlane when
// the system drops rank (the whole line lies in the plane).
inline ProjectivePoint3 backproject_to_plane(const Camera& camera,
                                             const ImagePoint& x,
                                             const Plane& plane) {
  const Vec3 xh = x.coords() / x.coords().norm();
  const Mat34& c = camera.matrix();

  // [x]_x C has rank 2; drop the cross-product row paired with the
  // largest-magnitude coordinate of x.
  Eigen::Matrix<double, 3, 4> cross;
  cross.row(0) = xh[1] * c.row(2) - xh[2] * c.row(1);
  cross.row(1) = xh[2] * c.row(0) - xh[0] * c.row(2);
  cross.row(2) = xh[0] * c.row(1) - xh[1] * c.row(0);
  int drop;
  xh.cwiseAbs().maxCoeff(&drop);

  Eigen::Matrix<double, 3, 4> system;
  int row = 0;
  for (int i = 0; i < 3; ++i) {
    if (i == drop) continue;
    system.row(row++) = cross.row(i) / std::max(cross.row(i).norm(), 1e-300);
  }
  system.row(2) = plane.pi() / plane.pi().norm();

  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(
      system, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[2] <= tol::kRank * sv[0]) {
    throw LineInPlane("backproject_to_plane: back-projected line lies in the plane");
  }
  return ProjectivePoint3(Vec4(svd.matrixV().col(3)));
}

}  // namespace ptri
