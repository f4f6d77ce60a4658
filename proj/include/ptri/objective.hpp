#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ptri/errors.hpp"
#include "ptri/geometry.hpp"
#include "ptri/polynomial.hpp"
#include "ptri/types.hpp"

namespace ptri {

// Affine chart coordinates: the world point projects to (a, b, 1) in view 1.
struct ChartPoint {
  double a = 0.0;
  double b = 0.0;
};

// One affine observation per view, in pixels or normalized units.
using ObservationTuple = std::vector<Vec2>;

namespace detail {

inline void check_observations(const ObservationTuple& u, std::size_t views) {
  if (u.size() != views) {
    throw Error("ObservationTuple: expected " + std::to_string(views) +
                " observations, got " + std::to_string(u.size()));
  }
  for (const Vec2& p : u) {
    if (!p.allFinite()) throw Error("ObservationTuple: non-finite coordinate");
  }
}

}  // namespace detail

// Embeds a chart point into all m views: (a, b) in view 1, dehomogenized
// H_{j,1} (a, b, 1)^T elsewhere.
inline std::vector<Vec2> chart_embed(const HomographySet& h,
                                     const ChartPoint& p) {
  std::vector<Vec2> out;
  out.reserve(h.view_count());
  out.emplace_back(p.a, p.b);
  const Vec3 x1(p.a, p.b, 1.0);
  for (std::size_t j = 1; j < h.view_count(); ++j) {
    const Mat3 t = h.transfer(j, 0);
    const Vec3 xj = t * x1;
    if (std::abs(xj[2]) <= tol::kDehomogenize * t.row(2).norm() * x1.norm()) {
      throw ChartSingularity(static_cast<int>(j),
                             "chart_embed: view " + std::to_string(j) +
                                 " maps the point to the line at infinity");
    }
    out.emplace_back(xj[0] / xj[2], xj[1] / xj[2]);
  }
  return out;
}

// Squared reprojection error of the chart parameterization against a fixed
// observation tuple:
//   f(a, b) = sum_j |dehom(T_j (a, b, 1)) - u_j|^2,
// where T_1 is the identity in the standard view-1 chart (so the first term
// is |(a, b) - u_1|^2) but may be any invertible map in a rotated chart.
// Immutable after construction; evaluation is pure.
class Objective {
 public:
  Objective(const HomographySet& h, ObservationTuple u) : u_(std::move(u)) {
    detail::check_observations(u_, h.view_count());
    transfers_.reserve(h.view_count());
    transfers_.push_back(Mat3::Identity());
    for (std::size_t j = 1; j < h.view_count(); ++j) {
      // Frobenius normalization keeps denominator rows near unit scale.
      Mat3 t = h.transfer(j, 0);
      transfers_.push_back(t / t.norm());
    }
  }

  // Rotated chart: per-view maps T_j given explicitly, first one included.
  Objective(std::vector<Mat3> transfers, ObservationTuple u)
      : u_(std::move(u)) {
    detail::check_observations(u_, transfers.size());
    transfers_.reserve(transfers.size());
    for (Mat3& t : transfers) {
      transfers_.push_back(t / t.norm());
    }
  }

  std::size_t view_count() const { return transfers_.size(); }
  const ObservationTuple& observations() const { return u_; }
  const Mat3& transfer(std::size_t j) const { return transfers_[j]; }

  // Linear forms of view j (0-based): numerator rows and denominator.
  LinearForm numerator_x(std::size_t j) const {
    const Mat3& t = transfers_.at(j);
    return LinearForm{t(0, 0), t(0, 1), t(0, 2)};
  }
  LinearForm numerator_y(std::size_t j) const {
    const Mat3& t = transfers_.at(j);
    return LinearForm{t(1, 0), t(1, 1), t(1, 2)};
  }
  LinearForm denominator(std::size_t j) const {
    const Mat3& t = transfers_.at(j);
    return LinearForm{t(2, 0), t(2, 1), t(2, 2)};
  }

  // Views whose denominator is constant have no chart singularity.
  bool trivial_denominator(std::size_t j) const {
    const Mat3& t = transfers_.at(j);
    return t(2, 0) == 0.0 && t(2, 1) == 0.0;
  }

  bool in_domain(const ChartPoint& p) const {
    for (std::size_t j = 0; j < transfers_.size(); ++j) {
      if (trivial_denominator(j)) continue;
      if (std::abs(denominator(j).eval(p.a, p.b)) <= domain_epsilon(p)) {
        return false;
      }
    }
    return true;
  }

  double value(const ChartPoint& p) const {
    double f = 0.0;
    for (std::size_t j = 0; j < transfers_.size(); ++j) {
      const double d = denominator(j).eval(p.a, p.b);
      if (!trivial_denominator(j) && std::abs(d) <= domain_epsilon(p)) {
        throw ChartSingularity(static_cast<int>(j),
                               "objective: denominator of view " +
                                   std::to_string(j + 1) + " vanishes");
      }
      const double nx = numerator_x(j).eval(p.a, p.b);
      const double ny = numerator_y(j).eval(p.a, p.b);
      const Vec2 r(nx / d - u_[j][0], ny / d - u_[j][1]);
      f += r.squaredNorm();
    }
    return f;
  }

  // Analytic gradient by the quotient rule.
  std::pair<double, double> gradient(const ChartPoint& p) const {
    if (!in_domain(p)) {
      throw ChartSingularity(0, "objective: gradient at a chart singularity");
    }
    return gradient_impl<double>(p.a, p.b);
  }

  // Partials extended to complex arguments; used for the derivative-error
  // diagnostic at solver outputs.
  std::pair<Complex, Complex> gradient_complex(Complex a, Complex b) const {
    return gradient_impl<Complex>(a, b);
  }

  // max(|df/da|, |df/db|) at a (possibly complex) solution.
  double derivative_error(Complex a, Complex b) const {
    const auto [ga, gb] = gradient_impl<Complex>(a, b);
    return std::max(std::abs(ga), std::abs(gb));
  }

  // Complex Hessian of f by the quotient rule.
  Eigen::Matrix2cd hessian_complex(Complex a, Complex b) const {
    return hessian_impl<Complex>(a, b);
  }

  struct CriticalRefinement {
    Complex a, b;
    double last_step = 0.0;
    double moved = 0.0;
    bool converged = false;
  };

  // Newton iteration on the gradient system (df/da, df/db) = 0. The rational
  // formulation is evaluated term by term, so it stays well conditioned near
  // the dehomogenization lines where the cleared polynomials lose their
  // roots to coefficient rounding.
  CriticalRefinement refine_critical_point(Complex a, Complex b,
                                           int max_iterations = 40,
                                           double step_tolerance = 1e-13) const {
    CriticalRefinement out{a, b, 0.0, 0.0, false};
    const Complex a0 = a, b0 = b;
    for (int it = 0; it < max_iterations; ++it) {
      const auto [ga, gb] = gradient_impl<Complex>(out.a, out.b);
      const Eigen::Matrix2cd h = hessian_impl<Complex>(out.a, out.b);
      const Complex det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
      const double scale = std::max(
          {std::abs(h(0, 0)) * std::abs(h(1, 1)),
           std::abs(h(0, 1)) * std::abs(h(1, 0)), 1e-300});
      if (!(std::abs(det) > 1e-15 * scale)) break;
      const Complex da = (-ga * h(1, 1) + gb * h(0, 1)) / det;
      const Complex db = (-h(0, 0) * gb + h(1, 0) * ga) / det;
      out.a += da;
      out.b += db;
      out.last_step = std::hypot(std::abs(da), std::abs(db));
      const double znorm = 1.0 + std::max(std::abs(out.a), std::abs(out.b));
      if (!std::isfinite(out.last_step)) break;
      if (out.last_step <= step_tolerance * znorm) {
        out.converged = true;
        break;
      }
    }
    out.moved = std::isfinite(std::abs(out.a) + std::abs(out.b))
                    ? std::hypot(std::abs(out.a - a0), std::abs(out.b - b0))
                    : std::numeric_limits<double>::infinity();
    return out;
  }

 private:
  double domain_epsilon(const ChartPoint& p) const {
    return tol::kDehomogenize * std::sqrt(1.0 + p.a * p.a + p.b * p.b);
  }

  template <typename S>
  std::pair<S, S> gradient_impl(S a, S b) const {
    S ga = 0.0;
    S gb = 0.0;
    for (std::size_t j = 0; j < transfers_.size(); ++j) {
      const Mat3& t = transfers_[j];
      const S nx = t(0, 0) * a + t(0, 1) * b + t(0, 2);
      const S ny = t(1, 0) * a + t(1, 1) * b + t(1, 2);
      const S d = t(2, 0) * a + t(2, 1) * b + t(2, 2);
      const S rx = nx / d - u_[j][0];
      const S ry = ny / d - u_[j][1];
      const S d2 = d * d;
      ga += 2.0 * (rx * (t(0, 0) * d - nx * t(2, 0)) +
                   ry * (t(1, 0) * d - ny * t(2, 0))) /
            d2;
      gb += 2.0 * (rx * (t(0, 1) * d - nx * t(2, 1)) +
                   ry * (t(1, 1) * d - ny * t(2, 1))) /
            d2;
    }
    return {ga, gb};
  }

  // Hessian of the r^2 terms: 2 (grad r grad r^T + r Hess r), where for
  // r = n/d - u with linear n, d one has grad r[p] = (n_p d - n d_p) / d^2
  // and Hess r[p][q] = (n_p d_q - n_q d_p) / d^2 - 2 d_q (n_p d - n d_p) / d^3.
  template <typename S>
  Eigen::Matrix2<S> hessian_impl(S a, S b) const {
    Eigen::Matrix2<S> hess = Eigen::Matrix2<S>::Zero();
    for (std::size_t j = 0; j < transfers_.size(); ++j) {
      const Mat3& t = transfers_[j];
      const S d = t(2, 0) * a + t(2, 1) * b + t(2, 2);
      const S d2 = d * d;
      const S d3 = d2 * d;
      for (int row = 0; row < 2; ++row) {
        const S n = t(row, 0) * a + t(row, 1) * b + t(row, 2);
        const S r = n / d - u_[j][row];
        S grad_r[2];
        for (int p = 0; p < 2; ++p) {
          grad_r[p] = (t(row, p) * d - n * t(2, p)) / d2;
        }
        for (int p = 0; p < 2; ++p) {
          for (int q = 0; q < 2; ++q) {
            const double w = t(row, p) * t(2, q) - t(row, q) * t(2, p);
            const S hr =
                w / d2 - 2.0 * t(2, q) * (t(row, p) * d - n * t(2, p)) / d3;
            hess(p, q) += 2.0 * (grad_r[p] * grad_r[q] + r * hr);
          }
        }
      }
    }
    return hess;
  }

  std::vector<Mat3> transfers_;  // T_j, Frobenius-normalized; T_1 = I / |I|
  ObservationTuple u_;
};

}  // namespace ptri
