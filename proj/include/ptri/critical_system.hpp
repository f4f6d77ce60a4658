#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ptri/objective.hpp"
#include "ptri/polynomial.hpp"
#include "ptri/types.hpp"

namespace ptri {

// The cleared critical equations g_a = g_b = 0 of the reprojection objective,
// together with the linear denominator factors whose zero loci were cleared.
// Off those loci, g_a equals df/da times prod_j d_j^3 up to the stored
// normalization scale (same for b).
class CriticalSystem {
 public:
  CriticalSystem(BivariatePolynomial g_a, BivariatePolynomial g_b,
                 std::vector<LinearForm> denominator_factors,
                 double scale_a = 1.0, double scale_b = 1.0)
      : g_a_(std::move(g_a)),
        g_b_(std::move(g_b)),
        denominators_(std::move(denominator_factors)),
        scale_a_(scale_a),
        scale_b_(scale_b) {
    da_ga_ = g_a_.derivative_a();
    db_ga_ = g_a_.derivative_b();
    da_gb_ = g_b_.derivative_a();
    db_gb_ = g_b_.derivative_b();
  }

  // The objective whose critical equations these are. When present it serves
  // as a root certificate: the rational gradient is evaluated term by term
  // and is immune to the cancellation that plagues the cleared polynomials
  // close to the denominator lines.
  void attach_gradient_oracle(Objective obj) { oracle_ = std::move(obj); }
  bool has_gradient_oracle() const { return oracle_.has_value(); }

  // max(|df/da|, |df/db|) of the underlying rational objective.
  double derivative_error(Complex a, Complex b) const {
    return oracle_->derivative_error(a, b);
  }

  // Newton on the rational gradient system from an approximate root.
  Objective::CriticalRefinement refine_critical_point(
      Complex a, Complex b, int max_iterations = 40) const {
    return oracle_->refine_critical_point(a, b, max_iterations);
  }

  const BivariatePolynomial& g_a() const { return g_a_; }
  const BivariatePolynomial& g_b() const { return g_b_; }
  const std::vector<LinearForm>& denominator_factors() const {
    return denominators_;
  }

  // Divisors applied to the raw cleared polynomials during normalization.
  double scale_a() const { return scale_a_; }
  double scale_b() const { return scale_b_; }

  int degree_a() const { return g_a_.total_degree(); }
  int degree_b() const { return g_b_.total_degree(); }

  std::pair<Complex, Complex> eval(Complex a, Complex b) const {
    return {g_a_.eval(a, b), g_b_.eval(a, b)};
  }

  // Jacobian [[d ga/da, d ga/db], [d gb/da, d gb/db]].
  Eigen::Matrix2cd jacobian(Complex a, Complex b) const {
    Eigen::Matrix2cd j;
    j(0, 0) = da_ga_.eval(a, b);
    j(0, 1) = db_ga_.eval(a, b);
    j(1, 0) = da_gb_.eval(a, b);
    j(1, 1) = db_gb_.eval(a, b);
    return j;
  }

  // Smallest normalized denominator magnitude at z; 1 when there are none.
  double min_denominator(Complex a, Complex b) const {
    double best = 1.0;
    bool first = true;
    for (const LinearForm& d : denominators_) {
      const double norm = std::sqrt(d.ca * d.ca + d.cb * d.cb + d.c1 * d.c1);
      const double scale =
          norm * std::sqrt(1.0 + std::norm(a) + std::norm(b));
      const double v = std::abs(d.eval(a, b)) / scale;
      best = first ? v : std::min(best, v);
      first = false;
    }
    return best;
  }

 private:
  BivariatePolynomial g_a_;
  BivariatePolynomial g_b_;
  BivariatePolynomial da_ga_, db_ga_, da_gb_, db_gb_;
  std::vector<LinearForm> denominators_;
  double scale_a_;
  double scale_b_;
  std::optional<Objective> oracle_;
};

// Builds the cleared critical system symbolically. Each residual term of f
// is N_j / d_j^2 with N_j of degree <= 2 and d_j linear (constant for the
// identity first view of the standard chart), so
//   df/da = sum_j (dN_j/da * d_j - 2 N_j * dd_j/da) / d_j^3,
// and multiplying through by prod_j d_j^3 clears every term. Both cleared
// polynomials are normalized by their largest coefficient magnitude.
inline CriticalSystem build_critical_system(const Objective& obj) {
  const std::size_t m = obj.view_count();
  const ObservationTuple& u = obj.observations();

  struct Term {
    BivariatePolynomial numerator;    // N_j
    BivariatePolynomial denominator;  // d_j
    bool trivial;                     // constant denominator, nothing to clear
  };
  std::vector<Term> terms;
  terms.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto n1 = obj.numerator_x(j).to_polynomial();
    const auto n2 = obj.numerator_y(j).to_polynomial();
    const auto d = obj.denominator(j).to_polynomial();
    const auto rx = n1 - d * Complex(u[j][0], 0.0);
    const auto ry = n2 - d * Complex(u[j][1], 0.0);
    terms.push_back({rx * rx + ry * ry, d, obj.trivial_denominator(j)});
  }

  auto cleared = [&](auto deriv) {
    BivariatePolynomial sum;
    for (std::size_t j = 0; j < m; ++j) {
      BivariatePolynomial bracket =
          deriv(terms[j].numerator) * terms[j].denominator -
          terms[j].numerator * deriv(terms[j].denominator);
      // dN*d - 2N*dd; the extra -N*dd comes in twice.
      bracket = bracket - terms[j].numerator * deriv(terms[j].denominator);
      if (terms[j].trivial) {
        // Constant denominator: divide the term through exactly instead of
        // clearing it.
        const double c = obj.denominator(j).c1;
        bracket = bracket * Complex(1.0 / (c * c * c), 0.0);
      }
      for (std::size_t k = 0; k < m; ++k) {
        if (k == j || terms[k].trivial) continue;
        const auto& d = terms[k].denominator;
        bracket = bracket * d * d * d;
      }
      sum = sum + bracket;
    }
    return sum;
  };

  BivariatePolynomial g_a =
      cleared([](const BivariatePolynomial& p) { return p.derivative_a(); });
  BivariatePolynomial g_b =
      cleared([](const BivariatePolynomial& p) { return p.derivative_b(); });
  const double scale_a = g_a.normalize();
  const double scale_b = g_b.normalize();

  std::vector<LinearForm> denominators;
  for (std::size_t j = 0; j < m; ++j) {
    if (!obj.trivial_denominator(j)) {
      denominators.push_back(obj.denominator(j));
    }
  }
  CriticalSystem system(std::move(g_a), std::move(g_b), std::move(denominators),
                        scale_a, scale_b);
  system.attach_gradient_oracle(obj);
  return system;
}

}  // namespace ptri
