#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "ptri/errors.hpp"
#include "ptri/types.hpp"

namespace ptri {

// Dense bivariate polynomial with complex coefficients, coeff(p, q) holding
// the monomial a^p b^q. Degrees stay tiny here (well under 20), so dense
// storage and straight convolution are the right tools.
class BivariatePolynomial {
 public:
  BivariatePolynomial() : c_(Eigen::MatrixXcd::Zero(1, 1)) {}

  explicit BivariatePolynomial(Eigen::MatrixXcd coeffs) : c_(std::move(coeffs)) {
    if (c_.rows() == 0 || c_.cols() == 0) {
      c_ = Eigen::MatrixXcd::Zero(1, 1);
    }
  }

  static BivariatePolynomial constant(Complex value) {
    Eigen::MatrixXcd c(1, 1);
    c(0, 0) = value;
    return BivariatePolynomial(std::move(c));
  }

  // ca * a + cb * b + c1
  static BivariatePolynomial linear(Complex ca, Complex cb, Complex c1) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2, 2);
    c(0, 0) = c1;
    c(1, 0) = ca;
    c(0, 1) = cb;
    return BivariatePolynomial(std::move(c));
  }

  const Eigen::MatrixXcd& coeffs() const { return c_; }

  Complex coeff(int p, int q) const {
    if (p < 0 || q < 0 || p >= c_.rows() || q >= c_.cols()) return {0.0, 0.0};
    return c_(p, q);
  }

  int total_degree() const {
    int deg = 0;
    for (int p = 0; p < c_.rows(); ++p) {
      for (int q = 0; q < c_.cols(); ++q) {
        if (std::abs(c_(p, q)) > 0.0) deg = std::max(deg, p + q);
      }
    }
    return deg;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (int p = 0; p < c_.rows(); ++p) {
      for (int q = 0; q < c_.cols(); ++q) {
        m = std::max(m, std::abs(c_(p, q)));
      }
    }
    return m;
  }

  BivariatePolynomial operator+(const BivariatePolynomial& o) const {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(
        std::max(c_.rows(), o.c_.rows()), std::max(c_.cols(), o.c_.cols()));
    c.topLeftCorner(c_.rows(), c_.cols()) = c_;
    c.topLeftCorner(o.c_.rows(), o.c_.cols()) += o.c_;
    return BivariatePolynomial(std::move(c));
  }

  BivariatePolynomial operator-(const BivariatePolynomial& o) const {
    return *this + (o * Complex(-1.0, 0.0));
  }

  BivariatePolynomial operator*(Complex s) const {
    return BivariatePolynomial(c_ * s);
  }

  BivariatePolynomial operator*(const BivariatePolynomial& o) const {
    Eigen::MatrixXcd c =
        Eigen::MatrixXcd::Zero(c_.rows() + o.c_.rows() - 1,
                               c_.cols() + o.c_.cols() - 1);
    for (int p = 0; p < c_.rows(); ++p) {
      for (int q = 0; q < c_.cols(); ++q) {
        const Complex v = c_(p, q);
        if (v == Complex(0.0, 0.0)) continue;
        c.block(p, q, o.c_.rows(), o.c_.cols()) += v * o.c_;
      }
    }
    return BivariatePolynomial(std::move(c));
  }

  BivariatePolynomial derivative_a() const {
    if (c_.rows() == 1) return BivariatePolynomial();
    Eigen::MatrixXcd c(c_.rows() - 1, c_.cols());
    for (int p = 1; p < c_.rows(); ++p) {
      c.row(p - 1) = static_cast<double>(p) * c_.row(p);
    }
    return BivariatePolynomial(std::move(c));
  }

  BivariatePolynomial derivative_b() const {
    if (c_.cols() == 1) return BivariatePolynomial();
    Eigen::MatrixXcd c(c_.rows(), c_.cols() - 1);
    for (int q = 1; q < c_.cols(); ++q) {
      c.col(q - 1) = static_cast<double>(q) * c_.col(q);
    }
    return BivariatePolynomial(std::move(c));
  }

  // Nested Horner: inner in b, outer in a.
  Complex eval(Complex a, Complex b) const {
    Complex acc{0.0, 0.0};
    for (int p = static_cast<int>(c_.rows()) - 1; p >= 0; --p) {
      Complex row{0.0, 0.0};
      for (int q = static_cast<int>(c_.cols()) - 1; q >= 0; --q) {
        row = row * b + c_(p, q);
      }
      acc = acc * a + row;
    }
    return acc;
  }

  double eval_real(double a, double b) const {
    return eval(Complex(a, 0.0), Complex(b, 0.0)).real();
  }

  // Sum of |c_pq| |a|^p |b|^q: the natural scale of an evaluation at (a, b),
  // used as the backward-error denominator.
  double eval_abs(double abs_a, double abs_b) const {
    double acc = 0.0;
    double pa = 1.0;
    for (int p = 0; p < c_.rows(); ++p) {
      double pb = pa;
      for (int q = 0; q < c_.cols(); ++q) {
        acc += std::abs(c_(p, q)) * pb;
        pb *= abs_b;
      }
      pa *= abs_a;
    }
    return acc;
  }

  // Divides by the largest coefficient magnitude; returns the divisor.
  double normalize() {
    const double m = max_abs_coeff();
    if (m > 0.0) c_ /= m;
    return m;
  }

 private:
  Eigen::MatrixXcd c_;
};

// Real linear form d(a, b) = ca * a + cb * b + c1, the per-view
// dehomogenization denominator.
struct LinearForm {
  double ca = 0.0;
  double cb = 0.0;
  double c1 = 1.0;

  double eval(double a, double b) const { return ca * a + cb * b + c1; }

  Complex eval(Complex a, Complex b) const { return ca * a + cb * b + c1; }

  BivariatePolynomial to_polynomial() const {
    return BivariatePolynomial::linear(ca, cb, c1);
  }
};

}  // namespace ptri
