#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "gapar/error.hpp"

namespace gapar {

// Neumaier-compensated running sum.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar v) {
    const Scalar t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_{0};
  Scalar comp_{0};
};

// Dense univariate polynomial, coefficients stored in ascending powers.
template <typename Scalar>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Scalar> ascending) : c_(std::move(ascending)) {}
  Polynomial(std::initializer_list<Scalar> ascending) : c_(ascending) {}

  static Polynomial constant(Scalar v) { return Polynomial({v}); }
  static Polynomial monomial(std::size_t power, Scalar v = Scalar(1)) {
    std::vector<Scalar> c(power + 1, Scalar(0));
    c[power] = v;
    return Polynomial(std::move(c));
  }

  // Nominal degree: number of stored coefficients minus one (zero
  // coefficients at the top are kept so reciprocals stay well defined).
  std::ptrdiff_t degree() const { return static_cast<std::ptrdiff_t>(c_.size()) - 1; }
  bool empty() const { return c_.empty(); }
  const std::vector<Scalar>& coeffs() const { return c_; }
  Scalar operator[](std::size_t i) const { return i < c_.size() ? c_[i] : Scalar(0); }

  template <typename T>
  T operator()(const T& z) const {
    T acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + T(*it);
    return acc;
  }

  // z^deg p(1/z)
  Polynomial reciprocal() const { return Polynomial(std::vector<Scalar>(c_.rbegin(), c_.rend())); }

  Polynomial derivative() const {
    if (c_.size() <= 1) return constant(Scalar(0));
    std::vector<Scalar> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = Scalar(i) * c_[i];
    return Polynomial(std::move(d));
  }

  // p(z) -> z p(z)
  Polynomial shifted() const {
    std::vector<Scalar> s(c_.size() + 1, Scalar(0));
    std::copy(c_.begin(), c_.end(), s.begin() + 1);
    return Polynomial(std::move(s));
  }

  // p(inner(z)) by Horner's rule.
  Polynomial compose(const Polynomial& inner) const {
    Polynomial acc = constant(Scalar(0));
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * inner + constant(*it);
    return acc;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), Scalar(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), Scalar(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Polynomial& operator*=(Scalar s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, Scalar s) { return a *= s; }
  friend Polynomial operator*(Scalar s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return Polynomial();
    std::vector<Scalar> r(a.c_.size() + b.c_.size() - 1, Scalar(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(r));
  }

 private:
  std::vector<Scalar> c_;
};

// Power sums P_0..P_kmax of the roots of a monic polynomial, by Newton's
// identities on its coefficients. `monic` must have leading coefficient 1.
template <typename Scalar>
std::vector<Scalar> root_power_sums(const Polynomial<Scalar>& monic, std::size_t kmax) {
  const std::ptrdiff_t n = monic.degree();
  if (n < 1) throw InvalidInput("root_power_sums: degree must be >= 1");
  // z^n + e1 z^{n-1} + ... + en, with e_i = coefficient of z^{n-i}
  std::vector<Scalar> e(static_cast<std::size_t>(n) + 1);
  for (std::ptrdiff_t i = 0; i <= n; ++i) e[static_cast<std::size_t>(i)] = monic[static_cast<std::size_t>(n - i)];
  std::vector<Scalar> p(kmax + 1, Scalar(0));
  p[0] = Scalar(n);
  for (std::size_t k = 1; k <= kmax; ++k) {
    CompensatedSum<Scalar> acc;
    const std::size_t lim = std::min<std::size_t>(k - 1, static_cast<std::size_t>(n));
    for (std::size_t i = 1; i <= lim; ++i) acc.add(e[i] * p[k - i]);
    if (k <= static_cast<std::size_t>(n)) acc.add(Scalar(k) * e[k]);
    p[k] = -acc.value();
  }
  return p;
}

// Po(p, q) = sum over roots a_k of monic p of q(a_k).
template <typename Scalar>
Scalar root_sum(const Polynomial<Scalar>& monic, const Polynomial<Scalar>& q) {
  if (q.empty()) return Scalar(0);
  const auto ps = root_power_sums(monic, static_cast<std::size_t>(std::max<std::ptrdiff_t>(q.degree(), 0)));
  CompensatedSum<Scalar> acc;
  for (std::size_t j = 0; j < q.coeffs().size(); ++j) acc.add(q.coeffs()[j] * ps[j]);
  return acc.value();
}

// Sylvester matrix of p (nominal degree m) and q (nominal degree n); the
// first n rows carry p, the last m rows carry q.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sylvester_matrix(const Polynomial<Scalar>& p,
                                                                        const Polynomial<Scalar>& q) {
  const auto m = p.degree();
  const auto n = q.degree();
  if (m < 0 || n < 0) throw InvalidInput("sylvester_matrix: empty polynomial");
  const Eigen::Index size = m + n;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(size, size);
  for (Eigen::Index row = 0; row < n; ++row)
    for (Eigen::Index j = 0; j <= m; ++j) s(row, row + j) = p[static_cast<std::size_t>(m - j)];
  for (Eigen::Index row = 0; row < m; ++row)
    for (Eigen::Index j = 0; j <= n; ++j) s(n + row, row + j) = q[static_cast<std::size_t>(n - j)];
  return s;
}

// Res(p, q) as the Sylvester determinant. For monic p this equals the
// product of q over the roots of p.
template <typename Scalar>
Scalar resultant(const Polynomial<Scalar>& p, const Polynomial<Scalar>& q) {
  if (p.degree() == 0) return std::pow(p[0], static_cast<Scalar>(q.degree()));
  if (q.degree() == 0) return std::pow(q[0], static_cast<Scalar>(p.degree()));
  return sylvester_matrix(p, q).fullPivLu().determinant();
}

// Determinant of a small square matrix over a commutative ring by Laplace
// expansion along the first row. Intended for h <= 6.
template <typename Ring>
Ring laplace_determinant(const std::vector<std::vector<Ring>>& a, const Ring& zero, const Ring& one) {
  const std::size_t n = a.size();
  if (n == 0) return one;
  if (n == 1) return a[0][0];
  Ring det = zero;
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<std::vector<Ring>> minor;
    minor.reserve(n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Ring> row;
      row.reserve(n - 1);
      for (std::size_t c = 0; c < n; ++c)
        if (c != col) row.push_back(a[r][c]);
      minor.push_back(std::move(row));
    }
    Ring term = a[0][col] * laplace_determinant(minor, zero, one);
    if (col % 2 == 0) {
      det = det + term;
    } else {
      det = det - term;
    }
  }
  return det;
}

// S([s_1..s_h], t) as a polynomial in t: (1/h!) times the determinant of the
// Newton-identity matrix whose (i, j) entry for j <= i is s_{i-j+1} - t^{i-j+1}
// and whose superdiagonal is 1, 2, ..., h-1. With s the power sums of a
// multiset containing t, this is the degree-h elementary symmetric function of
// the multiset with t removed.
template <typename Scalar>
Polynomial<Scalar> symmetric_from_power_sums(const std::vector<Scalar>& s, std::ptrdiff_t h) {
  using Poly = Polynomial<Scalar>;
  if (h < 0) return Poly::constant(Scalar(0));
  if (h == 0) return Poly::constant(Scalar(1));
  if (static_cast<std::ptrdiff_t>(s.size()) < h) throw InvalidInput("symmetric_from_power_sums: too few power sums");
  const auto n = static_cast<std::size_t>(h);
  std::vector<std::vector<Poly>> m(n, std::vector<Poly>(n, Poly::constant(Scalar(0))));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const std::size_t k = i - j + 1;
      m[i][j] = Poly::constant(s[k - 1]) - Poly::monomial(k);
    }
    if (i + 1 < n) m[i][i + 1] = Poly::constant(Scalar(i + 1));
  }
  Poly det = laplace_determinant(m, Poly::constant(Scalar(0)), Poly::constant(Scalar(1)));
  Scalar fact(1);
  for (std::size_t i = 2; i <= n; ++i) fact *= Scalar(i);
  return det * (Scalar(1) / fact);
}

}  // namespace gapar
