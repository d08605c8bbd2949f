#pragma once

// AR filters under the convention
//
//     x(n) + psi_0 + psi_1 x(n-1) + ... + psi_L x(n-L) = eps(n),
//     eps(n) ~ N(0, sigma^2),
//
// with characteristic polynomial z^L + psi_1 z^{L-1} + ... + psi_L. Every
// module of the library stores coefficients this way.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gapar/error.hpp"
#include "gapar/polynomial.hpp"
#include "gapar/random.hpp"

namespace gapar {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar = double>
struct ArFilter {
  Vector<Scalar> coeffs;  // psi_1 .. psi_L
  Scalar intercept{0};    // psi_0
  Scalar noise_variance{1};

  ArFilter() = default;
  explicit ArFilter(Vector<Scalar> c, Scalar psi0 = Scalar(0), Scalar sigma2 = Scalar(1))
      : coeffs(std::move(c)), intercept(psi0), noise_variance(sigma2) {}
  ArFilter(std::initializer_list<Scalar> c, Scalar psi0 = Scalar(0), Scalar sigma2 = Scalar(1))
      : coeffs(static_cast<Eigen::Index>(c.size())), intercept(psi0), noise_variance(sigma2) {
    std::copy(c.begin(), c.end(), coeffs.data());
  }

  Eigen::Index order() const { return coeffs.size(); }

  // Stationary mean -psi_0 / (1 + sum psi_l).
  Scalar mean() const {
    const Scalar denom = Scalar(1) + coeffs.sum();
    if (denom == Scalar(0)) throw InvalidInput("ArFilter::mean: 1 + sum(psi) is zero");
    return -intercept / denom;
  }
};

using ArFilterd = ArFilter<double>;

template <typename Scalar>
struct StationaryMoments {
  Scalar gamma0{0};     // process variance
  Vector<Scalar> rho;   // rho_1 .. rho_L
  Matrix<Scalar> cov;   // [gamma0 rho_{|i-j|}]
};

namespace detail {

template <typename Scalar>
void require_valid(const ArFilter<Scalar>& f, const char* where) {
  if (f.order() < 1) throw InvalidInput(std::string(where) + ": filter order must be >= 1");
  if (!f.coeffs.allFinite() || !std::isfinite(f.intercept))
    throw InvalidInput(std::string(where) + ": non-finite coefficient");
  if (!(f.noise_variance > Scalar(0)) || !std::isfinite(f.noise_variance))
    throw InvalidInput(std::string(where) + ": noise variance must be positive");
}

template <typename Scalar>
Vector<Scalar> padded(const Vector<Scalar>& v, Eigen::Index n) {
  Vector<Scalar> out = Vector<Scalar>::Zero(n);
  out.head(v.size()) = v;
  return out;
}

template <typename Scalar>
Scalar clamp_nonneg(Scalar d) {
  return d < Scalar(0) ? Scalar(0) : d;
}

}  // namespace detail

// z^L + psi_1 z^{L-1} + ... + psi_L, ascending coefficients.
template <typename Scalar>
Polynomial<Scalar> characteristic_polynomial(const Vector<Scalar>& coeffs) {
  const Eigen::Index L = coeffs.size();
  std::vector<Scalar> c(static_cast<std::size_t>(L) + 1);
  c[static_cast<std::size_t>(L)] = Scalar(1);
  for (Eigen::Index l = 1; l <= L; ++l) c[static_cast<std::size_t>(L - l)] = coeffs(l - 1);
  return Polynomial<Scalar>(std::move(c));
}

// Eigenvalues of the companion matrix of the characteristic polynomial.
template <typename Scalar>
ComplexVector<Scalar> roots(const ArFilter<Scalar>& f) {
  detail::require_valid(f, "roots");
  const Eigen::Index L = f.order();
  Matrix<Scalar> companion = Matrix<Scalar>::Zero(L, L);
  companion.row(0) = -f.coeffs.transpose();
  if (L > 1) companion.bottomLeftCorner(L - 1, L - 1).setIdentity();
  Eigen::EigenSolver<Matrix<Scalar>> solver(companion, false);
  if (solver.info() != Eigen::Success) throw NumericalFailure("roots: companion eigenvalue iteration failed");
  return solver.eigenvalues();
}

template <typename Scalar>
Scalar max_root_modulus(const ArFilter<Scalar>& f) {
  return roots(f).cwiseAbs().maxCoeff();
}

// True iff every root lies strictly inside the disc of radius r. Roots within
// a relative 1e-10 of the circle count as on it: decimal inputs such as
// z^2 - 1.9 z + 0.9 round to a polynomial whose unit root moves inward by ~1e-15.
template <typename Scalar>
bool is_stable(const ArFilter<Scalar>& f, Scalar r = Scalar(1)) {
  if (!(r > Scalar(0) && r <= Scalar(1))) throw InvalidInput("is_stable: radius must lie in (0, 1]");
  return max_root_modulus(f) < r * (Scalar(1) - Scalar(1e-10));
}

// Autocorrelations and covariance of the centered process (the intercept only
// shifts the mean). Solves Phi rho = -psi with
// Phi_ij = psi_{i+j} + psi_{i-j} + delta_ij, then gamma0 = sigma^2 / (1 + rho'psi).
template <typename Scalar>
StationaryMoments<Scalar> stationary_moments(const ArFilter<Scalar>& f) {
  detail::require_valid(f, "stationary_moments");
  if (!is_stable(f, Scalar(1))) throw InvalidInput("stationary_moments: filter is not stable");
  const Eigen::Index L = f.order();
  auto psi = [&](Eigen::Index k) { return (k >= 1 && k <= L) ? f.coeffs(k - 1) : Scalar(0); };
  Matrix<Scalar> phi(L, L);
  for (Eigen::Index i = 1; i <= L; ++i)
    for (Eigen::Index j = 1; j <= L; ++j) phi(i - 1, j - 1) = psi(i + j) + psi(i - j) + (i == j ? Scalar(1) : Scalar(0));
  Eigen::FullPivLU<Matrix<Scalar>> lu(phi);
  if (!lu.isInvertible()) throw NumericalFailure("stationary_moments: singular Yule-Walker system");
  StationaryMoments<Scalar> m;
  m.rho = -lu.solve(f.coeffs);
  const Scalar denom = Scalar(1) + m.rho.dot(f.coeffs);
  if (!(denom > Scalar(0))) throw NumericalFailure("stationary_moments: non-positive variance");
  m.gamma0 = f.noise_variance / denom;
  m.cov.resize(L, L);
  for (Eigen::Index i = 0; i < L; ++i)
    for (Eigen::Index j = 0; j < L; ++j) {
      const Eigen::Index lag = std::abs(i - j);
      m.cov(i, j) = m.gamma0 * (lag == 0 ? Scalar(1) : m.rho(lag - 1));
    }
  return m;
}

// Quadratic form (psi_A - psi_B)' Gamma_A (psi_A - psi_B) with precomputed
// moments of A; orders are padded with zeros to the larger one.
template <typename Scalar>
Scalar distance_cov(const StationaryMoments<Scalar>& moments_a, const Vector<Scalar>& psi_a,
                    const Vector<Scalar>& psi_b) {
  const Eigen::Index L = moments_a.cov.rows();
  if (psi_b.size() > L) {
    // B reaches beyond A's order: extend Gamma_A by the Yule-Walker recursion.
    const Eigen::Index n = psi_b.size();
    Vector<Scalar> acov(n);
    acov(0) = moments_a.gamma0;
    for (Eigen::Index k = 1; k < n; ++k) {
      if (k <= L) {
        acov(k) = moments_a.gamma0 * moments_a.rho(k - 1);
      } else {
        Scalar s(0);
        for (Eigen::Index l = 1; l <= L; ++l) s -= psi_a(l - 1) * acov(k - l);
        acov(k) = s;
      }
    }
    Matrix<Scalar> cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = acov(std::abs(i - j));
    const Vector<Scalar> d = detail::padded(psi_a, n) - psi_b;
    return detail::clamp_nonneg(Scalar(d.dot(cov * d)));
  }
  const Vector<Scalar> d = psi_a - detail::padded(psi_b, L);
  return detail::clamp_nonneg(Scalar(d.dot(moments_a.cov * d)));
}

// Mismatch distance between zero-mean filters via the covariance form.
template <typename Scalar>
Scalar distance_cov(const ArFilter<Scalar>& a, const ArFilter<Scalar>& b) {
  detail::require_valid(b, "distance_cov");
  return distance_cov(stationary_moments(a), a.coeffs, b.coeffs);
}

// Root form: sigma_A^2 sum_k p_B(a_k) / p_A'(a_k) * (pbar_B(a_k) / pbar_A(a_k) - 1),
// where p'(z) = d(z p(z))/dz. Requires pairwise distinct, nonzero roots of A.
template <typename Scalar>
Scalar distance_roots(const ArFilter<Scalar>& a, const ArFilter<Scalar>& b, Scalar degenerate_tol = Scalar(1e-7)) {
  using C = std::complex<Scalar>;
  detail::require_valid(a, "distance_roots");
  detail::require_valid(b, "distance_roots");
  const Eigen::Index L = std::max(a.order(), b.order());
  const ArFilter<Scalar> ap(detail::padded(a.coeffs, L), a.intercept, a.noise_variance);
  const ArFilter<Scalar> bp(detail::padded(b.coeffs, L), b.intercept, b.noise_variance);
  const ComplexVector<Scalar> ra = roots(ap);
  const ComplexVector<Scalar> rb = roots(bp);
  if (!(ra.cwiseAbs().maxCoeff() < Scalar(1))) throw InvalidInput("distance_roots: generating filter is not stable");
  for (Eigen::Index k = 0; k < L; ++k) {
    if (std::abs(ra(k)) < degenerate_tol) throw DegenerateCase("distance_roots: zero root");
    for (Eigen::Index j = k + 1; j < L; ++j)
      if (std::abs(ra(k) - ra(j)) < degenerate_tol) throw DegenerateCase("distance_roots: repeated root");
  }
  C total(0);
  for (Eigen::Index k = 0; k < L; ++k) {
    const C ak = ra(k);
    C num(1), den(ak), pb_bar(1), pa_bar(1);
    for (Eigen::Index l = 0; l < L; ++l) {
      num *= ak - rb(l);
      if (l != k) den *= ak - ra(l);
      pb_bar *= C(1) - ak * std::conj(rb(l));
      pa_bar *= C(1) - ak * std::conj(ra(l));
    }
    total += num / den * (pb_bar / pa_bar - C(1));
  }
  const Scalar scale = std::max(Scalar(1), std::abs(total.real()));
  if (std::abs(total.imag()) > Scalar(1e-8) * scale)
    throw NumericalFailure("distance_roots: imaginary residue exceeds tolerance");
  return detail::clamp_nonneg(a.noise_variance * total.real());
}

// Distance including intercepts: D0 plus the squared mean of the prediction
// error, mu_A (1 + sum psi_B) + psi_B0 with mu_A = -psi_A0 / (1 + sum psi_A).
template <typename Scalar>
Scalar distance_full(const ArFilter<Scalar>& a, const ArFilter<Scalar>& b) {
  detail::require_valid(a, "distance_full");
  detail::require_valid(b, "distance_full");
  const Scalar sum_a = Scalar(1) + a.coeffs.sum();
  if (sum_a == Scalar(0)) throw InvalidInput("distance_full: 1 + sum(psi_A) is zero");
  const Scalar d0 = distance_cov(stationary_moments(a), a.coeffs, b.coeffs);
  const Scalar bias = b.intercept - (Scalar(1) + b.coeffs.sum()) / sum_a * a.intercept;
  return d0 + bias * bias;
}

// Root-free evaluation from the coefficients alone: resultants via Sylvester
// determinants, root power sums via Newton's identities, and the S(., .)
// determinant for the elementary symmetric functions. Verification path.
template <typename Scalar>
Scalar distance_resultant(const ArFilter<Scalar>& a, const ArFilter<Scalar>& b) {
  using Poly = Polynomial<Scalar>;
  detail::require_valid(a, "distance_resultant");
  detail::require_valid(b, "distance_resultant");
  if (a.intercept != Scalar(0) || b.intercept != Scalar(0))
    throw InvalidInput("distance_resultant: intercepts must be zero");
  const Eigen::Index L = std::max(a.order(), b.order());
  if (L > 6) throw UnsupportedOrder("distance_resultant: orders above 6 are not supported");
  const Vector<Scalar> psi_a = detail::padded(a.coeffs, L);
  const Vector<Scalar> psi_b = detail::padded(b.coeffs, L);
  if (psi_a == psi_b) return Scalar(0);

  const Poly p_a = characteristic_polynomial(psi_a);
  const Poly p_b = characteristic_polynomial(psi_b);
  const Poly dp_a = p_a.shifted().derivative();
  const Poly q = dp_a * p_a.reciprocal();

  auto power_sums_of = [&](const Poly& g) {
    std::vector<Scalar> s;
    Poly gi = Poly::constant(Scalar(1));
    for (Eigen::Index i = 1; i < L; ++i) {
      gi = gi * g;
      s.push_back(root_sum(p_a, gi));
    }
    return s;
  };

  // sum_k f(a_k) / g(a_k) = [Po(p_A, f) S(s, 0) - Po(p_A, f g S'(s, g))] / Res(p_A, g)
  auto ratio_sum = [&](const Poly& f, const Poly& g) {
    const std::vector<Scalar> s = power_sums_of(g);
    const Scalar res = resultant(p_a, g);
    if (std::abs(res) < std::numeric_limits<Scalar>::min() * Scalar(1e4))
      throw DegenerateCase("distance_resultant: vanishing resultant");
    const Scalar full = symmetric_from_power_sums(s, L - 1)[0];
    const Poly reduced = symmetric_from_power_sums(s, L - 2).compose(g);
    const Scalar num = root_sum(p_a, f) * full - root_sum(p_a, f * g * reduced);
    return num / res;
  };

  const Scalar d0 = ratio_sum(p_b * p_b.reciprocal(), q) - ratio_sum(p_b, dp_a);
  return detail::clamp_nonneg(a.noise_variance * d0);
}

// Near the unit circle the resultants are products of small factors and lose
// up to ~1e-4 relative accuracy in double, so doubles are evaluated in long double.
inline double distance_resultant(const ArFilter<double>& a, const ArFilter<double>& b) {
  const ArFilter<long double> al(a.coeffs.cast<long double>(), a.intercept, a.noise_variance);
  const ArFilter<long double> bl(b.coeffs.cast<long double>(), b.intercept, b.noise_variance);
  return static_cast<double>(distance_resultant<long double>(al, bl));
}

template <typename Scalar>
struct McEstimate {
  Scalar estimate{0};
  Scalar std_error{0};
};

// Simulates the A process and averages the excess squared one-step error of
// predicting with B over predicting with A. The standard error uses
// non-overlapping batch means.
template <typename Scalar>
McEstimate<Scalar> distance_mc(const ArFilter<Scalar>& a, const ArFilter<Scalar>& b, std::uint64_t n_samples,
                               std::uint64_t seed) {
  detail::require_valid(a, "distance_mc");
  detail::require_valid(b, "distance_mc");
  if (n_samples < 2) throw InvalidInput("distance_mc: need at least 2 samples");
  const Scalar rmax = max_root_modulus(a);
  if (!(rmax < Scalar(1))) throw InvalidInput("distance_mc: generating filter is not stable");
  const Eigen::Index L = std::max(a.order(), b.order());
  const Vector<Scalar> psi_a = detail::padded(a.coeffs, L);
  const Vector<Scalar> psi_b = detail::padded(b.coeffs, L);
  const auto burn = static_cast<std::uint64_t>(
      std::max<Scalar>(Scalar(1000), std::ceil(Scalar(10) * Scalar(a.order()) / (Scalar(1) - rmax))));

  Rng rng(seed);
  std::normal_distribution<Scalar> noise(Scalar(0), std::sqrt(a.noise_variance));
  // history(0) = x(n-1), ..., history(L-1) = x(n-L)
  Vector<Scalar> history = Vector<Scalar>::Constant(L, a.mean());

  const std::uint64_t n_batches = n_samples >= 100000 ? 1000 : std::max<std::uint64_t>(2, n_samples / 100);
  const std::uint64_t batch_len = n_samples / n_batches;
  const std::uint64_t used = batch_len * n_batches;

  std::vector<Scalar> batch_means;
  batch_means.reserve(n_batches);
  CompensatedSum<Scalar> batch;
  for (std::uint64_t step = 0; step < burn + used; ++step) {
    const Scalar eps = noise(rng);
    const Scalar pred_a = a.intercept + psi_a.dot(history);
    const Scalar x = eps - pred_a;
    if (step >= burn) {
      const Scalar err_b = x + b.intercept + psi_b.dot(history);
      batch.add(err_b * err_b - eps * eps);
      if ((step - burn + 1) % batch_len == 0) {
        batch_means.push_back(batch.value() / Scalar(batch_len));
        batch = CompensatedSum<Scalar>();
      }
    }
    for (Eigen::Index l = L - 1; l > 0; --l) history(l) = history(l - 1);
    history(0) = x;
  }
  CompensatedSum<Scalar> total;
  for (Scalar m : batch_means) total.add(m);
  const Scalar mean = total.value() / Scalar(n_batches);
  Scalar ss(0);
  for (Scalar m : batch_means) ss += (m - mean) * (m - mean);
  const Scalar var_of_mean = ss / Scalar(n_batches - 1) / Scalar(n_batches);
  return {mean, std::sqrt(var_of_mean)};
}

}  // namespace gapar
