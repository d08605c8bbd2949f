#pragma once

// Uniform sampling of stable AR filters with all roots inside radius r.
//
// Reflection-coefficient recursion: for k = 1..L draw
// beta_k ~ Beta(floor(k/2) + 1, floor((k+1)/2)), set alpha_k = 2 beta_k - 1 and
//
//     Lambda_k(z) = z Lambda_{k-1}(z) + r^k alpha_k rev(Lambda_{k-1})(z / r^2),
//
// which on coefficients reads lambda_{k,k} = r^k alpha_k and
// lambda_{i,k} = lambda_{i,k-1} + lambda_{k,k} lambda_{k-i,k-1} / r^{2k-2i}.
// The Beta weights cancel the Jacobian of the map, so the coefficient vector
// of Lambda_L is uniform on the stability region.

#include <cmath>
#include <cstdint>
#include <vector>

#include "gapar/arcore.hpp"
#include "gapar/error.hpp"
#include "gapar/random.hpp"

namespace gapar {

template <typename Scalar = double>
struct FilterBatch {
  Eigen::Index order{0};
  Scalar radius{1};
  std::uint64_t seed{0};
  std::vector<ArFilter<Scalar>> filters;
};

// Reflection coefficients alpha_1..alpha_L, each strictly inside (-1, 1).
template <typename Scalar, typename Generator>
Vector<Scalar> draw_reflection_coefficients(Eigen::Index order, Generator& rng) {
  Vector<Scalar> alpha(order);
  for (Eigen::Index k = 1; k <= order; ++k) {
    const Scalar a = Scalar(k / 2 + 1);
    const Scalar b = Scalar((k + 1) / 2);
    Scalar value;
    do {
      value = Scalar(2) * draw_beta(a, b, rng) - Scalar(1);
    } while (!(std::abs(value) < Scalar(1)));
    alpha(k - 1) = value;
  }
  return alpha;
}

// Coefficients lambda_1..lambda_L of Lambda_L for given reflection coefficients.
template <typename Scalar>
Vector<Scalar> coefficients_from_reflection(const Vector<Scalar>& alpha, Scalar radius) {
  const Eigen::Index L = alpha.size();
  Vector<Scalar> lambda = Vector<Scalar>::Zero(L);
  Vector<Scalar> prev = Vector<Scalar>::Zero(L);
  Scalar rk(1);
  for (Eigen::Index k = 1; k <= L; ++k) {
    rk *= radius;
    const Scalar last = rk * alpha(k - 1);
    prev.head(k - 1) = lambda.head(k - 1);
    for (Eigen::Index i = 1; i < k; ++i)
      lambda(i - 1) = prev(i - 1) + last * prev(k - i - 1) / std::pow(radius, Scalar(2 * (k - i)));
    lambda(k - 1) = last;
  }
  return lambda;
}

template <typename Scalar = double, typename Generator>
ArFilter<Scalar> sample_filter(Eigen::Index order, Scalar radius, Generator& rng) {
  if (order < 1) throw InvalidInput("sample_filter: order must be >= 1");
  if (!(radius > Scalar(0) && radius <= Scalar(1))) throw InvalidInput("sample_filter: radius must lie in (0, 1]");
  return ArFilter<Scalar>(coefficients_from_reflection(draw_reflection_coefficients<Scalar>(order, rng), radius));
}

// F independent uniform draws from one seeded stream.
template <typename Scalar = double>
FilterBatch<Scalar> sample_batch(Eigen::Index order, Scalar radius, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InvalidInput("sample_batch: count must be >= 1");
  if (order < 1) throw InvalidInput("sample_batch: order must be >= 1");
  if (!(radius > Scalar(0) && radius <= Scalar(1))) throw InvalidInput("sample_batch: radius must lie in (0, 1]");
  FilterBatch<Scalar> batch{order, radius, seed, {}};
  batch.filters.reserve(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    batch.filters.push_back(sample_filter<Scalar>(order, radius, rng));
#ifndef NDEBUG
    if (max_root_modulus(batch.filters.back()) >= radius + Scalar(1e-9))
      throw NumericalFailure("sample_batch: drawn filter escaped the stability region");
#endif
  }
  return batch;
}

}  // namespace gapar
