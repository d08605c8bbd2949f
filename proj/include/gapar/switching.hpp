#pragma once

// Markov-switching autoregression. State y(n) follows a first-order chain
// with transition matrix T and initial law alpha; given y(n) = m,
//
//     x(n) = -psi_{m0} - sum_l psi_{ml} x(n-l) + eps,   eps ~ N(0, sigma_m^2).
//
// Series passed to the estimation routines carry the L presample values
// x(-L+1..0) in their first L entries; the likelihood conditions on them.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "gapar/arcore.hpp"

namespace gapar {

struct SwitchingArModel {
  std::vector<ArFilterd> filters;  // intercept + coefficients; noise_variance holds sigma_m^2
  Eigen::MatrixXd transition;      // row-stochastic
  Eigen::VectorXd initial;

  std::size_t states() const { return filters.size(); }
  Eigen::Index order() const { return filters.empty() ? 0 : filters.front().order(); }
  Eigen::VectorXd variances() const;

  // Throws InvalidInput on shape mismatches, non-stochastic T or alpha, or
  // non-positive variances.
  void validate() const;
};

// T with `stay` on the diagonal and (1 - stay) / (M - 1) elsewhere.
Eigen::MatrixXd sticky_transition(std::size_t states, double stay);

struct SimulatedSeries {
  Eigen::VectorXd values;   // x(1..N)
  std::vector<int> states;  // y(1..N), zero-based
};

SimulatedSeries simulate(const SwitchingArModel& model, std::size_t length, const Eigen::VectorXd& warmup,
                         std::uint64_t seed);

struct PosteriorWeights {
  // pairwise[n](m, m') = P(y(n) = m, y(n+1) = m' | X) for n = 0..N-2
  std::vector<Eigen::MatrixXd> pairwise;
  // marginal(n, m) = P(y(n) = m | X), N x M
  Eigen::MatrixXd marginal;

  std::size_t steps() const { return static_cast<std::size_t>(marginal.rows()); }
};

struct EStepResult {
  PosteriorWeights weights;
  double loglik{0};
};

// [1, x(n-1), ..., x(n-L)] for each modeled step, N x (L + 1).
Eigen::MatrixXd regressors(const Eigen::VectorXd& series, Eigen::Index order);

// log N(x(n); -psi_m' [1, x(n-1..n-L)], sigma_m^2), N x M.
Eigen::MatrixXd emission_log_densities(const SwitchingArModel& model, const Eigen::VectorXd& series);

// Scaled forward-backward pass.
EStepResult e_step(const SwitchingArModel& model, const Eigen::VectorXd& series);

struct MStepOptions {
  double variance_floor{0.0};
  double degenerate_fraction{1e-6};  // a state is degenerate if its mass < M * fraction * N
};

struct MStepResult {
  SwitchingArModel model;
  bool ridge_used{false};
  std::vector<std::size_t> degenerate_states;
};

// Closed-form maximizer of the expected complete log-likelihood: weighted
// least squares per state, weighted residual variance, normalized transition
// counts, alpha = marginal at the first step. Degenerate states keep the
// parameters of `previous` when given.
MStepResult m_step(const PosteriorWeights& weights, const Eigen::VectorXd& series, Eigen::Index order,
                   const SwitchingArModel* previous = nullptr, const MStepOptions& options = {});

// Q(model | weights): expected complete-data log-likelihood.
double expected_complete_loglik(const PosteriorWeights& weights, const Eigen::VectorXd& series,
                                const SwitchingArModel& model);

struct FitOptions {
  std::size_t max_iter{500};
  double tol{1e-6};
  std::size_t window_length{0};  // for reseeding degenerate states; 0 -> default
  double variance_floor_fraction{1e-3};  // of the sample variance of the series
  std::uint64_t seed{0};
};

struct FitResult {
  SwitchingArModel model;
  std::vector<double> loglik_trace;    // observed log-likelihood per E-step
  std::vector<double> surrogate_trace;  // Q after each M-step
  PosteriorWeights weights;            // posteriors under `model`
  double loglik{0};
  double mspe{0};
  std::size_t n_iter{0};
  bool converged{false};
  bool ridge_used{false};
  bool reseeded{false};
};

FitResult fit_em(const Eigen::VectorXd& series, const SwitchingArModel& init, const FitOptions& options = {});

std::size_t default_window_length(Eigen::Index order);

struct WindowEstimates {
  Eigen::MatrixXd filters;     // one row per window: psi_0, psi_1..psi_L
  Eigen::VectorXd variances;
};

// Least-squares AR fits over every window of `window` consecutive modeled steps.
WindowEstimates window_estimates(const Eigen::VectorXd& series, Eigen::Index order, std::size_t window);

// Single least-squares AR fit over all modeled steps.
ArFilterd least_squares_fit(const Eigen::VectorXd& series, Eigen::Index order);

// Initial models for M = 1..max_states from windowed least-squares estimates
// clustered by k-means, each M extending the (M-1) set by the cluster center
// farthest (summed Euclidean distance) from the filters already chosen.
std::vector<SwitchingArModel> init_split(const Eigen::VectorXd& series, Eigen::Index order, std::size_t max_states,
                                         std::size_t window = 0, std::uint64_t seed = 0);

// (1/N) sum_n sum_m P(y(n) = m | X) (x(n) + psi_m' [1, x(n-1..n-L)])^2
double observed_mspe(const FitResult& fit, const Eigen::VectorXd& series);
double observed_mspe(const SwitchingArModel& model, const PosteriorWeights& weights, const Eigen::VectorXd& series);

// Permutation of estimated states minimizing the summed Euclidean distance
// between filter vectors (intercept included) and the reference filters;
// perm[true_state] = estimated_state.
std::vector<std::size_t> align_states(const SwitchingArModel& estimated, const SwitchingArModel& reference);

}  // namespace gapar
