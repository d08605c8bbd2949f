#include "gapar/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "gapar/error.hpp"
#include "gapar/random.hpp"

namespace gapar {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::size_t modeled_steps(const Eigen::VectorXd& series, Eigen::Index order) {
  if (series.size() <= order) throw InvalidInput("series must be longer than the AR order");
  return static_cast<std::size_t>(series.size() - order);
}

Eigen::VectorXd filter_vector(const ArFilterd& f) {
  Eigen::VectorXd v(f.order() + 1);
  v(0) = f.intercept;
  v.tail(f.order()) = f.coeffs;
  return v;
}

ArFilterd filter_from_vector(const Eigen::VectorXd& v, double variance) {
  return ArFilterd(Eigen::VectorXd(v.tail(v.size() - 1)), v(0), variance);
}

struct WeightedFit {
  Eigen::VectorXd psi;  // psi_0..psi_L
  double variance{0};
  bool ridge{false};
};

// Minimizes sum_n w_n (x(n) + psi' z_n)^2.
WeightedFit weighted_least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& target, const Eigen::VectorXd& w) {
  const Eigen::Index p = z.cols();
  const Eigen::MatrixXd gram = z.transpose() * w.asDiagonal() * z;
  const Eigen::VectorXd rhs = z.transpose() * w.cwiseProduct(target);
  WeightedFit fit;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double trace = gram.trace();
  const Eigen::VectorXd d = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || !(trace > 0.0) ||
                        d.minCoeff() <= 1e-12 * std::max(trace, std::numeric_limits<double>::min());
  if (singular) {
    const double lambda = 1e-8 * std::max(trace, 1.0) / static_cast<double>(p);
    const Eigen::MatrixXd ridged = gram + lambda * Eigen::MatrixXd::Identity(p, p);
    fit.psi = -ridged.ldlt().solve(rhs);
    fit.ridge = true;
  } else {
    fit.psi = -ldlt.solve(rhs);
  }
  const Eigen::VectorXd resid = target + z * fit.psi;
  const double mass = w.sum();
  fit.variance = mass > 0.0 ? w.dot(resid.cwiseAbs2()) / mass : 0.0;
  return fit;
}

double sample_variance(const Eigen::VectorXd& x) {
  if (x.size() < 2) return 0.0;
  const double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

// Lloyd's iterations from k-means++ seeding, best of a few restarts.
Eigen::MatrixXd kmeans_centers(const Eigen::MatrixXd& points, std::size_t k, Rng& rng,
                               std::vector<std::size_t>& labels_out) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (static_cast<Eigen::Index>(k) > n) throw InvalidInput("k-means: more clusters than points");
  double best_sse = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best;
  std::vector<std::size_t> best_labels;
  for (int restart = 0; restart < 5; ++restart) {
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), dim);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));
    Eigen::VectorXd nearest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 1; c < k; ++c) {
      const double total = nearest.sum();
      Eigen::Index chosen = pick(rng);
      if (total > 0.0) {
        double target = unit(rng) * total;
        for (Eigen::Index i = 0; i < n; ++i) {
          target -= nearest(i);
          if (target <= 0.0) {
            chosen = i;
            break;
          }
        }
      }
      centers.row(static_cast<Eigen::Index>(c)) = points.row(chosen);
      nearest = nearest.cwiseMin((points.rowwise() - centers.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
    }
    std::vector<std::size_t> labels(static_cast<std::size_t>(n), 0);
    double sse = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
      bool changed = false;
      sse = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t arg = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
          const double d = (points.row(i) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
          if (d < best_d) {
            best_d = d;
            arg = c;
          }
        }
        sse += best_d;
        changed = changed || labels[static_cast<std::size_t>(i)] != arg;
        labels[static_cast<std::size_t>(i)] = arg;
      }
      Eigen::MatrixXd next = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), dim);
      std::vector<std::size_t> counts(k, 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        next.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) += points.row(i);
        ++counts[labels[static_cast<std::size_t>(i)]];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(static_cast<Eigen::Index>(c)) = next.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        }
      }
      if (!changed && iter > 0) break;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = centers;
      best_labels = labels;
    }
  }
  labels_out = best_labels;
  return best;
}

}  // namespace

Eigen::VectorXd SwitchingArModel::variances() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(filters.size()));
  for (std::size_t m = 0; m < filters.size(); ++m) v(static_cast<Eigen::Index>(m)) = filters[m].noise_variance;
  return v;
}

void SwitchingArModel::validate() const {
  const auto m = static_cast<Eigen::Index>(filters.size());
  if (m < 1) throw InvalidInput("model: at least one state required");
  const Eigen::Index L = filters.front().order();
  if (L < 1) throw InvalidInput("model: AR order must be >= 1");
  for (const auto& f : filters) {
    if (f.order() != L) throw InvalidInput("model: all states must share one AR order");
    if (!f.coeffs.allFinite() || !std::isfinite(f.intercept)) throw InvalidInput("model: non-finite coefficient");
    if (!(f.noise_variance > 0.0) || !std::isfinite(f.noise_variance))
      throw InvalidInput("model: variances must be positive");
  }
  if (transition.rows() != m || transition.cols() != m) throw InvalidInput("model: transition matrix must be M x M");
  if (initial.size() != m) throw InvalidInput("model: initial distribution must have M entries");
  if ((transition.array() < 0.0).any() || !transition.allFinite())
    throw InvalidInput("model: transition entries must be nonnegative");
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-12) throw InvalidInput("model: transition rows must sum to 1");
  if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > 1e-12)
    throw InvalidInput("model: initial distribution must be a probability vector");
}

Eigen::MatrixXd sticky_transition(std::size_t states, double stay) {
  const auto m = static_cast<Eigen::Index>(states);
  if (m < 1) throw InvalidInput("sticky_transition: at least one state required");
  if (m == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(m, m, (1.0 - stay) / static_cast<double>(m - 1));
  t.diagonal().setConstant(stay);
  return t;
}

SimulatedSeries simulate(const SwitchingArModel& model, std::size_t length, const Eigen::VectorXd& warmup,
                         std::uint64_t seed) {
  model.validate();
  if (length < 1) throw InvalidInput("simulate: length must be >= 1");
  const Eigen::Index L = model.order();
  if (warmup.size() != L) throw InvalidInput("simulate: warmup must hold L values");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw_state = [&](const Eigen::VectorXd& probs) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    for (Eigen::Index m = 0; m < probs.size(); ++m) {
      u -= probs(m);
      if (u < 0.0) return static_cast<int>(m);
    }
    return static_cast<int>(probs.size() - 1);
  };

  SimulatedSeries out;
  out.values.resize(static_cast<Eigen::Index>(length));
  out.states.resize(length);
  // history(0) = x(n-1), ..., history(L-1) = x(n-L); warmup is chronological
  Eigen::VectorXd history = warmup.reverse();
  int state = draw_state(model.initial);
  for (std::size_t n = 0; n < length; ++n) {
    if (n > 0) state = draw_state(model.transition.row(state).transpose());
    const auto& f = model.filters[static_cast<std::size_t>(state)];
    const double x = -f.intercept - f.coeffs.dot(history) + std::sqrt(f.noise_variance) * noise(rng);
    for (Eigen::Index l = L - 1; l > 0; --l) history(l) = history(l - 1);
    history(0) = x;
    out.values(static_cast<Eigen::Index>(n)) = x;
    out.states[n] = state;
  }
  return out;
}

Eigen::MatrixXd regressors(const Eigen::VectorXd& series, Eigen::Index order) {
  const auto n = static_cast<Eigen::Index>(modeled_steps(series, order));
  Eigen::MatrixXd z(n, order + 1);
  for (Eigen::Index t = 0; t < n; ++t) {
    z(t, 0) = 1.0;
    for (Eigen::Index l = 1; l <= order; ++l) z(t, l) = series(order + t - l);
  }
  return z;
}

Eigen::MatrixXd emission_log_densities(const SwitchingArModel& model, const Eigen::VectorXd& series) {
  const Eigen::Index L = model.order();
  const Eigen::MatrixXd z = regressors(series, L);
  const Eigen::VectorXd target = series.tail(z.rows());
  const auto m = static_cast<Eigen::Index>(model.states());
  Eigen::MatrixXd logp(z.rows(), m);
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& f = model.filters[static_cast<std::size_t>(s)];
    const Eigen::VectorXd resid = target + z * filter_vector(f);
    logp.col(s) = (-0.5 * (kLog2Pi + std::log(f.noise_variance))) -
                  resid.array().square() / (2.0 * f.noise_variance);
  }
  return logp;
}

EStepResult e_step(const SwitchingArModel& model, const Eigen::VectorXd& series) {
  model.validate();
  const Eigen::MatrixXd logp = emission_log_densities(model, series);
  const Eigen::Index n = logp.rows();
  const Eigen::Index m = logp.cols();
  const Eigen::MatrixXd& t = model.transition;

  Eigen::MatrixXd emis(n, m);  // emission densities scaled by exp(-max per step)
  Eigen::VectorXd shift(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    shift(i) = logp.row(i).maxCoeff();
    emis.row(i) = (logp.row(i).array() - shift(i)).exp();
  }

  Eigen::MatrixXd alpha(n, m);
  Eigen::VectorXd scale(n);
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd a;
    if (i == 0) {
      a = model.initial.transpose().cwiseProduct(emis.row(0));
    } else {
      a = (alpha.row(i - 1) * t).cwiseProduct(emis.row(i));
    }
    const double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericalFailure("e_step: zero-probability underflow at time index " + std::to_string(i));
    alpha.row(i) = a / c;
    scale(i) = c;
    loglik += std::log(c) + shift(i);
  }

  Eigen::MatrixXd beta(n, m);
  beta.row(n - 1).setOnes();
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    const Eigen::RowVectorXd next = emis.row(i + 1).cwiseProduct(beta.row(i + 1));
    beta.row(i) = (t * next.transpose()).transpose() / scale(i + 1);
  }

  EStepResult out;
  out.loglik = loglik;
  out.weights.marginal = alpha.cwiseProduct(beta);
  for (Eigen::Index i = 0; i < n; ++i) out.weights.marginal.row(i) /= out.weights.marginal.row(i).sum();
  out.weights.pairwise.resize(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Eigen::RowVectorXd next = emis.row(i + 1).cwiseProduct(beta.row(i + 1));
    Eigen::MatrixXd w = (alpha.row(i).transpose() * next).cwiseProduct(t) / scale(i + 1);
    w /= w.sum();
    out.weights.pairwise[static_cast<std::size_t>(i)] = std::move(w);
  }
  return out;
}

MStepResult m_step(const PosteriorWeights& weights, const Eigen::VectorXd& series, Eigen::Index order,
                   const SwitchingArModel* previous, const MStepOptions& options) {
  const Eigen::MatrixXd z = regressors(series, order);
  const Eigen::VectorXd target = series.tail(z.rows());
  const Eigen::Index n = z.rows();
  const Eigen::Index m = weights.marginal.cols();
  if (weights.marginal.rows() != n) throw InvalidInput("m_step: weights do not match the series length");
  if (weights.pairwise.size() != static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)))
    throw InvalidInput("m_step: pairwise weights do not match the series length");
  if (previous && static_cast<Eigen::Index>(previous->states()) != m)
    throw InvalidInput("m_step: previous model has a different state count");

  MStepResult out;
  out.model.filters.resize(static_cast<std::size_t>(m));
  const double threshold = static_cast<double>(m) * options.degenerate_fraction * static_cast<double>(n);

  std::optional<WeightedFit> pooled;
  for (Eigen::Index s = 0; s < m; ++s) {
    const Eigen::VectorXd w = weights.marginal.col(s);
    const double mass = w.sum();
    if (mass < threshold) {
      out.degenerate_states.push_back(static_cast<std::size_t>(s));
      if (previous) {
        out.model.filters[static_cast<std::size_t>(s)] = previous->filters[static_cast<std::size_t>(s)];
      } else {
        if (!pooled) pooled = weighted_least_squares(z, target, Eigen::VectorXd::Ones(n));
        out.model.filters[static_cast<std::size_t>(s)] =
            filter_from_vector(pooled->psi, std::max({pooled->variance, options.variance_floor, 1e-300}));
      }
      continue;
    }
    WeightedFit fit = weighted_least_squares(z, target, w);
    out.ridge_used = out.ridge_used || fit.ridge;
    out.model.filters[static_cast<std::size_t>(s)] =
        filter_from_vector(fit.psi, std::max({fit.variance, options.variance_floor, 1e-300}));
  }

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, m);
  for (const auto& w : weights.pairwise) counts += w;
  out.model.transition.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double row = counts.row(i).sum();
    if (row > 0.0) {
      out.model.transition.row(i) = counts.row(i) / row;
    } else if (previous) {
      out.model.transition.row(i) = previous->transition.row(i);
    } else {
      out.model.transition.row(i).setConstant(1.0 / static_cast<double>(m));
    }
    out.model.transition.row(i) /= out.model.transition.row(i).sum();
  }
  out.model.initial = weights.marginal.row(0).transpose();
  out.model.initial /= out.model.initial.sum();
  return out;
}

double expected_complete_loglik(const PosteriorWeights& weights, const Eigen::VectorXd& series,
                                const SwitchingArModel& model) {
  const Eigen::MatrixXd logp = emission_log_densities(model, series);
  auto xlogy = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); };
  double q = weights.marginal.cwiseProduct(logp).sum();
  for (Eigen::Index s = 0; s < weights.marginal.cols(); ++s) q += xlogy(weights.marginal(0, s), model.initial(s));
  for (const auto& w : weights.pairwise)
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) q += xlogy(w(i, j), model.transition(i, j));
  return q;
}

std::size_t default_window_length(Eigen::Index order) {
  return std::max<std::size_t>(50, static_cast<std::size_t>(5 * (order + 1)));
}

WindowEstimates window_estimates(const Eigen::VectorXd& series, Eigen::Index order, std::size_t window) {
  const Eigen::MatrixXd z = regressors(series, order);
  const Eigen::VectorXd target = series.tail(z.rows());
  const auto n = static_cast<std::size_t>(z.rows());
  if (window > n) throw InvalidInput("window length exceeds the series length");
  if (window < static_cast<std::size_t>(5 * (order + 1)))
    throw InvalidInput("window length must be at least 5 (L + 1)");
  const std::size_t count = n - window + 1;
  WindowEstimates out;
  out.filters.resize(static_cast<Eigen::Index>(count), order + 1);
  out.variances.resize(static_cast<Eigen::Index>(count));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(window));
  for (std::size_t s = 0; s < count; ++s) {
    const auto start = static_cast<Eigen::Index>(s);
    const auto len = static_cast<Eigen::Index>(window);
    const WeightedFit fit = weighted_least_squares(z.middleRows(start, len), target.segment(start, len), ones);
    out.filters.row(start) = fit.psi.transpose();
    out.variances(start) = fit.variance;
  }
  return out;
}

ArFilterd least_squares_fit(const Eigen::VectorXd& series, Eigen::Index order) {
  const Eigen::MatrixXd z = regressors(series, order);
  const Eigen::VectorXd target = series.tail(z.rows());
  const WeightedFit fit = weighted_least_squares(z, target, Eigen::VectorXd::Ones(z.rows()));
  return filter_from_vector(fit.psi, fit.variance);
}

std::vector<SwitchingArModel> init_split(const Eigen::VectorXd& series, Eigen::Index order, std::size_t max_states,
                                         std::size_t window, std::uint64_t seed) {
  if (order < 1) throw InvalidInput("init_split: order must be >= 1");
  if (max_states < 1) throw InvalidInput("init_split: max_states must be >= 1");
  const std::size_t n = modeled_steps(series, order);
  if (window == 0) window = std::min(default_window_length(order), n);
  if (window > n) throw InvalidInput("init_split: window length exceeds the series length");

  std::vector<SwitchingArModel> out;
  SwitchingArModel one;
  ArFilterd global = least_squares_fit(series, order);
  global.noise_variance = std::max(global.noise_variance, 1e-12);
  one.filters = {global};
  one.transition = Eigen::MatrixXd::Ones(1, 1);
  one.initial = Eigen::VectorXd::Ones(1);
  out.push_back(one);
  if (max_states == 1) return out;

  const WindowEstimates est = window_estimates(series, order, window);
  std::vector<Eigen::VectorXd> chosen = {filter_vector(global)};
  std::vector<double> chosen_var = {global.noise_variance};
  Rng rng(derive_seed(seed, "init-split"));
  for (std::size_t m = 2; m <= max_states; ++m) {
    std::vector<std::size_t> labels;
    const std::size_t k = std::min<std::size_t>(m, static_cast<std::size_t>(est.filters.rows()));
    const Eigen::MatrixXd centers = kmeans_centers(est.filters, k, rng, labels);
    Eigen::VectorXd cluster_var = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd cluster_n = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      cluster_var(static_cast<Eigen::Index>(labels[i])) += est.variances(static_cast<Eigen::Index>(i));
      cluster_n(static_cast<Eigen::Index>(labels[i])) += 1.0;
    }
    Eigen::Index best = 0;
    double best_sum = -1.0;
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
      double s = 0.0;
      for (const auto& g : chosen) s += (centers.row(c).transpose() - g).norm();
      if (s > best_sum) {
        best_sum = s;
        best = c;
      }
    }
    chosen.push_back(centers.row(best).transpose());
    chosen_var.push_back(std::max(cluster_n(best) > 0 ? cluster_var(best) / cluster_n(best) : global.noise_variance,
                                  1e-12));
    SwitchingArModel model;
    for (std::size_t s = 0; s < chosen.size(); ++s) model.filters.push_back(filter_from_vector(chosen[s], chosen_var[s]));
    const auto mm = static_cast<Eigen::Index>(m);
    model.transition = Eigen::MatrixXd::Constant(mm, mm, 1.0 / static_cast<double>(m));
    model.initial = Eigen::VectorXd::Constant(mm, 1.0 / static_cast<double>(m));
    out.push_back(std::move(model));
  }
  return out;
}

FitResult fit_em(const Eigen::VectorXd& series, const SwitchingArModel& init, const FitOptions& options) {
  init.validate();
  const Eigen::Index L = init.order();
  const std::size_t n = modeled_steps(series, L);
  const std::size_t m = init.states();
  if (n <= std::max<std::size_t>(static_cast<std::size_t>(L) + 1, m * static_cast<std::size_t>(L + 2)))
    throw InvalidInput("fit_em: series too short for the requested model");

  MStepOptions mopt;
  mopt.variance_floor = options.variance_floor_fraction * sample_variance(series.tail(static_cast<Eigen::Index>(n)));

  FitResult out;
  SwitchingArModel model = init;
  std::optional<WindowEstimates> windows;
  bool degenerate_twice = false;
  EStepResult e = e_step(model, series);
  out.loglik_trace.push_back(e.loglik);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    MStepResult mres = m_step(e.weights, series, L, &model, mopt);
    bool restarted = false;
    out.ridge_used = out.ridge_used || mres.ridge_used;
    if (!mres.degenerate_states.empty()) {
      if (out.reseeded) {
        degenerate_twice = true;
      } else {
        // Reseed each degenerate state with the windowed estimate farthest
        // from the other states, then restart the ascent from there.
        if (!windows) {
          const std::size_t w = options.window_length ? options.window_length : std::min(default_window_length(L), n);
          windows = window_estimates(series, L, w);
        }
        for (std::size_t s : mres.degenerate_states) {
          Eigen::Index best = 0;
          double best_sum = -1.0;
          for (Eigen::Index r = 0; r < windows->filters.rows(); ++r) {
            double sum = 0.0;
            for (std::size_t o = 0; o < m; ++o)
              if (o != s) sum += (windows->filters.row(r).transpose() - filter_vector(mres.model.filters[o])).norm();
            if (sum > best_sum) {
              best_sum = sum;
              best = r;
            }
          }
          mres.model.filters[s] = filter_from_vector(windows->filters.row(best).transpose(),
                                                     std::max(windows->variances(best), mopt.variance_floor));
        }
        const double uniform = 1.0 / static_cast<double>(m);
        mres.model.transition = 0.5 * mres.model.transition.array() + 0.5 * uniform;
        mres.model.initial = 0.5 * mres.model.initial.array() + 0.5 * uniform;
        out.reseeded = true;
        restarted = true;
        out.loglik_trace.clear();
        out.surrogate_trace.clear();
      }
    }
    if (!restarted) out.surrogate_trace.push_back(expected_complete_loglik(e.weights, series, mres.model));
    model = std::move(mres.model);
    e = e_step(model, series);
    const double prev = out.loglik_trace.empty() ? -std::numeric_limits<double>::infinity() : out.loglik_trace.back();
    out.loglik_trace.push_back(e.loglik);
    out.n_iter = iter + 1;
    if (std::isfinite(prev) && (e.loglik - prev) < options.tol * std::abs(prev)) {
      out.converged = true;
      break;
    }
  }
  out.converged = out.converged && !degenerate_twice;
  out.model = std::move(model);
  out.weights = std::move(e.weights);
  out.loglik = e.loglik;
  out.mspe = observed_mspe(out.model, out.weights, series);
  return out;
}

double observed_mspe(const SwitchingArModel& model, const PosteriorWeights& weights, const Eigen::VectorXd& series) {
  const Eigen::Index L = model.order();
  const Eigen::MatrixXd z = regressors(series, L);
  const Eigen::VectorXd target = series.tail(z.rows());
  if (weights.marginal.rows() != z.rows() || weights.marginal.cols() != static_cast<Eigen::Index>(model.states()))
    throw InvalidInput("observed_mspe: weights do not match model and series");
  double total = 0.0;
  for (std::size_t s = 0; s < model.states(); ++s) {
    const Eigen::VectorXd resid = target + z * filter_vector(model.filters[s]);
    total += weights.marginal.col(static_cast<Eigen::Index>(s)).dot(resid.cwiseAbs2());
  }
  return total / static_cast<double>(z.rows());
}

double observed_mspe(const FitResult& fit, const Eigen::VectorXd& series) {
  return observed_mspe(fit.model, fit.weights, series);
}

std::vector<std::size_t> align_states(const SwitchingArModel& estimated, const SwitchingArModel& reference) {
  if (estimated.states() != reference.states()) throw InvalidInput("align_states: state counts differ");
  const std::size_t m = reference.states();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t s = 0; s < m; ++s)
      cost += (filter_vector(estimated.filters[perm[s]]) - filter_vector(reference.filters[s])).norm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace gapar
