#include "gapar/gapselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gapar/error.hpp"
#include "gapar/parallel.hpp"
#include "gapar/sampler.hpp"

namespace gapar {

std::size_t apply_gap_rule(const std::vector<double>& log_observed, const std::vector<double>& log_reference) {
  if (log_observed.size() != log_reference.size() || log_observed.empty())
    throw InvalidInput("apply_gap_rule: curves must be non-empty and of equal length");
  const std::size_t max_states = log_observed.size();
  for (std::size_t m = 1; m < max_states; ++m) {
    const double here = log_reference[m - 1] - log_observed[m - 1];
    const double next = log_reference[m] - log_observed[m];
    if (here >= next) return m;
  }
  return max_states;
}

std::size_t argmax_gap(const std::vector<double>& log_observed, const std::vector<double>& log_reference) {
  std::size_t best = 1;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= log_observed.size(); ++m) {
    const double g = log_reference[m - 1] - log_observed[m - 1];
    if (g > best_gap) {
      best_gap = g;
      best = m;
    }
  }
  return best;
}

double estimate_radius(const FitResult& fit_at_max) {
  double r = 0.0;
  for (const auto& f : fit_at_max.model.filters) r = std::max(r, max_root_modulus(f));
  return std::max(std::min(r, 1.0), 0.05);
}

std::vector<FitResult> fit_all(const Eigen::VectorXd& series, Eigen::Index order, std::size_t max_states,
                               const SelectConfig& config) {
  const auto inits = init_split(series, order, max_states, config.window_length, config.init_seed);
  std::vector<FitResult> fits(max_states);
  FitOptions opts = config.fit;
  if (opts.window_length == 0) opts.window_length = config.window_length;
  detail::parallel_for(max_states, config.jobs, [&](std::size_t i) { fits[i] = fit_em(series, inits[i], opts); });
  return fits;
}

GapCurves select_from_fits(const std::vector<FitResult>& fits, Eigen::Index order, std::size_t steps,
                           const SelectConfig& config) {
  if (fits.empty()) throw InvalidInput("select: no fits");
  GapCurves curves;
  curves.max_states = fits.size();
  for (std::size_t m = 0; m < fits.size(); ++m) {
    if (!(fits[m].mspe > 0.0)) throw NumericalFailure("select: non-positive observed MSPE");
    curves.observed.push_back(std::log(fits[m].mspe));
    if (!fits[m].converged) curves.warnings.push_back("fit with M=" + std::to_string(m + 1) + " did not converge");
  }
  const double r = config.variant == GapVariant::Unit ? 1.0 : estimate_radius(fits.back());

  ReferenceCurveParams params;
  params.order = order;
  params.radius = ReferenceCurveCache::round_radius(r);
  params.max_states = fits.size();
  params.count = config.reference_count ? config.reference_count : std::min<std::size_t>(steps, 1000);
  params.iterations = config.reference_iterations;
  params.delta = config.delta;
  params.restarts = config.restarts;
  params.seed = config.seed;
  params.jobs = config.jobs;
  curves.r_used = params.radius;
  std::vector<double> w = config.cache ? config.cache->get(params) : reference_curve(params);
  for (std::size_t m = 0; m < fits.size(); ++m) curves.reference.push_back(std::log(w[m]));
  curves.selected = apply_gap_rule(curves.observed, curves.reference);
  curves.argmax_gap = argmax_gap(curves.observed, curves.reference);
  return curves;
}

GapCurves select(const Eigen::VectorXd& series, Eigen::Index order, std::size_t max_states,
                 const SelectConfig& config) {
  if (max_states < 1) throw InvalidInput("select: max_states must be >= 1");
  const auto fits = fit_all(series, order, max_states, config);
  return select_from_fits(fits, order, static_cast<std::size_t>(series.size() - order), config);
}

std::size_t parameter_count(std::size_t states, Eigen::Index order) {
  const std::size_t m = states;
  return m * static_cast<std::size_t>(order + 2) + m * (m - 1) + (m - 1);
}

InformationChoice aic_bic(const std::vector<double>& logliks, Eigen::Index order, std::size_t steps) {
  if (logliks.empty()) throw InvalidInput("aic_bic: no log-likelihoods");
  InformationChoice out;
  double best_aic = std::numeric_limits<double>::infinity();
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logliks.size(); ++i) {
    const auto p = static_cast<double>(parameter_count(i + 1, order));
    const double aic = -2.0 * logliks[i] + 2.0 * p;
    const double bic = -2.0 * logliks[i] + p * std::log(static_cast<double>(steps));
    out.aic_values.push_back(aic);
    out.bic_values.push_back(bic);
    if (aic < best_aic) {
      best_aic = aic;
      out.aic = i + 1;
    }
    if (bic < best_bic) {
      best_bic = bic;
      out.bic = i + 1;
    }
  }
  return out;
}

InformationChoice aic_bic(const std::vector<FitResult>& fits, std::size_t steps) {
  std::vector<double> ll;
  for (const auto& f : fits) ll.push_back(f.loglik);
  return aic_bic(ll, fits.empty() ? 0 : fits.front().model.order(), steps);
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "1") return {"1", 4, 3, 1.0, 0.98, -4.0, 4.0};
  if (name == "2") return {"2", 1, 4, 0.8, 0.98, -4.0, 4.0};
  if (name == "3") return {"3", 2, 2, 0.6, 0.98, -4.0, 4.0};
  if (name == "fig3") return {"fig3", 4, 3, 1.0, 0.98, 0.0, 0.0};
  throw InvalidInput("unknown scenario '" + name + "' (expected 1, 2, 3 or fig3)");
}

SwitchingArModel draw_scenario_model(const Scenario& s, Rng& rng) {
  SwitchingArModel model;
  std::uniform_real_distribution<double> mean(s.mean_low, s.mean_high);
  for (std::size_t m = 0; m < s.states; ++m) {
    ArFilterd f = sample_filter<double>(s.order, s.radius, rng);
    const double mu = s.mean_low == s.mean_high ? s.mean_low : mean(rng);
    f.intercept = -mu * (1.0 + f.coeffs.sum());
    f.noise_variance = 1.0;
    model.filters.push_back(std::move(f));
  }
  model.transition = sticky_transition(s.states, s.stay);
  model.initial = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s.states), 1.0 / static_cast<double>(s.states));
  return model;
}

SimulatedSeries simulate_scenario(const SwitchingArModel& model, std::size_t length, std::uint64_t seed) {
  constexpr std::size_t burn = 100;
  const Eigen::Index L = model.order();
  Eigen::VectorXd warmup = Eigen::VectorXd::Constant(L, model.filters.front().mean());
  SimulatedSeries full = simulate(model, length + burn, warmup, seed);
  SimulatedSeries out;
  out.values = full.values.tail(static_cast<Eigen::Index>(length));
  out.states.assign(full.states.end() - static_cast<std::ptrdiff_t>(length), full.states.end());
  return out;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::GapB: return "gap-b";
    case Method::GapU: return "gap-u";
    case Method::Aic: return "aic";
    case Method::Bic: return "bic";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "gap-b") return Method::GapB;
  if (name == "gap-u") return Method::GapU;
  if (name == "aic") return Method::Aic;
  if (name == "bic") return Method::Bic;
  throw InvalidInput("unknown method '" + name + "' (expected gap-b, gap-u, aic or bic)");
}

double BenchmarkReport::correct_rate(Method m) const {
  const auto it = histograms.find(m);
  if (it == histograms.end()) throw InvalidInput("correct_rate: method not in report");
  const std::size_t used = config.instances - skipped;
  if (used == 0) return 0.0;
  const std::size_t truth = config.scenario.states;
  const std::size_t hits = truth <= it->second.size() ? it->second[truth - 1] : 0;
  return static_cast<double>(hits) / static_cast<double>(used);
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  if (config.max_states < 1) throw InvalidInput("run_benchmark: max_states must be >= 1");
  if (config.methods.empty()) throw InvalidInput("run_benchmark: no methods selected");
  BenchmarkReport report;
  report.config = config;
  for (Method m : config.methods) report.histograms[m].assign(config.max_states, 0);
  report.argmax_gap_histogram.assign(config.max_states, 0);
  report.records.resize(config.instances);

  ReferenceCurveCache local_cache;
  SelectConfig base = config.select;
  base.seed = derive_seed(config.seed, "reference");
  if (!base.cache) base.cache = &local_cache;
  const bool want_gap_b = std::find(config.methods.begin(), config.methods.end(), Method::GapB) != config.methods.end();
  const bool want_gap_u = std::find(config.methods.begin(), config.methods.end(), Method::GapU) != config.methods.end();

  // Instances run in parallel; each instance's fits run sequentially.
  const unsigned jobs = base.jobs;
  base.jobs = 1;
  detail::parallel_for(config.instances, jobs, [&](std::size_t i) {
    InstanceRecord& rec = report.records[i];
    rec.index = i;
    try {
      Rng rng(derive_seed(config.seed, "benchmark-model", i));
      const SwitchingArModel truth = draw_scenario_model(config.scenario, rng);
      const SimulatedSeries sim = simulate_scenario(truth, config.length, derive_seed(config.seed, "benchmark-series", i));
      SelectConfig sc = base;
      sc.init_seed = derive_seed(config.seed, "benchmark-init", i);
      const auto fits = fit_all(sim.values, config.scenario.order, config.max_states, sc);
      const std::size_t steps = config.length - static_cast<std::size_t>(config.scenario.order);
      if (want_gap_b) {
        sc.variant = GapVariant::Bounded;
        const GapCurves g = select_from_fits(fits, config.scenario.order, steps, sc);
        rec.selected[Method::GapB] = g.selected;
        rec.argmax_gap_b = g.argmax_gap;
        rec.r_estimated = g.r_used;
      }
      if (want_gap_u) {
        sc.variant = GapVariant::Unit;
        rec.selected[Method::GapU] = select_from_fits(fits, config.scenario.order, steps, sc).selected;
      }
      const InformationChoice ic = aic_bic(fits, steps);
      for (Method m : config.methods) {
        if (m == Method::Aic) rec.selected[m] = ic.aic;
        if (m == Method::Bic) rec.selected[m] = ic.bic;
      }
    } catch (const Error& e) {
      rec.skipped = true;
      rec.error = e.what();
    }
  });

  for (const auto& rec : report.records) {
    if (rec.skipped) {
      ++report.skipped;
      continue;
    }
    for (Method m : config.methods) ++report.histograms[m][rec.selected.at(m) - 1];
    if (rec.argmax_gap_b) ++report.argmax_gap_histogram[*rec.argmax_gap_b - 1];
  }
  return report;
}

}  // namespace gapar
