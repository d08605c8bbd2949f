#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gapar/clustering.hpp"
#include "gapar/switching.hpp"

namespace gapar {

enum class GapVariant {
  Bounded,  // reference filters drawn inside the radius estimated from the data
  Unit,     // reference filters drawn inside the unit circle
};

struct SelectConfig {
  GapVariant variant{GapVariant::Bounded};
  std::size_t reference_count{0};  // F; 0 -> min(N, 1000)
  std::size_t reference_iterations{32};
  double delta{1e-4};
  std::size_t restarts{20};  // k-medoids restarts per M
  std::uint64_t seed{0};  // reference-curve seed
  std::uint64_t init_seed{0};
  std::size_t window_length{0};  // N0; 0 -> max(50, 5 (L + 1))
  FitOptions fit;
  unsigned jobs{1};
  ReferenceCurveCache* cache{nullptr};
};

struct GapCurves {
  std::size_t max_states{0};
  std::vector<double> observed;   // log W-hat_M
  std::vector<double> reference;  // log W_M
  double r_used{1.0};
  std::size_t selected{1};
  std::size_t argmax_gap{1};
  std::vector<std::string> warnings;

  double gap(std::size_t m) const { return reference.at(m - 1) - observed.at(m - 1); }
};

// Smallest M in [1, M_max) with gap(M) >= gap(M + 1), else M_max.
std::size_t apply_gap_rule(const std::vector<double>& log_observed, const std::vector<double>& log_reference);
std::size_t argmax_gap(const std::vector<double>& log_observed, const std::vector<double>& log_reference);

// min(max_m max|root(psi_m)|, 1), floored at 0.05.
double estimate_radius(const FitResult& fit_at_max);

// EM fits for M = 1..M_max from the split initialization.
std::vector<FitResult> fit_all(const Eigen::VectorXd& series, Eigen::Index order, std::size_t max_states,
                               const SelectConfig& config);

GapCurves select_from_fits(const std::vector<FitResult>& fits, Eigen::Index order, std::size_t steps,
                           const SelectConfig& config);
GapCurves select(const Eigen::VectorXd& series, Eigen::Index order, std::size_t max_states,
                 const SelectConfig& config);

// Free parameters: M (L + 2) filter and variance terms, M (M - 1) transition
// entries, M - 1 initial probabilities.
std::size_t parameter_count(std::size_t states, Eigen::Index order);

struct InformationChoice {
  std::size_t aic{1};
  std::size_t bic{1};
  std::vector<double> aic_values;
  std::vector<double> bic_values;
};

InformationChoice aic_bic(const std::vector<double>& logliks, Eigen::Index order, std::size_t steps);
InformationChoice aic_bic(const std::vector<FitResult>& fits, std::size_t steps);

struct Scenario {
  std::string name;
  Eigen::Index order{1};
  std::size_t states{1};
  double radius{1.0};
  double stay{0.98};
  double mean_low{-4.0};
  double mean_high{4.0};
};

// "1", "2", "3" (benchmark scenarios) and "fig3" (zero means).
Scenario scenario_by_name(const std::string& name);

// Filters uniform in R_L(r), means uniform on [mean_low, mean_high] turned
// into intercepts psi_0 = -mu (1 + sum psi), unit variances, sticky T,
// uniform initial law.
SwitchingArModel draw_scenario_model(const Scenario& scenario, Rng& rng);

// Series of `length` values (the first L act as presample), simulated after
// a discarded burn-in.
SimulatedSeries simulate_scenario(const SwitchingArModel& model, std::size_t length, std::uint64_t seed);

enum class Method { GapB, GapU, Aic, Bic };
std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct BenchmarkConfig {
  Scenario scenario;
  std::size_t instances{20};
  std::size_t length{1000};
  std::size_t max_states{6};
  std::uint64_t seed{1};
  std::vector<Method> methods{Method::GapB, Method::GapU, Method::Aic, Method::Bic};
  SelectConfig select;  // seed fields are overwritten from `seed`
};

struct InstanceRecord {
  std::size_t index{0};
  bool skipped{false};
  std::string error;
  std::map<Method, std::size_t> selected;
  std::optional<std::size_t> argmax_gap_b;
  double r_estimated{0};
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::size_t skipped{0};
  std::map<Method, std::vector<std::size_t>> histograms;  // index M - 1
  std::vector<std::size_t> argmax_gap_histogram;          // Gap-B curves, argmax rule
  std::vector<InstanceRecord> records;

  double correct_rate(Method m) const;
};

BenchmarkReport run_benchmark(const BenchmarkConfig& config);

}  // namespace gapar
