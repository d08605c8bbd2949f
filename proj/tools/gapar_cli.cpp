// gapar: command-line front end.
//
// Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gapar/arcore.hpp"
#include "gapar/clustering.hpp"
#include "gapar/error.hpp"
#include "gapar/gapselect.hpp"
#include "gapar/io.hpp"
#include "gapar/sampler.hpp"
#include "gapar/switching.hpp"

namespace {

using gapar::io::Json;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// Resolved value of every option of `app` and its parents, defaults included.
Json resolved_config(const CLI::App* app) {
  Json out = Json::object();
  for (const CLI::App* a = app; a != nullptr; a = a->get_parent()) {
    for (const CLI::Option* opt : a->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || out.contains(name)) continue;
      std::string value;
      if (opt->count() > 0) {
        const auto& res = opt->results();
        for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      } else {
        value = opt->get_default_str();
      }
      out[name] = value;
    }
  }
  out["subcommand"] = app->get_name();
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gapar::InvalidInput("invalid number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw gapar::InvalidInput("empty coefficient list");
  return out;
}

gapar::ArFilterd filter_from_list(const std::string& coeffs, double intercept, double variance) {
  const auto c = parse_list(coeffs);
  gapar::ArFilterd f(Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
  f.intercept = intercept;
  f.noise_variance = variance;
  return f;
}

struct Globals {
  std::uint64_t seed{1};
  unsigned jobs{1};
};

struct SimulateArgs {
  std::string scenario;
  std::string model;
  std::size_t n{1000};
  std::string out;
  std::string model_out;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, const Json& config) {
  if (a.scenario.empty() == a.model.empty()) throw gapar::InvalidInput("simulate: give exactly one of --scenario or --model");
  gapar::SwitchingArModel model;
  if (!a.scenario.empty()) {
    gapar::Rng rng(gapar::derive_seed(g.seed, "simulate-model"));
    model = gapar::draw_scenario_model(gapar::scenario_by_name(a.scenario), rng);
  } else {
    const Json j = gapar::io::read_json(a.model);
    model = gapar::io::model_from_json(j.contains("model") ? j.at("model") : j);
  }
  model.validate();
  if (a.n <= static_cast<std::size_t>(model.order())) throw gapar::InvalidInput("simulate: --n must exceed the model order");
  const auto sim = gapar::simulate_scenario(model, a.n, gapar::derive_seed(g.seed, "simulate-series"));
  gapar::io::write_series_csv(a.out, sim.values, sim.states, config);
  if (!a.model_out.empty()) gapar::io::write_json(a.model_out, Json{{"model", gapar::io::model_to_json(model)}}, config);
  return 0;
}

struct FitArgs {
  std::string input;
  Eigen::Index order{1};
  std::size_t states{1};
  std::size_t max_iter{500};
  double tol{1e-6};
  std::size_t window{0};
  std::string out;
};

int cmd_fit(const FitArgs& a, const Globals& g, const Json& config) {
  const auto data = gapar::io::read_series_csv(a.input);
  const auto inits = gapar::init_split(data.values, a.order, a.states, a.window, gapar::derive_seed(g.seed, "init"));
  gapar::FitOptions opts;
  opts.max_iter = a.max_iter;
  opts.tol = a.tol;
  opts.window_length = a.window;
  const auto fit = gapar::fit_em(data.values, inits.back(), opts);
  gapar::io::write_json(a.out, gapar::io::fit_to_json(fit), config);
  std::cout << "loglik=" << gapar::io::format_double(fit.loglik) << " converged=" << (fit.converged ? 1 : 0) << '\n';
  return 0;
}

struct SelectArgs {
  std::string input;
  Eigen::Index order{1};
  std::size_t max_states{6};
  std::string variant{"B"};
  std::size_t count{0};
  std::size_t iterations{32};
  double delta{1e-4};
  std::size_t restarts{20};
  std::size_t window{0};
  std::size_t max_iter{500};
  double tol{1e-6};
  std::string out_prefix;
  std::string cache_dir;
};

int cmd_select(const SelectArgs& a, const Globals& g, const Json& config) {
  const auto data = gapar::io::read_series_csv(a.input);
  std::optional<gapar::ReferenceCurveCache> cache;
  gapar::SelectConfig sc;
  sc.variant = a.variant == "U" ? gapar::GapVariant::Unit : gapar::GapVariant::Bounded;
  sc.reference_count = a.count;
  sc.reference_iterations = a.iterations;
  sc.delta = a.delta;
  sc.restarts = a.restarts;
  sc.seed = gapar::derive_seed(g.seed, "reference");
  sc.init_seed = gapar::derive_seed(g.seed, "init");
  sc.window_length = a.window;
  sc.fit.max_iter = a.max_iter;
  sc.fit.tol = a.tol;
  sc.jobs = g.jobs;
  if (!a.cache_dir.empty()) {
    cache.emplace(a.cache_dir);
    sc.cache = &*cache;
  }
  const auto fits = gapar::fit_all(data.values, a.order, a.max_states, sc);
  const auto steps = static_cast<std::size_t>(data.values.size() - a.order);
  const auto curves = gapar::select_from_fits(fits, a.order, steps, sc);
  const auto ic = gapar::aic_bic(fits, steps);
  Json body = gapar::io::curves_to_json(curves);
  body["aic"] = ic.aic_values;
  body["bic"] = ic.bic_values;
  body["aic_M"] = ic.aic;
  body["bic_M"] = ic.bic;
  gapar::io::write_json(a.out_prefix + ".json", body, config);
  gapar::io::write_curve_csv(a.out_prefix + "_observed.csv", "log_W_observed", curves.observed, config);
  gapar::io::write_curve_csv(a.out_prefix + "_reference.csv", "log_W_reference", curves.reference, config);
  for (const auto& w : curves.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "selected_M=" << curves.selected << '\n';
  return 0;
}

struct GenFiltersArgs {
  Eigen::Index order{1};
  double radius{1.0};
  std::size_t count{1000};
  std::string out;
};

int cmd_gen_filters(const GenFiltersArgs& a, const Globals& g, const Json& config) {
  const auto batch = gapar::sample_batch<double>(a.order, a.radius, a.count, gapar::derive_seed(g.seed, "gen-filters"));
  gapar::io::write_filters_csv(a.out, batch.filters, config);
  return 0;
}

struct DistanceArgs {
  std::string a, b;
  double a_intercept{0}, b_intercept{0};
  double a_variance{1}, b_variance{1};
  std::string method{"cov"};
  std::size_t mc_samples{1000000};
  std::string filters;
  std::string out;
};

int cmd_distance(const DistanceArgs& a, const Globals& g, const Json& config) {
  Json body;
  if (!a.filters.empty()) {
    const auto filters = gapar::io::read_filters_csv(a.filters);
    const auto dm = gapar::build_distance_matrix(filters, g.jobs);
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < dm.rows(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(dm.cols()));
      for (Eigen::Index k = 0; k < dm.cols(); ++k) r[static_cast<std::size_t>(k)] = dm(i, k);
      rows.push_back(r);
    }
    body["matrix"] = rows;
  } else {
    if (a.a.empty() || a.b.empty()) throw gapar::InvalidInput("distance: give --a and --b, or --filters");
    const auto fa = filter_from_list(a.a, a.a_intercept, a.a_variance);
    const auto fb = filter_from_list(a.b, a.b_intercept, a.b_variance);
    double d = 0;
    if (a.method == "cov") {
      d = gapar::distance_cov(fa, fb);
    } else if (a.method == "roots") {
      d = gapar::distance_roots(fa, fb);
    } else if (a.method == "resultant") {
      d = gapar::distance_resultant(fa, fb);
    } else if (a.method == "full") {
      d = gapar::distance_full(fa, fb);
    } else {
      const auto mc = gapar::distance_mc(fa, fb, a.mc_samples, gapar::derive_seed(g.seed, "distance-mc"));
      d = mc.estimate;
      body["std_error"] = mc.std_error;
    }
    body["distance"] = d;
    std::cout << "distance=" << gapar::io::format_double(d) << '\n';
  }
  if (!a.out.empty()) gapar::io::write_json(a.out, body, config);
  return 0;
}

struct BenchmarkArgs {
  std::string scenario{"3"};
  std::size_t instances{20};
  std::size_t n{1000};
  std::size_t max_states{6};
  std::vector<std::string> methods{"gap-b", "gap-u", "aic", "bic"};
  std::size_t count{0};
  std::size_t iterations{32};
  std::size_t restarts{20};
  std::size_t max_iter{500};
  std::string out_prefix;
  std::string cache_dir;
};

int cmd_benchmark(const BenchmarkArgs& a, const Globals& g, const Json& config) {
  gapar::BenchmarkConfig bc;
  bc.scenario = gapar::scenario_by_name(a.scenario);
  bc.instances = a.instances;
  bc.length = a.n;
  bc.max_states = a.max_states;
  bc.seed = g.seed;
  bc.methods.clear();
  for (const auto& m : a.methods) bc.methods.push_back(gapar::method_from_name(m));
  bc.select.reference_count = a.count;
  bc.select.reference_iterations = a.iterations;
  bc.select.restarts = a.restarts;
  bc.select.fit.max_iter = a.max_iter;
  bc.select.jobs = g.jobs;
  std::optional<gapar::ReferenceCurveCache> cache;
  if (!a.cache_dir.empty()) {
    cache.emplace(a.cache_dir);
    bc.select.cache = &*cache;
  }
  const auto report = gapar::run_benchmark(bc);
  gapar::io::write_json(a.out_prefix + ".json", gapar::io::report_to_json(report), config);
  gapar::io::write_report_csv(a.out_prefix + ".csv", report, config);
  for (const auto& [m, h] : report.histograms) {
    std::cout << gapar::method_name(m);
    for (auto c : h) std::cout << ' ' << c;
    std::cout << '\n';
  }
  if (report.skipped > 0) std::cout << "skipped=" << report.skipped << '\n';
  return 0;
}

struct RefCurveArgs {
  Eigen::Index order{1};
  double radius{1.0};
  std::size_t max_states{6};
  std::size_t count{1000};
  std::size_t iterations{32};
  double delta{1e-4};
  std::size_t restarts{20};
  std::string out_prefix;
  std::string cache_dir;
};

int cmd_refcurve(const RefCurveArgs& a, const Globals& g, const Json& config) {
  gapar::ReferenceCurveParams p;
  p.order = a.order;
  p.radius = a.radius;
  p.max_states = a.max_states;
  p.count = a.count;
  p.iterations = a.iterations;
  p.delta = a.delta;
  p.restarts = a.restarts;
  p.seed = gapar::derive_seed(g.seed, "reference");
  p.jobs = g.jobs;
  std::vector<double> w;
  if (!a.cache_dir.empty()) {
    gapar::ReferenceCurveCache cache(a.cache_dir);
    p.radius = gapar::ReferenceCurveCache::round_radius(p.radius);
    w = cache.get(p);
  } else {
    w = gapar::reference_curve(p);
  }
  std::vector<double> logw;
  for (double v : w) logw.push_back(std::log(v));
  gapar::io::write_json(a.out_prefix + ".json", Json{{"W", w}, {"log_W", logw}}, config);
  gapar::io::write_curve_csv(a.out_prefix + ".csv", "log_W_reference", logw, config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gap-statistic state-count selection for switching autoregressions"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI file with option values; command-line flags override it");
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  int status = 0;
  std::function<int(const Json&)> run;

  auto* sim = app.add_subcommand("simulate", "Simulate a switching AR series");
  SimulateArgs sa;
  sim->add_option("--scenario", sa.scenario, "1, 2, 3 or fig3")->check(CLI::IsMember({"1", "2", "3", "fig3"}));
  sim->add_option("--model", sa.model, "Model JSON")->check(CLI::ExistingFile);
  sim->add_option("--n", sa.n, "Series length (first L values are presample)")->check(CLI::PositiveNumber);
  sim->add_option("--out", sa.out, "Series CSV")->required();
  sim->add_option("--model-out", sa.model_out, "Write the generating model as JSON");
  sim->callback([&] { run = [&](const Json& c) { return cmd_simulate(sa, g, c); }; });

  auto* fit = app.add_subcommand("fit", "EM fit of a switching AR model");
  FitArgs fa;
  fit->add_option("--input", fa.input, "Series CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--order", fa.order, "AR order L")->required()->check(CLI::Range(1, 64));
  fit->add_option("--states", fa.states, "Number of states M")->required()->check(CLI::Range(1, 64));
  fit->add_option("--max-iter", fa.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  fit->add_option("--tol", fa.tol, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
  fit->add_option("--window", fa.window, "Window length for initialization (0: default)");
  fit->add_option("--out", fa.out, "Fit JSON")->required();
  fit->callback([&] { run = [&](const Json& c) { return cmd_fit(fa, g, c); }; });

  auto* sel = app.add_subcommand("select", "Select the number of states");
  SelectArgs se;
  sel->add_option("--input", se.input, "Series CSV")->required()->check(CLI::ExistingFile);
  sel->add_option("--order", se.order, "AR order L")->required()->check(CLI::Range(1, 64));
  sel->add_option("--max-states", se.max_states, "Largest M tried")->check(CLI::Range(1, 64));
  sel->add_option("--variant", se.variant, "B (estimated radius) or U (unit radius)")->check(CLI::IsMember({"B", "U"}));
  sel->add_option("--F", se.count, "Reference filters per batch (0: min(N, 1000))");
  sel->add_option("--iter", se.iterations, "Reference batches")->check(CLI::PositiveNumber);
  sel->add_option("--delta", se.delta, "k-medoids relative tolerance")->check(CLI::Range(1e-15, 0.5));
  sel->add_option("--restarts", se.restarts, "k-medoids restarts per M");
  sel->add_option("--window", se.window, "Window length for initialization (0: default)");
  sel->add_option("--max-iter", se.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  sel->add_option("--tol", se.tol, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
  sel->add_option("--out-prefix", se.out_prefix, "Prefix for the JSON and curve CSVs")->required();
  sel->add_option("--cache-dir", se.cache_dir, "Reference-curve cache directory");
  sel->callback([&] { run = [&](const Json& c) { return cmd_select(se, g, c); }; });

  auto* gen = app.add_subcommand("gen-filters", "Draw stable filters uniformly");
  GenFiltersArgs ga;
  gen->add_option("--order", ga.order, "AR order L")->required()->check(CLI::Range(1, 64));
  gen->add_option("--radius", ga.radius, "Root radius r in (0, 1]")->check(CLI::Range(1e-12, 1.0));
  gen->add_option("--count", ga.count, "Number of filters")->check(CLI::PositiveNumber);
  gen->add_option("--out", ga.out, "Filter CSV")->required();
  gen->callback([&] { run = [&](const Json& c) { return cmd_gen_filters(ga, g, c); }; });

  auto* dist = app.add_subcommand("distance", "Mismatch distance between filters");
  DistanceArgs da;
  dist->add_option("--a", da.a, "Coefficients psi_1..psi_L of A, comma separated");
  dist->add_option("--b", da.b, "Coefficients psi_1..psi_L of B, comma separated");
  dist->add_option("--a-intercept", da.a_intercept, "Intercept of A");
  dist->add_option("--b-intercept", da.b_intercept, "Intercept of B");
  dist->add_option("--a-variance", da.a_variance, "Noise variance of A")->check(CLI::PositiveNumber);
  dist->add_option("--b-variance", da.b_variance, "Noise variance of B")->check(CLI::PositiveNumber);
  dist->add_option("--method", da.method, "cov, roots, resultant, full or mc")
      ->check(CLI::IsMember({"cov", "roots", "resultant", "full", "mc"}));
  dist->add_option("--mc-samples", da.mc_samples, "Monte-Carlo sample count")->check(CLI::PositiveNumber);
  dist->add_option("--filters", da.filters, "Filter CSV; writes the pairwise matrix")->check(CLI::ExistingFile);
  dist->add_option("--out", da.out, "Result JSON");
  dist->callback([&] { run = [&](const Json& c) { return cmd_distance(da, g, c); }; });

  auto* bench = app.add_subcommand("benchmark", "Compare Gap-B, Gap-U, AIC and BIC on simulated scenarios");
  BenchmarkArgs ba;
  bench->add_option("--scenario", ba.scenario, "1, 2, 3 or fig3")->check(CLI::IsMember({"1", "2", "3", "fig3"}));
  bench->add_option("--instances", ba.instances, "Number of simulated series")->check(CLI::PositiveNumber);
  bench->add_option("--n", ba.n, "Series length")->check(CLI::PositiveNumber);
  bench->add_option("--max-states", ba.max_states, "Largest M tried")->check(CLI::Range(1, 64));
  bench->add_option("--methods", ba.methods, "Comma-separated subset of gap-b,gap-u,aic,bic")
      ->delimiter(',')
      ->check(CLI::IsMember({"gap-b", "gap-u", "aic", "bic"}));
  bench->add_option("--F", ba.count, "Reference filters per batch (0: min(N, 1000))");
  bench->add_option("--iter", ba.iterations, "Reference batches")->check(CLI::PositiveNumber);
  bench->add_option("--restarts", ba.restarts, "k-medoids restarts per M");
  bench->add_option("--max-iter", ba.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  bench->add_option("--out-prefix", ba.out_prefix, "Prefix for the report JSON and CSV")->required();
  bench->add_option("--cache-dir", ba.cache_dir, "Reference-curve cache directory");
  bench->callback([&] { run = [&](const Json& c) { return cmd_benchmark(ba, g, c); }; });

  auto* ref = app.add_subcommand("reference-curve", "Compute a reference curve");
  RefCurveArgs ra;
  ref->add_option("--order", ra.order, "AR order L")->required()->check(CLI::Range(1, 64));
  ref->add_option("--radius", ra.radius, "Root radius r in (0, 1]")->check(CLI::Range(1e-12, 1.0));
  ref->add_option("--max-states", ra.max_states, "Largest M")->check(CLI::Range(1, 64));
  ref->add_option("--F", ra.count, "Filters per batch")->check(CLI::PositiveNumber);
  ref->add_option("--iter", ra.iterations, "Batches")->check(CLI::PositiveNumber);
  ref->add_option("--delta", ra.delta, "k-medoids relative tolerance")->check(CLI::Range(1e-15, 0.5));
  ref->add_option("--restarts", ra.restarts, "k-medoids restarts per M");
  ref->add_option("--out-prefix", ra.out_prefix, "Prefix for the JSON and CSV")->required();
  ref->add_option("--cache-dir", ra.cache_dir, "Reference-curve cache directory");
  ref->callback([&] { run = [&](const Json& c) { return cmd_refcurve(ra, g, c); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const CLI::App* active = app.get_subcommands().front();
    status = run(resolved_config(active));
  } catch (const gapar::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const gapar::UnsupportedOrder& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const gapar::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return status;
}
