// One PASS/FAIL line per acceptance criterion. Tolerances and seeds are fixed
// here; the process exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gapar/arcore.hpp"
#include "gapar/clustering.hpp"
#include "gapar/error.hpp"
#include "gapar/gapselect.hpp"
#include "gapar/random.hpp"
#include "gapar/sampler.hpp"
#include "gapar/switching.hpp"
#include "oracles.hpp"
#include "stats_util.hpp"

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

// Pinned tolerances.
constexpr double kPathAgreement = 1e-6;     // 1: relative, cov / roots / resultant
constexpr double kMcStandardErrors = 3.0;   // 1
constexpr std::uint64_t kMcSamples = 1'000'000;
constexpr double kClosedForm = 1e-10;       // 2
constexpr double kSamplerP = 0.001;         // 3
constexpr double kMedoidRatio = 1.05;       // 4
constexpr int kMedoidRequired = 95;         // 4, of 100
constexpr double kPathSum = 1e-10;          // 6
constexpr double kLoglikSlack = 1e-8;       // 6, relative
constexpr double kOls = 1e-9;               // 6

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass{false};
  std::string detail;
};

double relative(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Outcome distance_paths() {
  gapar::Rng rng(gapar::derive_seed(kSeed, "criterion-1"));
  double worst_rel = 0;
  double worst_se = 0;
  int degenerate = 0;
  int outside = 0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::Index L = 1 + i % 4;
    const auto a = gapar::sample_filter<double>(L, 1.0, rng);
    const auto b = gapar::sample_filter<double>(L, 1.0, rng);
    const double cov = gapar::distance_cov(a, b);
    const double res = gapar::distance_resultant(a, b);
    worst_rel = std::max(worst_rel, relative(cov, res));
    try {
      const double roots = gapar::distance_roots(a, b);
      worst_rel = std::max({worst_rel, relative(cov, roots), relative(res, roots)});
    } catch (const gapar::DegenerateCase&) {
      ++degenerate;
    }
    const auto mc = gapar::distance_mc(a, b, kMcSamples, gapar::derive_seed(kSeed, "criterion-1-mc", i));
    const double z = std::abs(mc.estimate - cov) / mc.std_error;
    worst_se = std::max(worst_se, z);
    outside += z > kMcStandardErrors;
  }
  std::ostringstream s;
  s << "max rel discrepancy " << worst_rel << " (< " << kPathAgreement << "), max |MC - D| / SE " << worst_se
    << ", pairs beyond " << kMcStandardErrors << " SE: " << outside << "/200, degenerate root cases " << degenerate;
  return {worst_rel < kPathAgreement && outside == 0, s.str()};
}

Outcome closed_form() {
  const double d = gapar::distance_cov(gapar::ArFilterd({-0.5}), gapar::ArFilterd({-0.3}));
  const double expected = 0.2 * 0.2 / (1.0 - 0.25);
  std::ostringstream s;
  s.precision(17);
  s << "D = " << d << ", expected " << expected;
  return {std::abs(d - expected) < kClosedForm, s.str()};
}

Outcome sampler_uniformity() {
  const auto batch = gapar::sample_batch<double>(2, 1.0, 1'000'000, gapar::derive_seed(kSeed, "criterion-3"));
  std::vector<long> counts(400, 0);
  std::vector<double> l2s;
  l2s.reserve(batch.filters.size());
  long violations = 0;
  for (const auto& f : batch.filters) {
    if (!gapar::is_stable(f, 1.0)) ++violations;
    const double l1 = f.coeffs[0];
    const double l2 = f.coeffs[1];
    l2s.push_back(l2);
    // Equal-area cells: bands of F(l2) = ((1 + l2) / 2)^2 by slices of l1 / (1 + l2).
    const double p = 0.25 * (1.0 + l2) * (1.0 + l2);
    const double u = l1 / (1.0 + l2);
    const int row = std::clamp(static_cast<int>(p * 20.0), 0, 19);
    const int col = std::clamp(static_cast<int>((u + 1.0) * 10.0), 0, 19);
    ++counts[static_cast<std::size_t>(row * 20 + col)];
  }
  const double chi2 = testutil::chi_square_uniform(counts);
  const double p_chi = testutil::chi_square_sf(chi2, 399.0);
  const double ks = testutil::ks_statistic(l2s, [](double v) { return 0.25 * (1.0 + v) * (1.0 + v); });
  const double p_ks = testutil::ks_sf(ks, static_cast<double>(l2s.size()));
  std::ostringstream s;
  s << "chi2(399) = " << chi2 << " p = " << p_chi << ", violations " << violations << ", lambda2 KS p = " << p_ks;
  return {p_chi > kSamplerP && violations == 0 && p_ks > kSamplerP, s.str()};
}

Outcome kmedoids_quality() {
  int good = 0;
  int single_good = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index L = 1 + i % 4;
    const auto batch = gapar::sample_batch<double>(L, 1.0, 8, gapar::derive_seed(kSeed, "criterion-4-batch", i));
    const auto dm = gapar::build_distance_matrix(batch);
    const double best = oracle::best_pair_wcsd(dm);
    gapar::Rng rng(gapar::derive_seed(kSeed, "criterion-4-seed", i));
    good += gapar::k_medoids_multistart(dm, 2, rng).wcsd <= kMedoidRatio * best;
    gapar::Rng rng1(gapar::derive_seed(kSeed, "criterion-4-single", i));
    single_good += gapar::k_medoids(dm, 2, gapar::seed_centers(dm, 2, rng1)).wcsd <= kMedoidRatio * best;
  }
  std::ostringstream s;
  s << good << "/100 within " << kMedoidRatio << "x of optimum with 20 restarts (single start: " << single_good
    << "/100)";
  return {good >= kMedoidRequired, s.str()};
}

Outcome reference_shape(gapar::ReferenceCurveCache& cache) {
  std::vector<std::vector<double>> curves;
  std::ostringstream s;
  s.precision(4);
  for (double r : {0.6, 0.8, 1.0}) {
    gapar::ReferenceCurveParams p;
    p.order = 4;
    p.radius = r;
    p.max_states = 6;
    p.count = 1000;
    p.iterations = 32;
    p.seed = gapar::derive_seed(kSeed, "criterion-5");
    p.jobs = jobs();
    curves.push_back(cache.get(p));
    s << "r=" << r << ":";
    for (double w : curves.back()) s << ' ' << w;
    s << "; ";
  }
  bool ok = true;
  for (const auto& c : curves)
    for (std::size_t m = 1; m < c.size(); ++m) ok = ok && c[m] <= c[m - 1];
  for (std::size_t m = 0; m < curves[0].size(); ++m) ok = ok && curves[0][m] < curves[1][m] && curves[1][m] < curves[2][m];
  return {ok, s.str()};
}

gapar::SwitchingArModel random_model(std::size_t states, Eigen::Index order, gapar::Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  gapar::SwitchingArModel m;
  for (std::size_t s = 0; s < states; ++s) {
    auto f = gapar::sample_filter<double>(order, 1.0, rng);
    f.intercept = 2.0 * u(rng) - 1.0;
    f.noise_variance = 0.5 + u(rng);
    m.filters.push_back(f);
  }
  const auto k = static_cast<Eigen::Index>(states);
  m.transition.resize(k, k);
  m.initial.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) m.transition(i, j) = u(rng);
    m.transition.row(i) /= m.transition.row(i).sum();
    m.initial(i) = u(rng);
  }
  m.initial /= m.initial.sum();
  return m;
}

Outcome em_correctness() {
  gapar::Rng rng(gapar::derive_seed(kSeed, "criterion-6"));
  std::normal_distribution<double> normal(0.0, 1.5);
  double worst_path = 0;
  int path_cases = 0;
  for (std::size_t states = 1; states <= 3; ++states)
    for (Eigen::Index steps = 2; steps <= 8; ++steps)
      for (Eigen::Index order = 1; order <= 2; ++order) {
        const auto m = random_model(states, order, rng);
        Eigen::VectorXd x(steps + order);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
        const auto brute = oracle::enumerate_paths(m, x);
        const auto e = gapar::e_step(m, x);
        worst_path = std::max(worst_path, std::abs(e.loglik - std::log(brute.likelihood)));
        worst_path = std::max(worst_path, (e.weights.marginal - brute.marginal).cwiseAbs().maxCoeff());
        for (std::size_t i = 0; i < brute.pairwise.size(); ++i)
          worst_path = std::max(worst_path, (e.weights.pairwise[i] - brute.pairwise[i]).cwiseAbs().maxCoeff());
        ++path_cases;
      }

  int runs = 0;
  int decreases = 0;
  for (const char* name : {"1", "2", "3"}) {
    const auto sc = gapar::scenario_by_name(name);
    for (int rep = 0; rep < 3; ++rep) {
      const auto truth = gapar::draw_scenario_model(sc, rng);
      const auto x = gapar::simulate_scenario(truth, 1000, gapar::derive_seed(kSeed, "criterion-6-series", runs)).values;
      const auto inits = gapar::init_split(x, sc.order, 6, 0, gapar::derive_seed(kSeed, "criterion-6-init", runs));
      for (const auto& init : inits) {
        const auto fit = gapar::fit_em(x, init);
        for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i)
          decreases += fit.loglik_trace[i] < fit.loglik_trace[i - 1] - kLoglikSlack * std::abs(fit.loglik_trace[i - 1]);
      }
      ++runs;
    }
  }

  double worst_ols = 0;
  for (Eigen::Index order = 1; order <= 4; ++order) {
    gapar::SwitchingArModel one;
    one.filters = {gapar::sample_filter<double>(order, 0.9, rng)};
    one.filters[0].intercept = 0.7;
    one.transition = Eigen::MatrixXd::Ones(1, 1);
    one.initial = Eigen::VectorXd::Ones(1);
    const auto x = gapar::simulate(one, 2000, Eigen::VectorXd::Zero(order), gapar::derive_seed(kSeed, "criterion-6-ols", order)).values;
    const Eigen::Index n = x.size() - order;
    gapar::PosteriorWeights w;
    w.marginal = Eigen::MatrixXd::Ones(n, 1);
    w.pairwise.assign(static_cast<std::size_t>(n - 1), Eigen::MatrixXd::Ones(1, 1));
    const auto f = gapar::m_step(w, x, order).model.filters[0];
    const Eigen::VectorXd psi = oracle::ols_normal_equations(x, order);
    worst_ols = std::max(worst_ols, std::abs(f.intercept - psi(0)));
    for (Eigen::Index l = 0; l < order; ++l) worst_ols = std::max(worst_ols, std::abs(f.coeffs(l) - psi(l + 1)));
  }

  std::ostringstream s;
  s << "path-sum max error " << worst_path << " over " << path_cases << " models; loglik decreases " << decreases
    << " over " << runs * 6 << " fits; OLS max error " << worst_ols;
  return {worst_path < kPathSum && decreases == 0 && worst_ols < kOls, s.str()};
}

std::string histogram(const std::vector<std::size_t>& h) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < h.size(); ++i) s << (i ? " " : "") << h[i];
  s << ']';
  return s.str();
}

Outcome figure_replica(gapar::ReferenceCurveCache& cache) {
  gapar::BenchmarkConfig c;
  c.scenario = gapar::scenario_by_name("1");
  c.instances = 20;
  c.length = 1000;
  c.max_states = 6;
  c.seed = gapar::derive_seed(kSeed, "criterion-7");
  c.methods = {gapar::Method::GapB};
  c.select.jobs = jobs();
  c.select.cache = &cache;
  const auto r = gapar::run_benchmark(c);
  const std::size_t used = c.instances - r.skipped;
  const std::size_t hits = r.histograms.at(gapar::Method::GapB)[2];
  std::ostringstream s;
  s << "Gap-B selected M=3 in " << hits << "/" << used << " (M=1..6 counts " << histogram(r.histograms.at(gapar::Method::GapB))
    << ", argmax-gap counts " << histogram(r.argmax_gap_histogram) << ", skipped " << r.skipped << ")";
  return {2 * hits > used && used > 0, s.str()};
}

Outcome table_analogue(gapar::ReferenceCurveCache& cache) {
  gapar::BenchmarkConfig c;
  c.scenario = gapar::scenario_by_name("3");
  c.instances = 20;
  c.length = 1000;
  c.max_states = 6;
  c.seed = gapar::derive_seed(kSeed, "criterion-8");
  c.select.jobs = jobs();
  c.select.cache = &cache;
  const auto r = gapar::run_benchmark(c);
  std::ostringstream s;
  for (auto m : c.methods)
    s << gapar::method_name(m) << ' ' << r.correct_rate(m) << ' ' << histogram(r.histograms.at(m)) << "; ";
  s << "skipped " << r.skipped;
  const double gb = r.correct_rate(gapar::Method::GapB);
  return {r.skipped < c.instances && gb >= r.correct_rate(gapar::Method::Aic) && gb >= r.correct_rate(gapar::Method::Bic),
          s.str()};
}

int run_shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::uint64_t fnv1a(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "gapar_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = GAPAR_CLI_PATH;
  if (run_shell(cli + " --seed 4 simulate --scenario fig3 --n 400 --out " + (root / "in.csv").string() + " >/dev/null") != 0)
    return {false, "could not create the input series"};
  {
    std::ofstream(root / "filters.csv") << "psi_1,psi_2\n-0.5,0.1\n0.3,-0.2\n0.1,0.4\n";
  }
  const std::string in = (root / "in.csv").string();
  const std::string filt = (root / "filters.csv").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"--seed 3 simulate --scenario 1 --n 1000 --out s.csv --model-out m.json", {"s.csv", "m.json"}},
      {"fit --input " + in + " --order 4 --states 3 --out f.json", {"f.json"}},
      {"--seed 5 select --input " + in + " --order 4 --max-states 4 --F 200 --iter 4 --out-prefix sel",
       {"sel.json", "sel_observed.csv", "sel_reference.csv"}},
      {"--seed 6 gen-filters --order 4 --radius 0.8 --count 100 --out g.csv", {"g.csv"}},
      {"--seed 7 distance --a -0.5 --b -0.3 --method mc --mc-samples 100000 --out d.json", {"d.json"}},
      {"distance --filters " + filt + " --method resultant --out dm.json", {"dm.json"}},
      {"--seed 8 benchmark --scenario 3 --instances 3 --n 300 --max-states 3 --F 100 --iter 2 --out-prefix b",
       {"b.json", "b.csv"}},
      {"--seed 9 reference-curve --order 2 --radius 0.6 --max-states 4 --F 100 --iter 4 --out-prefix rc",
       {"rc.json", "rc.csv"}},
  };
  bool ok = true;
  std::ostringstream s;
  for (const auto& [args, outputs] : cases) {
    std::vector<std::uint64_t> hashes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path d = root / ("rep" + std::to_string(rep));
      fs::remove_all(d);
      fs::create_directories(d);
      if (run_shell("cd " + d.string() + " && " + cli + " " + args + " >/dev/null 2>&1") != 0) {
        ok = false;
        s << "[failed: " << args << "] ";
        break;
      }
      for (const auto& o : outputs) hashes[rep].push_back(fnv1a(d / o));
    }
    std::istringstream words(args);
    std::string sub;
    while (words >> sub && (sub.rfind("--", 0) == 0 || std::isdigit(static_cast<unsigned char>(sub[0])))) {
    }
    const bool same = !hashes[0].empty() && hashes[0] == hashes[1];
    ok = ok && same;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", hashes[0].empty() ? 0ULL : static_cast<unsigned long long>(hashes[0][0]));
    s << sub << '=' << hex << (same ? "" : "(differs)") << ' ';
  }
  fs::remove_all(root);
  return {ok, s.str()};
}

}  // namespace

int main() {
  gapar::ReferenceCurveCache cache;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"distance three-path agreement", distance_paths},
      {"AR(1) closed form", closed_form},
      {"sampler uniformity", sampler_uniformity},
      {"k-medoids oracle equivalence", kmedoids_quality},
      {"reference-curve shape", [&] { return reference_shape(cache); }},
      {"EM correctness", em_correctness},
      {"three-state replica (Gap-B majority)", [&] { return figure_replica(cache); }},
      {"scenario 3 desk-scale comparison", [&] { return table_analogue(cache); }},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("criterion %zu %s: %s (%.1f s) %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
