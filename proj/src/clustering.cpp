#include "gapar/clustering.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "gapar/error.hpp"
#include "gapar/parallel.hpp"

namespace gapar {

DistanceMatrix build_distance_matrix(const std::vector<ArFilterd>& filters, unsigned jobs) {
  const auto n = static_cast<Eigen::Index>(filters.size());
  DistanceMatrix dm(n, n);
  detail::parallel_for(filters.size(), jobs, [&](std::size_t row) {
    const auto u = static_cast<Eigen::Index>(row);
    StationaryMoments<double> moments;
    try {
      moments = stationary_moments(filters[row]);
    } catch (const Error& e) {
      throw InvalidInput("build_distance_matrix: filter " + std::to_string(u) + ": " + e.what());
    }
    for (Eigen::Index v = 0; v < n; ++v) {
      if (v == u) {
        dm(u, v) = 0.0;
        continue;
      }
      const double d = distance_cov(moments, filters[row].coeffs, filters[static_cast<std::size_t>(v)].coeffs);
      if (!std::isfinite(d))
        throw NumericalFailure("build_distance_matrix: non-finite distance for pair (" + std::to_string(u) + ", " +
                               std::to_string(v) + ")");
      dm(u, v) = d;
    }
  });
  return dm;
}

std::vector<Eigen::Index> assign_to_centers(const DistanceMatrix& dm, const std::vector<Eigen::Index>& centers) {
  const Eigen::Index n = dm.cols();
  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), 0);
  for (Eigen::Index u = 0; u < n; ++u) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < centers.size(); ++m) {
      const double d = dm(centers[m], u);
      if (d < best) {
        best = d;
        assignment[static_cast<std::size_t>(u)] = static_cast<Eigen::Index>(m);
      }
    }
  }
  return assignment;
}

double within_cluster_sum(const DistanceMatrix& dm, const std::vector<Eigen::Index>& centers,
                          const std::vector<Eigen::Index>& assignment) {
  double w = 0.0;
  for (Eigen::Index u = 0; u < dm.cols(); ++u)
    w += dm(centers[static_cast<std::size_t>(assignment[static_cast<std::size_t>(u)])], u);
  return w;
}

std::vector<Eigen::Index> seed_centers(const DistanceMatrix& dm, std::size_t m, Rng& rng) {
  const Eigen::Index n = dm.rows();
  if (m < 1 || static_cast<Eigen::Index>(m) > n) throw InvalidInput("seed_centers: need 1 <= M <= F");
  std::vector<Eigen::Index> centers;
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.push_back(pick(rng));
  chosen[static_cast<std::size_t>(centers[0])] = 1;
  Eigen::VectorXd nearest = dm.row(centers[0]).transpose();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centers.size() < m) {
    double total = 0.0;
    for (Eigen::Index u = 0; u < n; ++u)
      if (!chosen[static_cast<std::size_t>(u)]) total += nearest(u);
    Eigen::Index next = -1;
    if (total > 0.0) {
      double target = unit(rng) * total;
      for (Eigen::Index u = 0; u < n; ++u) {
        if (chosen[static_cast<std::size_t>(u)]) continue;
        target -= nearest(u);
        if (target <= 0.0 && nearest(u) > 0.0) {
          next = u;
          break;
        }
      }
      if (next < 0) {
        for (Eigen::Index u = n - 1; u >= 0; --u)
          if (!chosen[static_cast<std::size_t>(u)] && nearest(u) > 0.0) {
            next = u;
            break;
          }
      }
    }
    if (next < 0) {
      // every remaining point coincides with a chosen center
      std::vector<Eigen::Index> rest;
      for (Eigen::Index u = 0; u < n; ++u)
        if (!chosen[static_cast<std::size_t>(u)]) rest.push_back(u);
      std::uniform_int_distribution<std::size_t> pick_rest(0, rest.size() - 1);
      next = rest[pick_rest(rng)];
    }
    centers.push_back(next);
    chosen[static_cast<std::size_t>(next)] = 1;
    nearest = nearest.cwiseMin(dm.row(next).transpose());
  }
  return centers;
}

namespace {

// Nearest and second-nearest center distances per point; a single swap is
// then evaluated in O(F).
struct NearestCache {
  std::vector<Eigen::Index> first;  // position in centers
  Eigen::VectorXd d1;
  Eigen::VectorXd d2;

  void rebuild(const DistanceMatrix& dm, const std::vector<Eigen::Index>& centers) {
    const Eigen::Index n = dm.cols();
    first.assign(static_cast<std::size_t>(n), 0);
    d1.setConstant(n, std::numeric_limits<double>::infinity());
    d2.setConstant(n, std::numeric_limits<double>::infinity());
    for (std::size_t m = 0; m < centers.size(); ++m) {
      const auto row = dm.row(centers[m]);
      for (Eigen::Index u = 0; u < n; ++u) {
        const double d = row(u);
        if (d < d1(u)) {
          d2(u) = d1(u);
          d1(u) = d;
          first[static_cast<std::size_t>(u)] = static_cast<Eigen::Index>(m);
        } else if (d < d2(u)) {
          d2(u) = d;
        }
      }
    }
  }

  double total() const { return d1.sum(); }

  // WCSD after replacing center `slot` by `candidate`; stops early once the
  // partial sum reaches `bound`.
  double swap_cost(const DistanceMatrix& dm, std::size_t slot, Eigen::Index candidate, double bound) const {
    const auto row = dm.row(candidate);
    double w = 0.0;
    const Eigen::Index n = dm.cols();
    for (Eigen::Index u = 0; u < n; ++u) {
      const double other = first[static_cast<std::size_t>(u)] == static_cast<Eigen::Index>(slot) ? d2(u) : d1(u);
      w += std::min(row(u), other);
      if (w >= bound) return w;
    }
    return w;
  }
};

}  // namespace

Clustering k_medoids(const DistanceMatrix& dm, std::size_t m, std::vector<Eigen::Index> init, double delta) {
  const Eigen::Index n = dm.rows();
  if (dm.cols() != n) throw InvalidInput("k_medoids: distance matrix must be square");
  if (m < 1 || static_cast<Eigen::Index>(m) > n) throw InvalidInput("k_medoids: need 1 <= M <= F");
  if (init.size() != m) throw InvalidInput("k_medoids: init must hold exactly M indices");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("k_medoids: delta must lie in (0, 1)");
  {
    std::vector<Eigen::Index> sorted = init;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidInput("k_medoids: duplicate initial centers");
    if (sorted.front() < 0 || sorted.back() >= n) throw InvalidInput("k_medoids: initial center out of range");
  }

  Clustering result;
  result.centers = std::move(init);
  NearestCache cache;
  cache.rebuild(dm, result.centers);
  double w = cache.total();
  result.wcsd_trace.push_back(w);

  auto members_of = [&](std::size_t slot) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index u = 0; u < n; ++u)
      if (cache.first[static_cast<std::size_t>(u)] == static_cast<Eigen::Index>(slot)) members.push_back(u);
    return members;
  };

  double w_prev = 2.0 * w / (1.0 - delta);
  while (w_prev - w > delta * w_prev) {
    w_prev = w;
    for (std::size_t slot = 0; slot < m; ++slot) {
      std::vector<Eigen::Index> members = members_of(slot);
      std::size_t k = 0;
      while (k < members.size()) {
        const Eigen::Index candidate = members[k];
        if (candidate == result.centers[slot]) {
          ++k;
          continue;
        }
        const double cost = cache.swap_cost(dm, slot, candidate, w);
        if (cost < w) {
          result.centers[slot] = candidate;
          cache.rebuild(dm, result.centers);
          w = cache.total();
          result.wcsd_trace.push_back(w);
          members = members_of(slot);
          k = 0;
        } else {
          ++k;
        }
      }
    }
  }
  result.assignment = cache.first;
  result.wcsd = w;
  return result;
}

Clustering k_medoids_multistart(const DistanceMatrix& dm, std::size_t m, Rng& rng, std::size_t restarts, double delta,
                                const std::vector<Eigen::Index>& warm) {
  if (warm.empty() && restarts == 0) throw InvalidInput("k_medoids_multistart: no starting point");
  std::optional<Clustering> best;
  if (!warm.empty()) best = k_medoids(dm, m, warm, delta);
  for (std::size_t k = 0; k < restarts; ++k) {
    Clustering c = k_medoids(dm, m, seed_centers(dm, m, rng), delta);
    if (!best || c.wcsd < best->wcsd) best = std::move(c);
  }
  return std::move(*best);
}

std::vector<Eigen::Index> grow_centers(const DistanceMatrix& dm, const Clustering& previous) {
  const Eigen::Index n = dm.cols();
  if (static_cast<Eigen::Index>(previous.centers.size()) >= n) throw InvalidInput("grow_centers: no point left to add");
  std::vector<char> is_center(static_cast<std::size_t>(n), 0);
  for (auto c : previous.centers) is_center[static_cast<std::size_t>(c)] = 1;
  Eigen::Index far = -1;
  double far_d = -1.0;
  for (Eigen::Index u = 0; u < n; ++u) {
    if (is_center[static_cast<std::size_t>(u)]) continue;
    const double d = dm(previous.centers[static_cast<std::size_t>(previous.assignment[static_cast<std::size_t>(u)])], u);
    if (d > far_d) {
      far_d = d;
      far = u;
    }
  }
  std::vector<Eigen::Index> next = previous.centers;
  next.push_back(far);
  return next;
}

std::vector<double> reference_curve(const ReferenceCurveParams& p) {
  if (p.order < 1) throw InvalidInput("reference_curve: order must be >= 1");
  if (!(p.radius > 0.0 && p.radius <= 1.0)) throw InvalidInput("reference_curve: radius must lie in (0, 1]");
  if (p.max_states < 1 || p.count < 1 || p.iterations < 1)
    throw InvalidInput("reference_curve: max_states, count and iterations must be positive");
  if (p.max_states > p.count) throw InvalidInput("reference_curve: max_states exceeds count");

  std::vector<std::vector<double>> per_batch(p.iterations, std::vector<double>(p.max_states, 0.0));
  detail::parallel_for(p.iterations, p.jobs, [&](std::size_t it) {
    const auto batch = sample_batch<double>(p.order, p.radius, p.count, derive_seed(p.seed, "reference-batch", it));
    const DistanceMatrix dm = build_distance_matrix(batch);
    Rng rng(derive_seed(p.seed, "kmedoids-init", it));
    Clustering c = k_medoids_multistart(dm, 1, rng, std::max<std::size_t>(p.restarts, 1), p.delta);
    per_batch[it][0] = c.wcsd / static_cast<double>(p.count);
    for (std::size_t m = 2; m <= p.max_states; ++m) {
      c = k_medoids_multistart(dm, m, rng, p.restarts, p.delta, grow_centers(dm, c));
      per_batch[it][m - 1] = c.wcsd / static_cast<double>(p.count);
    }
  });

  std::vector<double> curve(p.max_states, 0.0);
  for (std::size_t m = 0; m < p.max_states; ++m) {
    double s = 0.0;
    for (std::size_t it = 0; it < p.iterations; ++it) s += per_batch[it][m];
    curve[m] = s / static_cast<double>(p.iterations) + 1.0;
  }
  return curve;
}

double reference_point(Eigen::Index order, double radius, std::size_t m, std::size_t count, std::size_t iterations,
                       double delta, std::uint64_t seed, unsigned jobs, std::size_t restarts) {
  ReferenceCurveParams p{order, radius, m, count, iterations, delta, seed, jobs, restarts};
  return reference_curve(p).back();
}

double ReferenceCurveCache::round_radius(double r) { return std::round(r * 100.0) / 100.0; }

std::size_t ReferenceCurveCache::computed_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return computed_;
}

std::filesystem::path ReferenceCurveCache::file_for(const Key& key) const {
  std::ostringstream name;
  name << "refcurve_L" << std::get<0>(key) << "_r" << std::get<1>(key) << "_F" << std::get<2>(key) << "_it"
       << std::get<3>(key) << "_s" << std::get<4>(key) << ".json";
  return *directory_ / name.str();
}

namespace {

std::optional<std::vector<double>> load_curve_file(const std::filesystem::path& path, const ReferenceCurveParams& p) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != 1) return std::nullopt;
    if (j.at("L").get<Eigen::Index>() != p.order || j.at("F").get<std::size_t>() != p.count ||
        j.at("iter").get<std::size_t>() != p.iterations || j.at("seed").get<std::uint64_t>() != p.seed ||
        j.at("delta").get<double>() != p.delta || j.value("restarts", std::size_t{0}) != p.restarts || std::abs(j.at("r").get<double>() - p.radius) > 1e-12)
      return std::nullopt;
    auto w = j.at("W").get<std::vector<double>>();
    if (w.size() < p.max_states) return std::nullopt;
    return w;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void save_curve_file(const std::filesystem::path& path, const ReferenceCurveParams& p, const std::vector<double>& w) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["L"] = p.order;
  j["r"] = p.radius;
  j["F"] = p.count;
  j["iter"] = p.iterations;
  j["seed"] = p.seed;
  j["delta"] = p.delta;
  j["restarts"] = p.restarts;
  j["W"] = w;
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<double> ReferenceCurveCache::get(ReferenceCurveParams params) {
  params.radius = round_radius(params.radius);
  const Key key{params.order, std::lround(params.radius * 100.0), params.count, params.iterations, params.seed,
                params.delta, params.restarts};

  std::promise<std::vector<double>> promise;
  std::shared_future<std::vector<double>> future;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      entries_[key] = future;
      owner = true;
    }
  }
  if (!owner) {
    auto curve = future.get();
    if (curve.size() >= params.max_states) return curve;
    // a longer curve is needed: recompute and replace
    {
      std::lock_guard<std::mutex> lock(mutex_);
      future = promise.get_future().share();
      entries_[key] = future;
    }
  }

  try {
    std::optional<std::vector<double>> curve;
    if (directory_) curve = load_curve_file(file_for(key), params);
    if (!curve) {
      curve = reference_curve(params);
      if (directory_) save_curve_file(file_for(key), params, *curve);
      std::lock_guard<std::mutex> lock(mutex_);
      ++computed_;
    }
    promise.set_value(*curve);
    return *curve;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.erase(key);
    throw;
  }
}

}  // namespace gapar
