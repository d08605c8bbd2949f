#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "gapar/arcore.hpp"
#include "gapar/random.hpp"
#include "gapar/sampler.hpp"

namespace gapar {

// D(u, v): row u generates the data, column v predicts. Not symmetric.
using DistanceMatrix = Eigen::MatrixXd;

DistanceMatrix build_distance_matrix(const std::vector<ArFilterd>& filters, unsigned jobs = 1);
inline DistanceMatrix build_distance_matrix(const FilterBatch<double>& batch, unsigned jobs = 1) {
  return build_distance_matrix(batch.filters, jobs);
}

struct Clustering {
  std::vector<Eigen::Index> centers;     // indices into the batch
  std::vector<Eigen::Index> assignment;  // cluster (position in `centers`) per point
  double wcsd{0};                        // sum_u D(center(u), u)
  std::vector<double> wcsd_trace;        // value after each accepted swap, starting with the initial one
};

// Nearest center per point under D(center, point); ties go to the lowest
// center position.
std::vector<Eigen::Index> assign_to_centers(const DistanceMatrix& dm, const std::vector<Eigen::Index>& centers);
double within_cluster_sum(const DistanceMatrix& dm, const std::vector<Eigen::Index>& centers,
                          const std::vector<Eigen::Index>& assignment);

// k-medoids++ seeding: first center uniform, then proportional to the
// distance from the nearest chosen center.
std::vector<Eigen::Index> seed_centers(const DistanceMatrix& dm, std::size_t m, Rng& rng);

// Swap search: for each cluster, try every member as its new center with a
// full reassignment, accept strict WCSD decreases and rescan the updated
// cluster; repeat until the relative improvement of a sweep is <= delta.
Clustering k_medoids(const DistanceMatrix& dm, std::size_t m, std::vector<Eigen::Index> init,
                     double delta = 1e-4);

// Best (lowest WCSD, earliest on ties) of k_medoids runs started from `warm`
// when non-empty and from `restarts` k-medoids++ seeds drawn from `rng`.
// A single swap search stops in local optima where a center's cluster holds
// no better candidate, e.g. a singleton cluster.
Clustering k_medoids_multistart(const DistanceMatrix& dm, std::size_t m, Rng& rng, std::size_t restarts = 20,
                                double delta = 1e-4, const std::vector<Eigen::Index>& warm = {});

// Initial centers for m + 1 clusters: the m-solution plus the point farthest
// from its own center.
std::vector<Eigen::Index> grow_centers(const DistanceMatrix& dm, const Clustering& previous);

struct ReferenceCurveParams {
  Eigen::Index order{1};
  double radius{1.0};
  std::size_t max_states{6};
  std::size_t count{1000};   // F
  std::size_t iterations{32};
  double delta{1e-4};
  std::uint64_t seed{0};
  unsigned jobs{1};
  std::size_t restarts{20};  // k-medoids++ restarts per M, on top of the warm start
};

// W_1..W_max: per batch, multistart k-medoids for M = 1..max including a warm
// start from the previous M, WCSD / F averaged over batches, plus one.
std::vector<double> reference_curve(const ReferenceCurveParams& params);

double reference_point(Eigen::Index order, double radius, std::size_t m, std::size_t count,
                       std::size_t iterations, double delta, std::uint64_t seed, unsigned jobs = 1,
                       std::size_t restarts = 20);

// Curves keyed by (L, r to 2 decimals, F, iter, seed); delta and the restart
// count must also match. Optional on-disk
// persistence as versioned JSON. Concurrent requests for one key compute once.
class ReferenceCurveCache {
 public:
  ReferenceCurveCache() = default;
  explicit ReferenceCurveCache(std::filesystem::path directory) : directory_(std::move(directory)) {}

  // The radius is rounded to two decimals before computing; the returned
  // curve has at least params.max_states entries.
  std::vector<double> get(ReferenceCurveParams params);

  static double round_radius(double r);
  std::size_t computed_count() const;

 private:
  using Key = std::tuple<Eigen::Index, long, std::size_t, std::size_t, std::uint64_t, double, std::size_t>;
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<std::vector<double>>> entries_;
  std::size_t computed_{0};

  std::filesystem::path file_for(const Key& key) const;
};

}  // namespace gapar
