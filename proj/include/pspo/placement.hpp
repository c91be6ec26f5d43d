#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pspo/cloud.hpp"
#include "pspo/criterion.hpp"
#include "pspo/pod.hpp"
#include "pspo/system.hpp"

namespace pspo {

using FitnessFn = std::function<double(const Placement&)>;

struct GaConfig {
  Index population_size = 10;
  Index generations = 2000;
  double crossover_prob = 0.9;
  /// Per-gene reset probability; a negative value means 1/k.
  double mutation_prob = -1.0;
  std::uint64_t seed = 0;
  Index elitism = 1;
  Index tournament_size = 3;

  void validate() const;
};

struct GaResult {
  Placement best;  // sorted ascending
  double best_fitness = 0.0;
  /// Best-so-far fitness after initialization and after each generation.
  std::vector<double> history;
  Index evaluations = 0;  // distinct chromosomes scored
};

/// Fixed-size subset GA (minimization). Chromosomes are sorted index sets;
/// crossover swaps aligned genes and then replaces duplicates with random
/// unused indices.
GaResult ga_optimize(const FitnessFn& fitness, Index n, Index k,
                     const GaConfig& cfg);
GaResult ga_optimize(const CriterionContext& ctx, Index k,
                     const GaConfig& cfg);

Placement random_placement(Index n, Index k, std::uint64_t seed);

/// Indices round(i (n-1) / (k-1)); k = 1 gives floor((n-1)/2).
Placement uniform_placement(Index n, Index k);

/// Index formula for 1D clouds; for 2D clouds a near-square lattice of k
/// targets over the bounding box, each snapped to the nearest unused node.
Placement uniform_placement(const PointCloud& cloud, Index k);

/// Greedy condition-number selection on POD modes.
Placement cns_select(const PODBasis& basis, Index k);
Placement cns_select(const SnapshotMatrix& snapshots, Index r, Index k,
                     const PodOptions& opts = {});

struct EcsConfig {
  /// Candidates per Voronoi cell (closest to the cell centroid) that enter
  /// the correlation-based pool.
  Index pool_per_cell = 3;
  std::uint64_t seed = 0;
  Index max_iterations = 200;
};

/// k-means labels of the cloud coordinates (a discrete Voronoi partition).
std::vector<Index> voronoi_cells(const PointCloud& cloud, Index k,
                                 const EcsConfig& cfg = {});

Placement ecs_select(const SnapshotMatrix& snapshots, const PointCloud& cloud,
                     Index k, const EcsConfig& cfg = {});

struct ExhaustiveResult {
  Placement best;
  double fitness = 0.0;
  Index evaluated = 0;
};

inline constexpr double kExhaustiveLimit = 1e6;

/// True argmin over all k-subsets in lexicographic order (ties keep the
/// first). Refuses when C(n, k) > kExhaustiveLimit.
ExhaustiveResult exhaustive_select(const FitnessFn& fitness, Index n, Index k);
ExhaustiveResult exhaustive_select(const CriterionContext& ctx, Index k);

}  // namespace pspo
