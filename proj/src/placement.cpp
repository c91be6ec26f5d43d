#include "pspo/placement.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <unordered_set>

#include "pspo/error.hpp"

namespace pspo {

void GaConfig::validate() const {
  require(population_size >= 2, "population size must be >= 2");
  require(generations >= 0, "generations must be >= 0");
  require(crossover_prob >= 0.0 && crossover_prob <= 1.0,
          "crossover probability must lie in [0, 1]");
  require(mutation_prob <= 1.0, "mutation probability must be <= 1");
  require(elitism >= 0 && elitism < population_size,
          "elitism must be smaller than the population");
  require(tournament_size >= 1, "tournament size must be >= 1");
}

namespace {

using Genes = std::vector<Index>;

void check_k(Index n, Index k) {
  if (k < 1 || k > n) {
    fail(ErrorCode::kInvalidArgument,
         "sensor count k=" + std::to_string(k) + " must lie in [1, " +
             std::to_string(n) + "]");
  }
}

Genes sample_distinct(Index n, Index k, std::mt19937_64& rng) {
  // Partial Fisher-Yates over an explicit index table.
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

Index draw_unused(Index n, const std::unordered_set<Index>& used,
                  std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (;;) {
    const Index c = pick(rng);
    if (!used.count(c)) return c;
  }
}

void repair(Genes& genes, Index n, std::mt19937_64& rng) {
  std::unordered_set<Index> used;
  std::vector<std::size_t> dup;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (!used.insert(genes[i]).second) dup.push_back(i);
  }
  for (std::size_t i : dup) {
    genes[i] = draw_unused(n, used, rng);
    used.insert(genes[i]);
  }
}

void mutate(Genes& genes, Index n, double prob, std::mt19937_64& rng) {
  if (static_cast<Index>(genes.size()) == n) return;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::unordered_set<Index> used(genes.begin(), genes.end());
  for (auto& g : genes) {
    if (u(rng) < prob) {
      used.erase(g);
      g = draw_unused(n, used, rng);
      used.insert(g);
    }
  }
}

}  // namespace

GaResult ga_optimize(const FitnessFn& fitness, Index n, Index k,
                     const GaConfig& cfg) {
  cfg.validate();
  check_k(n, k);
  const double mut =
      cfg.mutation_prob < 0.0 ? 1.0 / static_cast<double>(k) : cfg.mutation_prob;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<Index> pick_member(0, cfg.population_size - 1);

  std::map<Genes, double> cache;
  GaResult result;
  auto score = [&](const Genes& g) {
    auto it = cache.find(g);
    if (it != cache.end()) return it->second;
    const double f = fitness(Placement{g});
    cache.emplace(g, f);
    ++result.evaluations;
    return f;
  };

  struct Member {
    Genes genes;
    double fit;
  };
  std::vector<Member> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population_size));
  for (Index i = 0; i < cfg.population_size; ++i) {
    Genes g = sample_distinct(n, k, rng);
    std::sort(g.begin(), g.end());
    const double f = score(g);
    pop.push_back({std::move(g), f});
  }

  Member best = pop[0];
  auto track = [&] {
    for (const auto& m : pop) {
      if (m.fit < best.fit) best = m;
    }
    result.history.push_back(best.fit);
  };
  track();

  auto tournament = [&]() -> const Member& {
    Index winner = pick_member(rng);
    for (Index t = 1; t < cfg.tournament_size; ++t) {
      const Index c = pick_member(rng);
      if (pop[c].fit < pop[winner].fit ||
          (pop[c].fit == pop[winner].fit && c < winner)) {
        winner = c;
      }
    }
    return pop[winner];
  };

  for (Index gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Index> order(pop.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return pop[a].fit < pop[b].fit;
    });
    std::vector<Member> next;
    next.reserve(pop.size());
    for (Index e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[e]]);

    while (static_cast<Index>(next.size()) < cfg.population_size) {
      Genes a = tournament().genes;
      Genes b = tournament().genes;
      if (u01(rng) < cfg.crossover_prob) {
        for (Index i = 0; i < k; ++i) {
          if (u01(rng) < 0.5) std::swap(a[i], b[i]);
        }
        repair(a, n, rng);
        repair(b, n, rng);
      }
      for (Genes* child : {&a, &b}) {
        if (static_cast<Index>(next.size()) == cfg.population_size) break;
        mutate(*child, n, mut, rng);
        std::sort(child->begin(), child->end());
        const double f = score(*child);
        next.push_back({std::move(*child), f});
      }
    }
    pop = std::move(next);
    track();
  }
  result.best = Placement{best.genes};
  result.best_fitness = best.fit;
  return result;
}

GaResult ga_optimize(const CriterionContext& ctx, Index k,
                     const GaConfig& cfg) {
  return ga_optimize(
      [&ctx](const Placement& p) { return placement_fitness(p, ctx); },
      ctx.n(), k, cfg);
}

Placement random_placement(Index n, Index k, std::uint64_t seed) {
  check_k(n, k);
  std::mt19937_64 rng(seed);
  return Placement{sample_distinct(n, k, rng)};
}

Placement uniform_placement(Index n, Index k) {
  check_k(n, k);
  if (k == 1) return Placement{{(n - 1) / 2}};
  std::vector<Index> out;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < k; ++i) {
    const double target = static_cast<double>(i) * static_cast<double>(n - 1) /
                          static_cast<double>(k - 1);
    Index idx = static_cast<Index>(std::llround(target));
    if (used[idx]) {
      // Nearest unused index; the lower one wins on equal distance.
      for (Index off = 1;; ++off) {
        if (idx - off >= 0 && !used[idx - off]) {
          idx -= off;
          break;
        }
        if (idx + off < n && !used[idx + off]) {
          idx += off;
          break;
        }
      }
    }
    used[idx] = true;
    out.push_back(idx);
  }
  return Placement{out};
}

Placement uniform_placement(const PointCloud& cloud, Index k) {
  const Index n = cloud.size();
  if (cloud.dim == 1) return uniform_placement(n, k);
  check_k(n, k);
  Coord lo = cloud.points[0];
  Coord hi = cloud.points[0];
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Index cols =
      static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(k))));
  const Index rows = (k + cols - 1) / cols;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<Index> out;
  for (Index r = 0; r < rows; ++r) {
    const Index in_row = k / rows + (r < k % rows ? 1 : 0);
    const double y =
        lo.y() + (hi.y() - lo.y()) * (static_cast<double>(r) + 0.5) /
                     static_cast<double>(rows);
    for (Index c = 0; c < in_row; ++c) {
      const double x =
          lo.x() + (hi.x() - lo.x()) * (static_cast<double>(c) + 0.5) /
                       static_cast<double>(in_row);
      Index bestIdx = -1;
      double bestDist = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (used[i]) continue;
        const double dd = (cloud.points[i] - Coord(x, y)).squaredNorm();
        if (dd < bestDist) {
          bestDist = dd;
          bestIdx = i;
        }
      }
      used[bestIdx] = true;
      out.push_back(bestIdx);
    }
  }
  return Placement{out};
}

Placement cns_select(const PODBasis& basis, Index k) {
  const Index n = basis.n();
  const Index r = basis.r();
  check_k(n, k);
  std::vector<Index> chosen;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  Matrix rows(0, r);
  for (Index step = 0; step < k; ++step) {
    Index best = -1;
    double best_kappa = std::numeric_limits<double>::infinity();
    double best_smin = 0.0;
    Matrix trial(step + 1, r);
    trial.topRows(step) = rows;
    for (Index i = 0; i < n; ++i) {
      if (used[i]) continue;
      trial.row(step) = basis.modes.row(i);
      Eigen::JacobiSVD<Matrix> svd(trial);
      const Vector& s = svd.singularValues();
      const double smax = s(0);
      const double smin = s(s.size() - 1);
      const double tol = static_cast<double>(std::max(step + 1, r)) *
                         std::numeric_limits<double>::epsilon() * smax;
      if (!(smin > tol)) continue;
      const double kappa = smax / smin;
      // Below r rows kappa alone cannot rank candidates (every single row
      // has kappa 1), so equal kappa falls back to the larger sigma_min.
      const bool better =
          best < 0 || kappa < best_kappa * (1.0 - 1e-12) ||
          (kappa <= best_kappa * (1.0 + 1e-12) && smin > best_smin);
      if (better) {
        best = i;
        best_kappa = kappa;
        best_smin = smin;
      }
    }
    if (best < 0) {
      fail(ErrorCode::kSelectionFailed,
           "every candidate gives a singular sampled basis at step " +
               std::to_string(step),
           step);
    }
    used[best] = true;
    chosen.push_back(best);
    rows.conservativeResize(step + 1, r);
    rows.row(step) = basis.modes.row(best);
  }
  return Placement{chosen};
}

Placement cns_select(const SnapshotMatrix& snapshots, Index r, Index k,
                     const PodOptions& opts) {
  require(k >= 1, "k must be >= 1");
  return cns_select(pod_fit(snapshots, r, opts), k);
}

std::vector<Index> voronoi_cells(const PointCloud& cloud, Index k,
                                 const EcsConfig& cfg) {
  const Index n = cloud.size();
  check_k(n, k);
  std::mt19937_64 rng(cfg.seed);

  // k-means++ seeding.
  std::vector<Coord> centers;
  std::uniform_int_distribution<Index> first(0, n - 1);
  centers.push_back(cloud.points[first(rng)]);
  std::vector<double> d2(static_cast<std::size_t>(n));
  while (static_cast<Index>(centers.size()) < k) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) {
        m = std::min(m, (cloud.points[i] - c).squaredNorm());
      }
      d2[i] = m;
      total += m;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double t = u(rng);
    Index pick = n - 1;
    for (Index i = 0; i < n; ++i) {
      t -= d2[i];
      if (t <= 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(cloud.points[pick]);
  }

  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  for (Index it = 0; it < cfg.max_iterations; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double dd = (cloud.points[i] - centers[c]).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    std::vector<Coord> sum(static_cast<std::size_t>(k), Coord::Zero());
    std::vector<Index> cnt(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sum[label[i]] += cloud.points[i];
      ++cnt[label[i]];
    }
    for (Index c = 0; c < k; ++c) {
      if (cnt[c] > 0) {
        centers[c] = sum[c] / static_cast<double>(cnt[c]);
        continue;
      }
      // Empty cell: move it to the point farthest from its own center.
      Index far = 0;
      double fd = -1.0;
      for (Index i = 0; i < n; ++i) {
        const double dd = (cloud.points[i] - centers[label[i]]).squaredNorm();
        if (dd > fd) {
          fd = dd;
          far = i;
        }
      }
      centers[c] = cloud.points[far];
      changed = true;
    }
    if (!changed) break;
  }
  return label;
}

namespace {

double abs_correlation(const Vector& a, const Vector& b) {
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  const double na = ca.norm();
  const double nb = cb.norm();
  // Zero-variance rows carry no information and count as uncorrelated.
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(ca.dot(cb) / (na * nb));
}

}  // namespace

Placement ecs_select(const SnapshotMatrix& snapshots, const PointCloud& cloud,
                     Index k, const EcsConfig& cfg) {
  snapshots.validate();
  const Index n = cloud.size();
  require(snapshots.n() == n, "snapshot rows must match the cloud");
  require(snapshots.count() >= 2, "ECS needs at least two snapshots");
  require(cfg.pool_per_cell >= 1, "pool_per_cell must be >= 1");
  check_k(n, k);

  const std::vector<Index> label = voronoi_cells(cloud, k, cfg);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) members[label[i]].push_back(i);

  // Pool: per cell, the candidates nearest the cell centroid.
  std::vector<std::vector<Index>> pool(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) {
    auto& mem = members[c];
    if (mem.empty()) continue;
    Coord centroid = Coord::Zero();
    for (Index i : mem) centroid += cloud.points[i];
    centroid /= static_cast<double>(mem.size());
    std::vector<std::pair<double, Index>> byDist;
    for (Index i : mem) {
      byDist.emplace_back((cloud.points[i] - centroid).squaredNorm(), i);
    }
    std::sort(byDist.begin(), byDist.end());
    const Index take =
        std::min<Index>(cfg.pool_per_cell, static_cast<Index>(byDist.size()));
    for (Index t = 0; t < take; ++t) pool[c].push_back(byDist[t].second);
  }

  Index largest = 0;
  for (Index c = 1; c < k; ++c) {
    if (members[c].size() > members[largest].size()) largest = c;
  }
  std::vector<Index> chosen{pool[largest][0]};
  std::vector<bool> cell_used(static_cast<std::size_t>(k), false);
  cell_used[largest] = true;

  while (static_cast<Index>(chosen.size()) < k) {
    Index best = -1;
    Index best_cell = -1;
    Index best_rank = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < k; ++c) {
      if (cell_used[c]) continue;
      for (Index rank = 0; rank < static_cast<Index>(pool[c].size()); ++rank) {
        const Index cand = pool[c][rank];
        double score = 0.0;
        for (Index s : chosen) {
          score = std::max(score, abs_correlation(snapshots.data.row(cand),
                                                  snapshots.data.row(s)));
        }
        const bool better =
            best < 0 || score < best_score - 1e-12 ||
            (score <= best_score + 1e-12 &&
             (rank < best_rank || (rank == best_rank && cand < best)));
        if (better) {
          best = cand;
          best_cell = c;
          best_rank = rank;
          best_score = score;
        }
      }
    }
    if (best < 0) {
      fail(ErrorCode::kSelectionFailed, "ECS ran out of Voronoi cells");
    }
    chosen.push_back(best);
    cell_used[best_cell] = true;
  }
  return Placement{chosen};
}

ExhaustiveResult exhaustive_select(const FitnessFn& fitness, Index n,
                                   Index k) {
  check_k(n, k);
  double combos = 1.0;
  for (Index i = 0; i < k; ++i) {
    combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  if (combos > kExhaustiveLimit) {
    fail(ErrorCode::kInvalidArgument,
         "C(" + std::to_string(n) + ", " + std::to_string(k) +
             ") exceeds the exhaustive-search limit");
  }
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  ExhaustiveResult res;
  res.fitness = std::numeric_limits<double>::infinity();
  for (;;) {
    const double f = fitness(Placement{idx});
    ++res.evaluated;
    if (f < res.fitness) {
      res.fitness = f;
      res.best = Placement{idx};
    }
    Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return res;
}

ExhaustiveResult exhaustive_select(const CriterionContext& ctx, Index k) {
  return exhaustive_select(
      [&ctx](const Placement& p) { return placement_fitness(p, ctx); },
      ctx.n(), k);
}

}  // namespace pspo
