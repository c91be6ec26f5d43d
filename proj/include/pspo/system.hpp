#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pspo/rbffd.hpp"
#include "pspo/types.hpp"

namespace pspo {

/// k distinct candidate indices; row r of the selection matrix picks
/// indices[r].
struct Placement {
  std::vector<Index> indices;

  Index k() const { return static_cast<Index>(indices.size()); }
  /// Throws kInvalidPlacement on duplicates or out-of-range entries.
  void validate(Index n) const;
  Placement sorted() const;
  bool operator==(const Placement&) const = default;
};

Matrix selection_matrix(const Placement& p, Index n);

/// Rows (gamma*W1 | -gamma*source_basis) stacked over (O1 | 0), with the
/// matching right-hand side (gamma*(f_fixed + g) ; measurements).
struct AugmentedSystem {
  Matrix W;
  Vector C;
  double gamma = 1.0;
  Index n = 0;
  Index l = 0;
  Index k = 0;
  bool measurements_set = false;
};

AugmentedSystem build_augmented(const DiscreteOperator& op, const Placement& p,
                                double gamma,
                                const std::optional<Vector>& measurements);

/// Relative Gaussian sensor noise: u = u_true * (1 + eps), eps ~ N(0, sigma^2).
struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

Vector apply_noise(const Vector& values, const NoiseModel& nm);
/// Streams from an existing engine; used when one seed drives many draws.
void apply_noise_inplace(Eigen::Ref<Vector> values, double sigma,
                         std::mt19937_64& rng);

struct LsqSolution {
  Vector U1;
  Vector lambda;
  double residual_norm = 0.0;
};

/// Minimum-norm least-squares solver for a fixed W, factorized once.
class LeastSquaresSolver {
 public:
  explicit LeastSquaresSolver(const Matrix& W);
  ~LeastSquaresSolver();
  LeastSquaresSolver(LeastSquaresSolver&&) noexcept;
  LeastSquaresSolver& operator=(LeastSquaresSolver&&) noexcept;

  Index rank() const;
  bool full_column_rank() const;
  /// Throws kRankDeficient (detail = numerical rank) unless full rank.
  Vector solve(const Vector& C) const;
  Matrix solve(const Matrix& C) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LsqSolution lsq_solve(const AugmentedSystem& sys);

void write_placement_json(std::ostream& os, const Placement& p, Index n,
                          double criterion_log10, double gamma,
                          std::uint64_t seed);
struct PlacementRecord {
  Placement placement;
  Index n = 0;
  double criterion_log10 = 0.0;
  double gamma = 1.0;
  std::uint64_t seed = 0;
};
PlacementRecord read_placement_json(std::istream& is);

}  // namespace pspo
