#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>

#include "pspo/rbffd.hpp"
#include "pspo/system.hpp"
#include "pspo/types.hpp"

namespace pspo {

/// 2-norm condition number of a tall matrix. `kappa` is +inf and `rank_ok`
/// false when sigma_min <= max(rows, cols) * eps * sigma_max.
struct CriterionValue {
  double kappa = std::numeric_limits<double>::infinity();
  double log10_kappa = std::numeric_limits<double>::infinity();
  bool rank_ok = false;
};

/// Fitness assigned to placements whose augmented system is rank deficient.
inline constexpr double kInfeasiblePenalty = 1e12;

CriterionValue condition_number(const Matrix& W);
CriterionValue condition_from_extremes(double sigma_max, double sigma_min,
                                       Index rows, Index cols);

/// Shared, immutable scoring context for one discrete operator and gamma.
///
/// The physics block A = gamma * (W1 | -source_basis) is decomposed once as
/// A = U S V^T. For a placement with selection rows O the augmented matrix
/// satisfies V^T W^T W V = diag(S^2, 0) + B^T B with B = (O | 0) V, a rank-k
/// update of a known diagonal. Its extreme eigenvalues are bracketed by
/// eigenvalue interlacing and located by bisection on the inertia of the
/// k x k matrix I + B (D - mu)^-1 B^T, so a fitness call costs O(k^2 (n + l))
/// per bisection step instead of a dense SVD.
class CriterionContext {
 public:
  CriterionContext(DiscreteOperator op, double gamma);

  const DiscreteOperator& op() const { return op_; }
  double gamma() const { return gamma_; }
  Index n() const { return op_.n(); }

  /// Spectral route described above.
  CriterionValue evaluate(const Placement& p) const;
  /// Dense route: builds the augmented system and runs a full SVD.
  CriterionValue evaluate_exact(const Placement& p) const;

 private:
  Index count_below(const Matrix& B, double mu) const;

  DiscreteOperator op_;
  double gamma_;
  Index rows_ = 0;   // physics rows
  Index cols_ = 0;   // n + l
  Vector d_;         // squared singular values, descending, zero-padded
  Vector d_ascending_;
  Matrix V_;         // cols_ x cols_, right singular vectors
};

/// log10 kappa of the augmented system, or kInfeasiblePenalty when the
/// placement is invalid or the system is rank deficient.
double placement_fitness(const Placement& p, const CriterionContext& ctx);

struct BoundReport {
  Index trials = 0;
  Index violations = 0;
  double kappa = 0.0;
  /// max over trials of ratio / kappa (1 means the upper bound is attained).
  double tightest_ratio_high = 0.0;
  /// max over trials of (1 / kappa) / ratio (1 means the lower bound is
  /// attained).
  double tightest_ratio_low = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Augmented system whose measurements come from a forward solve at
/// `lambda`, so that C lies exactly in the range of W.
AugmentedSystem consistent_system(const DiscreteOperator& op,
                                  const Placement& p, double gamma,
                                  const Vector& lambda);

/// Checks (1/kappa) |dC|/|C| <= |dU*|/|U*| <= kappa |dC|/|C| for range-space
/// perturbations dC = perturb_scale * W z, z ~ N(0, I). `ratio` denotes
/// (|dU*|/|U*|) / (|dC|/|C|).
BoundReport verify_bounds(const AugmentedSystem& sys, Index trials,
                          double perturb_scale, std::uint64_t seed);

void write_bound_report_json(std::ostream& os, const BoundReport& r);

}  // namespace pspo
