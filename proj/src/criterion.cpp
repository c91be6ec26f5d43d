#include "pspo/criterion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>

#include "pspo/error.hpp"

namespace pspo {

CriterionValue condition_from_extremes(double sigma_max, double sigma_min,
                                       Index rows, Index cols) {
  CriterionValue v;
  const double tol = static_cast<double>(std::max(rows, cols)) *
                     std::numeric_limits<double>::epsilon() * sigma_max;
  if (!(sigma_max > 0.0) || !(sigma_min > tol)) return v;
  v.kappa = sigma_max / sigma_min;
  v.log10_kappa = std::log10(v.kappa);
  v.rank_ok = true;
  return v;
}

CriterionValue condition_number(const Matrix& W) {
  require(W.cols() > 0, "empty matrix");
  if (W.rows() < W.cols()) return CriterionValue{};  // never full column rank
  Eigen::BDCSVD<Matrix> svd(W);
  const Vector& s = svd.singularValues();
  return condition_from_extremes(s(0), s(s.size() - 1), W.rows(), W.cols());
}

CriterionContext::CriterionContext(DiscreteOperator op, double gamma)
    : op_(std::move(op)), gamma_(gamma) {
  require(gamma_ > 0.0, "gamma must be positive");
  rows_ = op_.rows();
  cols_ = op_.n() + op_.l();
  Matrix A(rows_, cols_);
  A.leftCols(op_.n()) = gamma_ * Matrix(op_.W1);
  A.rightCols(op_.l()) = -gamma_ * op_.source_basis;

  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  d_ = Vector::Zero(cols_);
  d_.head(s.size()) = s.array().square();
  V_ = svd.matrixV();
  d_ascending_ = d_.reverse();
}

Index CriterionContext::count_below(const Matrix& B, double mu) const {
  // Haynsworth inertia: #eig(D + B^T B) < mu equals
  // #{d_i < mu} - #neg(I + B (D - mu)^-1 B^T).
  Index below = 0;
  Vector inv(cols_);
  for (Index i = 0; i < cols_; ++i) {
    double gap = d_(i) - mu;
    if (gap == 0.0) gap = -std::numeric_limits<double>::min();
    if (gap < 0.0) ++below;
    inv(i) = 1.0 / gap;
  }
  Matrix G = B * inv.asDiagonal() * B.transpose();
  G.diagonal().array() += 1.0;
  Eigen::LDLT<Matrix> ldlt(G);
  const Vector piv = ldlt.vectorD();
  Index negative = 0;
  for (Index i = 0; i < piv.size(); ++i) {
    if (piv(i) < 0.0) ++negative;
  }
  return below - negative;
}

CriterionValue CriterionContext::evaluate(const Placement& p) const {
  p.validate(op_.n());
  const Index k = p.k();
  Matrix B(k, cols_);
  for (Index r = 0; r < k; ++r) B.row(r) = V_.row(p.indices[r]);

  // Largest eigenvalue lies in [d_max, d_max + trace(B^T B)] and every row
  // of V has unit norm, so the trace is k.
  double lo = d_(0);
  double hi = d_(0) + static_cast<double>(k);
  for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(B, mid) >= cols_) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double lambda_max = hi;
  const double sigma_max = std::sqrt(lambda_max);
  const Index total_rows = rows_ + k;
  const double tol = static_cast<double>(std::max(total_rows, cols_)) *
                     std::numeric_limits<double>::epsilon() * sigma_max;
  const double floor = tol * tol;
  if (count_below(B, floor) >= 1) return {};

  // Rank-k interlacing: lambda_min(D + B^T B) <= k-th smallest d.
  lo = floor;
  hi = k < cols_ ? d_ascending_(k) : lambda_max;
  hi = std::max(hi, floor) * (1.0 + 1e-12);
  while (count_below(B, hi) < 1) hi *= 2.0;
  for (int it = 0; it < 200 && hi > lo * (1.0 + 1e-14); ++it) {
    const double mid = std::sqrt(lo * hi);
    if (count_below(B, mid) >= 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double lambda_min = std::sqrt(lo * hi);
  return condition_from_extremes(sigma_max, std::sqrt(lambda_min), total_rows,
                                 cols_);
}

CriterionValue CriterionContext::evaluate_exact(const Placement& p) const {
  return condition_number(build_augmented(op_, p, gamma_, std::nullopt).W);
}

double placement_fitness(const Placement& p, const CriterionContext& ctx) {
  try {
    const CriterionValue v = ctx.evaluate(p);
    return v.rank_ok ? v.log10_kappa : kInfeasiblePenalty;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidPlacement) return kInfeasiblePenalty;
    throw;
  }
}

AugmentedSystem consistent_system(const DiscreteOperator& op,
                                  const Placement& p, double gamma,
                                  const Vector& lambda) {
  p.validate(op.n());
  const Vector u = forward_solve(op, lambda);
  Vector s(p.k());
  for (Index r = 0; r < p.k(); ++r) s(r) = u(p.indices[r]);
  return build_augmented(op, p, gamma, s);
}

BoundReport verify_bounds(const AugmentedSystem& sys, Index trials,
                          double perturb_scale, std::uint64_t seed) {
  require(sys.measurements_set, "bound verification needs measurements");
  require(trials >= 0, "trial count must be non-negative");
  const LeastSquaresSolver solver(sys.W);
  if (!solver.full_column_rank()) {
    fail(ErrorCode::kRankDeficient, "augmented system is rank deficient",
         solver.rank());
  }
  const CriterionValue cv = condition_number(sys.W);
  if (!cv.rank_ok) {
    fail(ErrorCode::kRankDeficient, "augmented system is rank deficient",
         solver.rank());
  }
  const Vector U = solver.solve(sys.C);
  const double norm_u = U.norm();
  const double norm_c = sys.C.norm();
  require(norm_u > 0.0 && norm_c > 0.0, "reference solution is zero");

  BoundReport rep;
  rep.trials = trials;
  rep.kappa = cv.kappa;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  constexpr double kSlack = 1e-9;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(sys.W.cols());
  for (Index t = 0; t < trials; ++t) {
    for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Vector dC = perturb_scale * (sys.W * z);
    const Vector dU = solver.solve(dC);
    const double rel_c = dC.norm() / norm_c;
    const double rel_u = dU.norm() / norm_u;
    if (rel_c == 0.0) {
      if (rel_u != 0.0) ++rep.violations;
      rep.min_ratio = 0.0;
      continue;
    }
    const double ratio = rel_u / rel_c;
    if (ratio > cv.kappa * (1.0 + kSlack) ||
        ratio < (1.0 - kSlack) / cv.kappa) {
      ++rep.violations;
    }
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    rep.tightest_ratio_high = std::max(rep.tightest_ratio_high, ratio / cv.kappa);
    rep.tightest_ratio_low =
        std::max(rep.tightest_ratio_low, 1.0 / (cv.kappa * ratio));
  }
  if (trials == 0 || !std::isfinite(rep.min_ratio)) rep.min_ratio = 0.0;
  return rep;
}

void write_bound_report_json(std::ostream& os, const BoundReport& r) {
  nlohmann::ordered_json j;
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  j["kappa"] = r.kappa;
  j["log10_kappa"] = std::log10(r.kappa);
  j["tightest_ratio_low"] = r.tightest_ratio_low;
  j["tightest_ratio_high"] = r.tightest_ratio_high;
  j["min_ratio"] = r.min_ratio;
  j["max_ratio"] = r.max_ratio;
  os << j.dump(2) << '\n';
}

}  // namespace pspo
