#include "pspo/system.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>
#include <unordered_set>

#include "pspo/error.hpp"

namespace pspo {

void Placement::validate(Index n) const {
  if (indices.empty()) fail(ErrorCode::kInvalidPlacement, "empty placement");
  if (k() > n) {
    fail(ErrorCode::kInvalidPlacement,
         "placement has more sensors than candidates");
  }
  std::unordered_set<Index> seen;
  for (Index i : indices) {
    if (i < 0 || i >= n) {
      fail(ErrorCode::kInvalidPlacement,
           "sensor index " + std::to_string(i) + " outside [0, " +
               std::to_string(n) + ")",
           i);
    }
    if (!seen.insert(i).second) {
      fail(ErrorCode::kInvalidPlacement,
           "duplicate sensor index " + std::to_string(i), i);
    }
  }
}

Placement Placement::sorted() const {
  Placement out = *this;
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

Matrix selection_matrix(const Placement& p, Index n) {
  p.validate(n);
  Matrix O = Matrix::Zero(p.k(), n);
  for (Index r = 0; r < p.k(); ++r) O(r, p.indices[r]) = 1.0;
  return O;
}

AugmentedSystem build_augmented(const DiscreteOperator& op, const Placement& p,
                                double gamma,
                                const std::optional<Vector>& measurements) {
  require(gamma > 0.0, "gamma must be positive");
  const Index n = op.n();
  const Index l = op.l();
  const Index rows = op.rows();
  if (op.source_basis.rows() != rows) {
    fail(ErrorCode::kShapeMismatch, "source basis rows differ from W1 rows");
  }
  p.validate(n);
  const Index k = p.k();

  AugmentedSystem sys;
  sys.gamma = gamma;
  sys.n = n;
  sys.l = l;
  sys.k = k;
  sys.W = Matrix::Zero(rows + k, n + l);
  sys.W.topLeftCorner(rows, n) = gamma * Matrix(op.W1);
  sys.W.topRightCorner(rows, l) = -gamma * op.source_basis;
  for (Index r = 0; r < k; ++r) sys.W(rows + r, p.indices[r]) = 1.0;

  sys.C = Vector::Zero(rows + k);
  sys.C.head(rows) = gamma * (op.f_fixed + op.g);
  if (measurements) {
    if (measurements->size() != k) {
      fail(ErrorCode::kShapeMismatch,
           "expected " + std::to_string(k) + " measurements, got " +
               std::to_string(measurements->size()));
    }
    sys.C.tail(k) = *measurements;
    sys.measurements_set = true;
  }
  return sys;
}

void apply_noise_inplace(Eigen::Ref<Vector> values, double sigma,
                         std::mt19937_64& rng) {
  require(sigma >= 0.0, "noise sigma must be non-negative");
  if (sigma == 0.0) return;
  std::normal_distribution<double> eps(0.0, sigma);
  for (Index i = 0; i < values.size(); ++i) values(i) *= 1.0 + eps(rng);
}

Vector apply_noise(const Vector& values, const NoiseModel& nm) {
  Vector out = values;
  std::mt19937_64 rng(nm.seed);
  apply_noise_inplace(out, nm.sigma, rng);
  return out;
}

struct LeastSquaresSolver::Impl {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
};

LeastSquaresSolver::LeastSquaresSolver(const Matrix& W)
    : impl_(std::make_unique<Impl>()) {
  require(W.rows() > 0 && W.cols() > 0, "empty system matrix");
  impl_->cod.setThreshold(static_cast<double>(std::max(W.rows(), W.cols())) *
                          std::numeric_limits<double>::epsilon());
  impl_->cod.compute(W);
}

LeastSquaresSolver::~LeastSquaresSolver() = default;
LeastSquaresSolver::LeastSquaresSolver(LeastSquaresSolver&&) noexcept =
    default;
LeastSquaresSolver& LeastSquaresSolver::operator=(
    LeastSquaresSolver&&) noexcept = default;

Index LeastSquaresSolver::rank() const { return impl_->cod.rank(); }

bool LeastSquaresSolver::full_column_rank() const {
  return impl_->cod.rank() == impl_->cod.cols();
}

Vector LeastSquaresSolver::solve(const Vector& C) const {
  return solve(Matrix(C)).col(0);
}

Matrix LeastSquaresSolver::solve(const Matrix& C) const {
  if (!full_column_rank()) {
    fail(ErrorCode::kRankDeficient,
         "augmented system is rank deficient (rank " +
             std::to_string(rank()) + " < " +
             std::to_string(impl_->cod.cols()) + ")",
         rank());
  }
  require(C.rows() == impl_->cod.rows(), "right-hand side length mismatch");
  return impl_->cod.solve(C);
}

LsqSolution lsq_solve(const AugmentedSystem& sys) {
  require(sys.measurements_set,
          "measurements are unset; the system is only usable for scoring");
  if (sys.k == 0) {
    fail(ErrorCode::kRankDeficient, "no measurement rows", 0);
  }
  const LeastSquaresSolver solver(sys.W);
  const Vector U = solver.solve(sys.C);
  LsqSolution out;
  out.U1 = U.head(sys.n);
  out.lambda = U.tail(sys.l);
  out.residual_norm = (sys.W * U - sys.C).norm();
  return out;
}

void write_placement_json(std::ostream& os, const Placement& p, Index n,
                          double criterion_log10, double gamma,
                          std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["k"] = p.k();
  j["indices"] = p.indices;
  j["criterion_log10"] = criterion_log10;
  j["gamma"] = gamma;
  j["seed"] = seed;
  os << j.dump(2) << '\n';
}

PlacementRecord read_placement_json(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
    PlacementRecord rec;
    rec.n = j.at("n").get<Index>();
    rec.placement.indices = j.at("indices").get<std::vector<Index>>();
    rec.criterion_log10 = j.value("criterion_log10", 0.0);
    rec.gamma = j.value("gamma", 1.0);
    rec.seed = j.value("seed", std::uint64_t{0});
    if (j.at("k").get<Index>() != rec.placement.k()) {
      fail(ErrorCode::kIo, "placement file: k does not match indices");
    }
    rec.placement.validate(rec.n);
    return rec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, std::string("placement file: ") + e.what());
  }
}

}  // namespace pspo
