#include "pspo/pod.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <limits>

#include "pspo/error.hpp"

namespace pspo {

void SnapshotMatrix::validate() const {
  require(data.cols() >= 1 && data.rows() >= 1, "snapshot matrix is empty");
  require(data.allFinite(), "snapshot matrix has non-finite entries");
}

Matrix PODBasis::coefficients(const Matrix& fields) const {
  require(fields.rows() == n(), "field length does not match the basis");
  if (!mean_removed) return modes.transpose() * fields;
  return modes.transpose() * (fields.colwise() - mean);
}

Matrix PODBasis::expand(const Matrix& coefficients) const {
  require(coefficients.rows() == r(), "coefficient length must equal r");
  Matrix out = modes * coefficients;
  if (mean_removed) out.colwise() += mean;
  return out;
}

PODBasis pod_fit(const SnapshotMatrix& snapshots, Index r,
                 const PodOptions& opts) {
  snapshots.validate();
  const Index n = snapshots.n();
  const Index N = snapshots.count();
  if (r < 1 || r > std::min(n, N)) {
    fail(ErrorCode::kInvalidArgument,
         "requested " + std::to_string(r) + " POD modes but min(n, N) = " +
             std::to_string(std::min(n, N)));
  }
  PODBasis basis;
  basis.mean_removed = opts.remove_mean;
  basis.mean = Vector::Zero(n);
  Matrix centered = snapshots.data;
  if (opts.remove_mean) {
    basis.mean = snapshots.data.rowwise().mean();
    centered.colwise() -= basis.mean;
  }
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Index keep = 0;
  while (keep < r && s(keep) > opts.rank_tol * s(0)) ++keep;
  if (keep == 0) fail(ErrorCode::kInvalidArgument, "snapshots are all zero");
  basis.modes = svd.matrixU().leftCols(keep);
  basis.singular_values = s.head(keep);
  return basis;
}

GappyPod::GappyPod(const PODBasis& basis, const Placement& p)
    : basis_(basis), placement_(p) {
  p.validate(basis.n());
  const Index k = p.k();
  Matrix sampled(k, basis.r());
  sensor_mean_ = Vector(k);
  for (Index i = 0; i < k; ++i) {
    sampled.row(i) = basis.modes.row(p.indices[i]);
    sensor_mean_(i) = basis.mean(p.indices[i]);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(static_cast<double>(std::max(k, basis.r())) *
                   std::numeric_limits<double>::epsilon());
  cod.compute(sampled);
  // k < r is allowed and yields the minimum-norm coefficients.
  if (cod.rank() < std::min(k, basis.r())) {
    fail(ErrorCode::kDegeneratePlacement,
         "sampled POD modes are rank deficient (rank " +
             std::to_string(cod.rank()) + " < min(k, r) = " +
             std::to_string(std::min(k, basis.r())) + ")",
         cod.rank());
  }
  pinv_ = cod.pseudoInverse();
}

Vector GappyPod::reconstruct(const Vector& s) const {
  return reconstruct_many(Matrix(s)).col(0);
}

Matrix GappyPod::reconstruct_many(const Matrix& s) const {
  require(s.rows() == placement_.k(), "measurement length must equal k");
  Matrix out = basis_.modes * (pinv_ * (s.colwise() - sensor_mean_));
  if (basis_.mean_removed) out.colwise() += basis_.mean;
  return out;
}

Vector gappy_pod_reconstruct(const PODBasis& basis, const Placement& p,
                             const Vector& s) {
  return GappyPod(basis, p).reconstruct(s);
}

}  // namespace pspo
