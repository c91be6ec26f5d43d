#pragma once

#include <string>

#include "pspo/system.hpp"
#include "pspo/types.hpp"

namespace pspo {

/// Field snapshots stored column-wise (n x N).
struct SnapshotMatrix {
  Matrix data;
  std::string provenance;

  Index n() const { return data.rows(); }
  Index count() const { return data.cols(); }
  void validate() const;
};

struct PodOptions {
  bool remove_mean = false;
  /// Modes with sigma_j <= rank_tol * sigma_1 are dropped, so the returned
  /// basis may hold fewer than the requested r modes.
  double rank_tol = 1e-10;
};

struct PODBasis {
  Matrix modes;            // n x r, orthonormal columns
  Vector singular_values;  // length r, non-increasing
  Vector mean;             // length n; zero unless mean_removed
  bool mean_removed = false;

  Index r() const { return modes.cols(); }
  Index n() const { return modes.rows(); }
  /// alpha = Phi^T (u - mean), one column per snapshot.
  Matrix coefficients(const Matrix& fields) const;
  Matrix expand(const Matrix& coefficients) const;
};

PODBasis pod_fit(const SnapshotMatrix& snapshots, Index r,
                 const PodOptions& opts = {});

/// Gappy reconstruction u = Phi (O Phi)^+ (s - O mean), with the
/// pseudo-inverse factorized once per placement.
class GappyPod {
 public:
  GappyPod(const PODBasis& basis, const Placement& p);

  Vector reconstruct(const Vector& s) const;
  Matrix reconstruct_many(const Matrix& s) const;  // one sample per column

 private:
  PODBasis basis_;
  Placement placement_;
  Matrix pinv_;  // r x k
  Vector sensor_mean_;
};

Vector gappy_pod_reconstruct(const PODBasis& basis, const Placement& p,
                             const Vector& s);

}  // namespace pspo
