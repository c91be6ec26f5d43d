#pragma once

#include "pspo/mlp.hpp"
#include "pspo/pod.hpp"
#include "pspo/rbffd.hpp"
#include "pspo/system.hpp"

namespace pspo {

struct Metrics {
  double max_ae = 0.0;
  double mse = 0.0;
};

/// Max absolute error and mean squared error over all entries.
Metrics metrics(const Matrix& pred, const Matrix& truth);
Metrics metrics(const Vector& pred, const Vector& truth);

struct PhysicsEstimate {
  Vector field;
  Vector lambda;
};

/// Least-squares solve of the augmented system for one placement, with the
/// factorization shared across measurement vectors.
class PhysicsReconstructor {
 public:
  PhysicsReconstructor(const DiscreteOperator& op, const Placement& p,
                       double gamma);

  PhysicsEstimate reconstruct(const Vector& measurements) const;
  /// One measurement vector per column; returns fields column-wise.
  Matrix reconstruct_many(const Matrix& measurements) const;

 private:
  Index n_ = 0;
  Index l_ = 0;
  Index k_ = 0;
  Vector physics_rhs_;
  LeastSquaresSolver solver_;
};

PhysicsEstimate physics_reconstruct(const DiscreteOperator& op,
                                    const Placement& p,
                                    const Vector& measurements, double gamma);

/// MLP regressing POD coefficients from measurements.
struct PodNnModel {
  PODBasis basis;
  MlpModel net;
};

/// Targets are alpha_i = Phi_r^T u_i; `fields` holds one clean field per
/// row, `inputs` the matching noisy measurements.
PodNnModel pod_nn_train(const PODBasis& basis, const Matrix& inputs,
                        const Matrix& fields, MlpTrainConfig cfg);

/// field = Phi_r * mlp(s); one sample per row.
Matrix pod_nn_reconstruct(const PodNnModel& model, const Matrix& inputs);
Vector pod_nn_reconstruct(const MlpModel& net, const PODBasis& basis,
                          const Vector& s);

/// Rows of `fields` sampled at the placement (one sample per row).
Matrix sample_sensors(const Matrix& fields, const Placement& p);

}  // namespace pspo
