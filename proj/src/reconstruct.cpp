#include "pspo/reconstruct.hpp"

#include "pspo/error.hpp"

namespace pspo {

Metrics metrics(const Matrix& pred, const Matrix& truth) {
  require(pred.rows() == truth.rows() && pred.cols() == truth.cols(),
          "prediction and truth shapes differ");
  require(pred.size() > 0, "empty field");
  const Matrix diff = pred - truth;
  return {diff.cwiseAbs().maxCoeff(),
          diff.squaredNorm() / static_cast<double>(diff.size())};
}

Metrics metrics(const Vector& pred, const Vector& truth) {
  return metrics(Matrix(pred), Matrix(truth));
}

namespace {

Matrix physics_matrix(const DiscreteOperator& op, const Placement& p,
                      double gamma) {
  if (p.indices.empty()) {
    fail(ErrorCode::kRankDeficient,
         "no sensors: source parameters are unidentifiable", 0);
  }
  return build_augmented(op, p, gamma, std::nullopt).W;
}

}  // namespace

PhysicsReconstructor::PhysicsReconstructor(const DiscreteOperator& op,
                                           const Placement& p, double gamma)
    : n_(op.n()),
      l_(op.l()),
      k_(p.k()),
      physics_rhs_(gamma * (op.f_fixed + op.g)),
      solver_(physics_matrix(op, p, gamma)) {
  if (!solver_.full_column_rank()) {
    fail(ErrorCode::kRankDeficient,
         "augmented system is rank deficient (rank " +
             std::to_string(solver_.rank()) + ")",
         solver_.rank());
  }
}

PhysicsEstimate PhysicsReconstructor::reconstruct(
    const Vector& measurements) const {
  if (measurements.size() != k_) {
    fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(k_) +
                                        " measurements");
  }
  Vector C(physics_rhs_.size() + k_);
  C << physics_rhs_, measurements;
  const Vector full = solver_.solve(C);
  return {full.head(n_), full.tail(l_)};
}

Matrix PhysicsReconstructor::reconstruct_many(
    const Matrix& measurements) const {
  if (measurements.rows() != k_) {
    fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(k_) +
                                        " measurements per sample");
  }
  Matrix C(physics_rhs_.size() + k_, measurements.cols());
  C.topRows(physics_rhs_.size()) =
      physics_rhs_.replicate(1, measurements.cols());
  C.bottomRows(k_) = measurements;
  return solver_.solve(C).topRows(n_);
}

PhysicsEstimate physics_reconstruct(const DiscreteOperator& op,
                                    const Placement& p,
                                    const Vector& measurements, double gamma) {
  return PhysicsReconstructor(op, p, gamma).reconstruct(measurements);
}

PodNnModel pod_nn_train(const PODBasis& basis, const Matrix& inputs,
                        const Matrix& fields, MlpTrainConfig cfg) {
  require(fields.cols() == basis.n(), "field width must equal n");
  Dataset data;
  data.inputs = inputs;
  data.targets = basis.coefficients(fields.transpose()).transpose();
  if (cfg.layers.empty()) {
    cfg.layers = {inputs.cols(), 64, 64, 64, basis.r()};
  }
  cfg.layers.front() = inputs.cols();
  cfg.layers.back() = basis.r();
  return {basis, mlp_train(data, cfg).model};
}

Matrix pod_nn_reconstruct(const PodNnModel& model, const Matrix& inputs) {
  const Matrix alpha = mlp_predict(model.net, inputs);  // N x r
  return model.basis.expand(alpha.transpose()).transpose();
}

Vector pod_nn_reconstruct(const MlpModel& net, const PODBasis& basis,
                          const Vector& s) {
  return basis.expand(mlp_predict(net, s));
}

Matrix sample_sensors(const Matrix& fields, const Placement& p) {
  p.validate(fields.cols());
  Matrix out(fields.rows(), p.k());
  for (Index r = 0; r < p.k(); ++r) out.col(r) = fields.col(p.indices[r]);
  return out;
}

}  // namespace pspo
