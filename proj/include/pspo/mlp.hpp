#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pspo/types.hpp"

namespace pspo {

/// Dense feed-forward regressor: GELU on hidden layers, identity output.
/// Inputs and outputs pass through fixed affine maps (z-scoring fitted on
/// the training set) so that the raw-unit interface stays unchanged.
struct MlpModel {
  std::vector<Index> layer_sizes;
  std::vector<Matrix> weights;  // weights[i] is sizes[i+1] x sizes[i]
  std::vector<Vector> biases;
  Vector input_shift, input_scale;
  Vector output_shift, output_scale;

  Index inputs() const { return layer_sizes.front(); }
  Index outputs() const { return layer_sizes.back(); }
  Index parameter_count() const;
  void validate() const;

  /// Flat parameter view in layer order (W0 column-major, b0, W1, b1, ...).
  Vector flat_parameters() const;
  void set_flat_parameters(const Vector& theta);
};

/// Identity normalization, zero parameters.
MlpModel make_mlp(const std::vector<Index>& layer_sizes);

/// Fan-in scaled initialization: W ~ N(0, 1/fan_in), b = 0.
MlpModel init_mlp(const std::vector<Index>& layer_sizes, std::uint64_t seed);

/// One sample per row of `inputs`.
Matrix mlp_predict(const MlpModel& model, const Matrix& inputs);
Vector mlp_predict(const MlpModel& model, const Vector& input);

struct Dataset {
  Matrix inputs;   // N x k
  Matrix targets;  // N x t
  enum class Split { kTrain, kTest } split = Split::kTrain;

  Index size() const { return inputs.rows(); }
  void validate() const;
};

struct MlpTrainConfig {
  std::vector<Index> layers;  // including input and output widths
  double learning_rate = 1e-3;
  Index adam_iters = 4000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool standardize = true;
};

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // normalized-space MSE before each step
};

/// Full-batch Adam on mean squared error. Throws kDivergence on a
/// non-finite loss (detail = step).
MlpTrainResult mlp_train(const Dataset& data, const MlpTrainConfig& cfg);

/// Mean squared error in normalized units and its gradient with respect to
/// the flat parameter vector; exposed for gradient checks.
double mlp_loss_and_gradient(const MlpModel& model, const Matrix& inputs,
                             const Matrix& targets, Vector* gradient);

double gelu(double x);
double gelu_derivative(double x);

/// JSON: {"format": "pspo-mlp", "version": 1, "layer_sizes": [...],
/// "parameters": [...], "input_shift": [...], ...}.
void save_mlp(std::ostream& os, const MlpModel& model);
MlpModel load_mlp(std::istream& is);

}  // namespace pspo
