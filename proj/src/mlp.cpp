#include "pspo/mlp.hpp"

#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>

#include "pspo/error.hpp"

namespace pspo {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

struct Cache {
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // post[0] is the input
};

Matrix normalize_inputs(const MlpModel& m, const Matrix& inputs) {
  // inputs: N x k  ->  k x N normalized
  Matrix x = inputs.transpose();
  x.colwise() -= m.input_shift;
  return m.input_scale.cwiseInverse().asDiagonal() * x;
}

Matrix normalize_targets(const MlpModel& m, const Matrix& targets) {
  Matrix y = targets.transpose();
  y.colwise() -= m.output_shift;
  return m.output_scale.cwiseInverse().asDiagonal() * y;
}

const Matrix& forward(const MlpModel& m, const Matrix& x, Cache& cache) {
  const std::size_t layers = m.weights.size();
  cache.pre.resize(layers);
  cache.post.resize(layers + 1);
  cache.post[0] = x;
  for (std::size_t i = 0; i < layers; ++i) {
    cache.pre[i] = m.weights[i] * cache.post[i];
    cache.pre[i].colwise() += m.biases[i];
    if (i + 1 < layers) {
      cache.post[i + 1] = cache.pre[i].unaryExpr([](double v) { return gelu(v); });
    } else {
      cache.post[i + 1] = cache.pre[i];
    }
  }
  return cache.post.back();
}

// Gradients of mean((out - y)^2) with respect to every layer.
double backward(const MlpModel& m, const Matrix& y, Cache& cache,
                std::vector<Matrix>& gw, std::vector<Vector>& gb) {
  const std::size_t layers = m.weights.size();
  const Matrix& out = cache.post.back();
  const Matrix diff = out - y;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  gw.resize(layers);
  gb.resize(layers);
  Matrix delta = (2.0 / count) * diff;
  for (std::size_t li = layers; li-- > 0;) {
    gw[li].noalias() = delta * cache.post[li].transpose();
    gb[li] = delta.rowwise().sum();
    if (li == 0) break;
    Matrix back = m.weights[li].transpose() * delta;
    delta = back.cwiseProduct(
        cache.pre[li - 1].unaryExpr([](double v) { return gelu_derivative(v); }));
  }
  return loss;
}

Vector column_std(const Matrix& a, const Vector& mean) {
  Vector s(a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const double var =
        (a.col(j).array() - mean(j)).square().mean();
    s(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Index MlpModel::parameter_count() const {
  Index total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i].size() + biases[i].size();
  }
  return total;
}

void MlpModel::validate() const {
  require(layer_sizes.size() >= 2, "an MLP needs at least two layer sizes");
  require(weights.size() + 1 == layer_sizes.size() &&
              biases.size() == weights.size(),
          "MLP parameter arrays do not match the layer list");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    require(weights[i].rows() == layer_sizes[i + 1] &&
                weights[i].cols() == layer_sizes[i] &&
                biases[i].size() == layer_sizes[i + 1],
            "MLP layer " + std::to_string(i) + " has incompatible shapes");
    require(weights[i].allFinite() && biases[i].allFinite(),
            "MLP parameters contain non-finite values");
  }
  require(input_shift.size() == inputs() && input_scale.size() == inputs() &&
              output_shift.size() == outputs() &&
              output_scale.size() == outputs(),
          "MLP normalization has the wrong length");
}

Vector MlpModel::flat_parameters() const {
  Vector theta(parameter_count());
  Index off = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    theta.segment(off, weights[i].size()) = weights[i].reshaped();
    off += weights[i].size();
    theta.segment(off, biases[i].size()) = biases[i];
    off += biases[i].size();
  }
  return theta;
}

void MlpModel::set_flat_parameters(const Vector& theta) {
  require(theta.size() == parameter_count(), "parameter vector length");
  Index off = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i].reshaped() = theta.segment(off, weights[i].size());
    off += weights[i].size();
    biases[i] = theta.segment(off, biases[i].size());
    off += biases[i].size();
  }
}

MlpModel make_mlp(const std::vector<Index>& layer_sizes) {
  require(layer_sizes.size() >= 2, "an MLP needs at least two layer sizes");
  for (Index s : layer_sizes) require(s >= 1, "layer widths must be >= 1");
  MlpModel m;
  m.layer_sizes = layer_sizes;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    m.weights.push_back(Matrix::Zero(layer_sizes[i + 1], layer_sizes[i]));
    m.biases.push_back(Vector::Zero(layer_sizes[i + 1]));
  }
  m.input_shift = Vector::Zero(layer_sizes.front());
  m.input_scale = Vector::Ones(layer_sizes.front());
  m.output_shift = Vector::Zero(layer_sizes.back());
  m.output_scale = Vector::Ones(layer_sizes.back());
  return m;
}

MlpModel init_mlp(const std::vector<Index>& layer_sizes, std::uint64_t seed) {
  MlpModel m = make_mlp(layer_sizes);
  std::mt19937_64 rng(seed);
  for (auto& w : m.weights) {
    std::normal_distribution<double> normal(
        0.0, 1.0 / std::sqrt(static_cast<double>(w.cols())));
    for (Index j = 0; j < w.cols(); ++j) {
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = normal(rng);
    }
  }
  return m;
}

Matrix mlp_predict(const MlpModel& model, const Matrix& inputs) {
  require(inputs.cols() == model.inputs(), "input width mismatch");
  Cache cache;
  const Matrix& out = forward(model, normalize_inputs(model, inputs), cache);
  Matrix y = model.output_scale.asDiagonal() * out;
  y.colwise() += model.output_shift;
  return y.transpose();
}

Vector mlp_predict(const MlpModel& model, const Vector& input) {
  return mlp_predict(model, Matrix(input.transpose())).row(0).transpose();
}

void Dataset::validate() const {
  require(inputs.rows() == targets.rows(), "dataset row counts differ");
  require(inputs.rows() >= 1, "dataset is empty");
  require(inputs.allFinite() && targets.allFinite(),
          "dataset contains non-finite entries");
}

double mlp_loss_and_gradient(const MlpModel& model, const Matrix& inputs,
                             const Matrix& targets, Vector* gradient) {
  Cache cache;
  forward(model, normalize_inputs(model, inputs), cache);
  std::vector<Matrix> gw;
  std::vector<Vector> gb;
  const double loss =
      backward(model, normalize_targets(model, targets), cache, gw, gb);
  if (gradient) {
    gradient->resize(model.parameter_count());
    Index off = 0;
    for (std::size_t i = 0; i < gw.size(); ++i) {
      gradient->segment(off, gw[i].size()) = gw[i].reshaped();
      off += gw[i].size();
      gradient->segment(off, gb[i].size()) = gb[i];
      off += gb[i].size();
    }
  }
  return loss;
}

MlpTrainResult mlp_train(const Dataset& data, const MlpTrainConfig& cfg) {
  data.validate();
  require(cfg.layers.size() >= 2, "layer list needs input and output widths");
  require(cfg.layers.front() == data.inputs.cols(),
          "first layer width must equal the measurement count");
  require(cfg.layers.back() == data.targets.cols(),
          "last layer width must equal the target width");
  require(cfg.learning_rate > 0.0 && cfg.adam_iters >= 0,
          "invalid optimizer settings");

  MlpTrainResult res;
  MlpModel& m = res.model;
  m = init_mlp(cfg.layers, cfg.seed);
  if (cfg.standardize) {
    m.input_shift = data.inputs.colwise().mean().transpose();
    m.input_scale = column_std(data.inputs, m.input_shift);
    m.output_shift = data.targets.colwise().mean().transpose();
    m.output_scale = column_std(data.targets, m.output_shift);
  }
  const Matrix x = normalize_inputs(m, data.inputs);
  const Matrix y = normalize_targets(m, data.targets);

  const std::size_t layers = m.weights.size();
  std::vector<Matrix> mw(layers), vw(layers), gw;
  std::vector<Vector> mb(layers), vb(layers), gb;
  for (std::size_t i = 0; i < layers; ++i) {
    mw[i] = vw[i] = Matrix::Zero(m.weights[i].rows(), m.weights[i].cols());
    mb[i] = vb[i] = Vector::Zero(m.biases[i].size());
  }
  res.loss_history.reserve(static_cast<std::size_t>(cfg.adam_iters));
  Cache cache;
  double b1t = 1.0;
  double b2t = 1.0;
  for (Index step = 0; step < cfg.adam_iters; ++step) {
    forward(m, x, cache);
    const double loss = backward(m, y, cache, gw, gb);
    if (!std::isfinite(loss)) {
      fail(ErrorCode::kDivergence,
           "training loss became non-finite at step " + std::to_string(step),
           step);
    }
    res.loss_history.push_back(loss);
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    const double lr_t = cfg.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    const double eps_t = cfg.epsilon * std::sqrt(1.0 - b2t);
    for (std::size_t i = 0; i < layers; ++i) {
      mw[i] = cfg.beta1 * mw[i] + (1.0 - cfg.beta1) * gw[i];
      vw[i] = cfg.beta2 * vw[i] + (1.0 - cfg.beta2) * gw[i].cwiseAbs2();
      m.weights[i].array() -=
          lr_t * mw[i].array() / (vw[i].array().sqrt() + eps_t);
      mb[i] = cfg.beta1 * mb[i] + (1.0 - cfg.beta1) * gb[i];
      vb[i] = cfg.beta2 * vb[i] + (1.0 - cfg.beta2) * gb[i].cwiseAbs2();
      m.biases[i].array() -=
          lr_t * mb[i].array() / (vb[i].array().sqrt() + eps_t);
    }
  }
  return res;
}

void save_mlp(std::ostream& os, const MlpModel& model) {
  model.validate();
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  nlohmann::ordered_json j;
  j["format"] = "pspo-mlp";
  j["version"] = 1;
  j["activation"] = "gelu";
  j["layer_sizes"] = model.layer_sizes;
  j["parameters"] = vec(model.flat_parameters());
  j["input_shift"] = vec(model.input_shift);
  j["input_scale"] = vec(model.input_scale);
  j["output_shift"] = vec(model.output_shift);
  j["output_scale"] = vec(model.output_scale);
  os << j.dump() << '\n';
}

MlpModel load_mlp(std::istream& is) {
  try {
    nlohmann::json j;
    is >> j;
    if (j.at("format") != "pspo-mlp" || j.at("version") != 1) {
      fail(ErrorCode::kIo, "unsupported model format");
    }
    MlpModel m = make_mlp(j.at("layer_sizes").get<std::vector<Index>>());
    auto vec = [&](const char* key) {
      const auto v = j.at(key).get<std::vector<double>>();
      return Vector(Eigen::Map<const Vector>(v.data(),
                                             static_cast<Index>(v.size())));
    };
    m.set_flat_parameters(vec("parameters"));
    m.input_shift = vec("input_shift");
    m.input_scale = vec("input_scale");
    m.output_shift = vec("output_shift");
    m.output_scale = vec("output_scale");
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, std::string("model file: ") + e.what());
  }
}

}  // namespace pspo
