#include "doctest.h"
#include "pspo/error.hpp"
#include "pspo/harness.hpp"
#include "pspo/reconstruct.hpp"

using namespace pspo;

namespace {

const CaseModel& heat() {
  static const CaseModel m = [] {
    CaseSpec s = heat1d_case();
    s.truth = TruthKind::kDiscrete;
    return build_case(s);
  }();
  return m;
}

}  // namespace

TEST_CASE("metrics examples") {
  const Vector z = Vector::Zero(3);
  CHECK(metrics(z, z).max_ae == 0.0);
  CHECK(metrics(z, z).mse == 0.0);
  CHECK(metrics(Vector(Vector::Zero(2)), Vector((Vector(2) << 1.0, -1.0).finished())).mse == 1.0);
  const Metrics m = metrics(Vector((Vector(3) << 3.0, 0.0, 0.0).finished()), z);
  CHECK(m.max_ae == 3.0);
  CHECK(m.mse == 3.0);
  CHECK_THROWS_AS(metrics(Vector(Vector::Zero(2)), z), Error);
  std::srand(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = Matrix::Random(4, 7), b = Matrix::Random(4, 7);
    const Metrics r = metrics(a, b);
    CHECK(r.mse <= r.max_ae * r.max_ae);
  }
}

TEST_CASE("physics reconstruction is exact without noise") {
  Vector lam(2);
  lam << 0.49, 2.25;
  const Vector u = forward_solve(heat().op, lam);
  for (std::uint64_t seed : {4u, 5u}) {
    const Placement p = random_placement(400, 10, seed);
    const Matrix s = sample_sensors(Matrix(u.transpose()), p);
    const PhysicsEstimate est = physics_reconstruct(heat().op, p, s.row(0).transpose(), 1.0);
    CHECK((est.field - u).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((est.lambda - lam).norm() < 1e-6);
  }
}

TEST_CASE("physics reconstruction needs sensors") {
  try {
    PhysicsReconstructor rec(heat().op, Placement{}, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRankDeficient);
  }
  try {
    PhysicsReconstructor rec(heat().op, Placement{{5}}, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRankDeficient);
  }
  const PhysicsReconstructor rec(heat().op, uniform_placement(400, 4), 1.0);
  CHECK_THROWS_AS(rec.reconstruct(Vector::Zero(3)), Error);
}

TEST_CASE("batched and single physics reconstructions agree") {
  const Placement p = uniform_placement(400, 6);
  const PhysicsReconstructor rec(heat().op, p, 1.0);
  const Matrix s = Matrix::Random(6, 3);
  const Matrix many = rec.reconstruct_many(s);
  CHECK((many.col(2) - rec.reconstruct(s.col(2)).field).norm() < 1e-9 * many.norm());
}

TEST_CASE("sample sensors") {
  Matrix f(2, 5);
  f << 0, 1, 2, 3, 4, 10, 11, 12, 13, 14;
  const Matrix s = sample_sensors(f, Placement{{4, 1}});
  CHECK(s(0, 0) == 4);
  CHECK(s(1, 1) == 11);
}

TEST_CASE("pod-nn expands predicted coefficients") {
  const FieldSet fs = make_fields(heat(), 40, 3);
  const PODBasis b = pod_fit({fs.fields.transpose(), "heat"}, 10);
  const Placement p = uniform_placement(400, 10);
  MlpTrainConfig cfg;
  cfg.layers = {10, 16, b.r()};
  cfg.adam_iters = 300;
  const PodNnModel model = pod_nn_train(b, sample_sensors(fs.fields, p), fs.fields, cfg);
  CHECK(model.net.outputs() == b.r());
  const Matrix rec = pod_nn_reconstruct(model, sample_sensors(fs.fields, p));
  CHECK(rec.rows() == 40);
  CHECK(rec.cols() == 400);
  const Vector one = pod_nn_reconstruct(model.net, b, sample_sensors(fs.fields, p).row(0).transpose());
  CHECK((one - rec.row(0).transpose()).norm() < 1e-9 * one.norm());
}

TEST_CASE("noise raises the error of every reconstructor") {
  const FieldSet train = make_fields(heat(), 80, 11);
  const FieldSet test = make_fields(heat(), 20, 12);
  const PODBasis b = pod_fit({train.fields.transpose(), "heat"}, 10);
  const Placement p = uniform_placement(400, 10);
  const Matrix clean_train = sample_sensors(train.fields, p);
  const Matrix clean_test = sample_sensors(test.fields, p);

  auto noisy = [](Matrix m, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::Map<Vector> flat(m.data(), m.size());
    apply_noise_inplace(flat, sigma, rng);
    return m;
  };

  for (const std::string name : {"physics", "gappy_pod", "pod_nn", "mlp"}) {
    double err[2] = {0.0, 0.0};
    const double sigmas[2] = {0.0, 0.5};
    for (int si = 0; si < 2; ++si) {
      const Matrix tr = noisy(clean_train, sigmas[si], 100 + si);
      std::function<Matrix(const Matrix&)> predict;
      if (name == "physics") {
        auto rec = std::make_shared<PhysicsReconstructor>(heat().op, p, 1.0);
        predict = [rec](const Matrix& s) -> Matrix { return rec->reconstruct_many(s.transpose()).transpose(); };
      } else if (name == "gappy_pod") {
        auto g = std::make_shared<GappyPod>(b, p);
        predict = [g](const Matrix& s) -> Matrix { return g->reconstruct_many(s.transpose()).transpose(); };
      } else if (name == "pod_nn") {
        MlpTrainConfig cfg;
        cfg.layers = {10, 32, 32, b.r()};
        cfg.adam_iters = 1500;
        auto m = std::make_shared<PodNnModel>(pod_nn_train(b, tr, train.fields, cfg));
        predict = [m](const Matrix& s) -> Matrix { return pod_nn_reconstruct(*m, s); };
      } else {
        MlpTrainConfig cfg;
        cfg.layers = {10, 32, 32, 400};
        cfg.adam_iters = 1500;
        Dataset d{tr, train.fields};
        auto net = std::make_shared<MlpModel>(mlp_train(d, cfg).model);
        predict = [net](const Matrix& s) -> Matrix { return mlp_predict(*net, s); };
      }
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        err[si] += metrics(predict(noisy(clean_test, sigmas[si], seed)), test.fields).mse / 10.0;
      }
    }
    INFO(name << " clean " << err[0] << " noisy " << err[1]);
    CHECK(err[0] * 10.0 < err[1]);
  }
}
