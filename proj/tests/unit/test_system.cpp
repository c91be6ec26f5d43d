#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pspo/error.hpp"
#include "pspo/harness.hpp"
#include "pspo/system.hpp"

using namespace pspo;

namespace {

const CaseModel& heat() {
  static const CaseModel m = build_case(heat1d_case());
  return m;
}

Vector lambda_ref() {
  Vector l(2);
  l << 0.49, 2.25;
  return l;
}

}  // namespace

TEST_CASE("selection matrix matches the printed example") {
  const Matrix O = selection_matrix(Placement{{0, 2, 4}}, 7);
  Matrix expect = Matrix::Zero(3, 7);
  expect(0, 0) = 1;
  expect(1, 2) = 1;
  expect(2, 4) = 1;
  CHECK(O == expect);
  CHECK(selection_matrix(Placement{{0, 1, 2, 3}}, 4).isIdentity(0.0));
}

TEST_CASE("selection matrix row and column sums") {
  const Placement p = random_placement(50, 12, 3);
  const Matrix O = selection_matrix(p, 50);
  CHECK((O.rowwise().sum().array() == 1.0).all());
  const Vector cs = O.colwise().sum().transpose();
  for (Index j = 0; j < cs.size(); ++j) CHECK((cs(j) == 0.0 || cs(j) == 1.0));
}

TEST_CASE("invalid placements") {
  auto code_of = [](const Placement& p, Index n) {
    try {
      p.validate(n);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  CHECK(code_of(Placement{{3, 3}}, 5) == ErrorCode::kInvalidPlacement);
  CHECK(code_of(Placement{{0, 5}}, 5) == ErrorCode::kInvalidPlacement);
  CHECK(code_of(Placement{{-1}}, 5) == ErrorCode::kInvalidPlacement);
  CHECK_THROWS_AS(selection_matrix(Placement{{3, 3}}, 5), Error);
}

TEST_CASE("augmented system shape and blocks") {
  const auto& m = heat();
  const Placement p = uniform_placement(400, 10);
  const AugmentedSystem sys = build_augmented(m.op, p, 2.0, std::nullopt);
  CHECK(sys.W.rows() == 410);
  CHECK(sys.W.cols() == 402);
  CHECK_FALSE(sys.measurements_set);
  CHECK(sys.C.tail(10).isZero(0.0));
  CHECK(sys.W.topLeftCorner(400, 400).isApprox(2.0 * Matrix(m.op.W1)));
  CHECK(sys.W.topRightCorner(400, 2).isApprox(-2.0 * m.op.source_basis));
  CHECK(sys.W.bottomLeftCorner(10, 400) == selection_matrix(p, 400));
  CHECK(sys.W.bottomRightCorner(10, 2).isZero(0.0));
  CHECK_THROWS_AS(build_augmented(m.op, p, 1.0, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(build_augmented(m.op, p, 0.0, std::nullopt), Error);
}

TEST_CASE("noise model") {
  const Vector v = Vector::LinSpaced(20, -3.0, 4.0);
  CHECK(apply_noise(v, {0.0, 9}) == v);
  CHECK(apply_noise(v, {0.1, 9}) == apply_noise(v, {0.1, 9}));
  const Vector ones = Vector::Ones(100000);
  const Vector out = apply_noise(ones, {0.1, 4});
  const Vector e = out.array() - 1.0;
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().sum() / (e.size() - 1));
  CHECK(sd >= 0.095);
  CHECK(sd <= 0.105);
  CHECK_THROWS_AS(apply_noise(v, {-0.1, 1}), Error);
}

TEST_CASE("noiseless measurements are recovered exactly") {
  const auto& m = heat();
  const Vector u = forward_solve(m.op, lambda_ref());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Placement p = random_placement(400, 10, seed);
    Vector s(p.k());
    for (Index r = 0; r < p.k(); ++r) s(r) = u(p.indices[r]);
    const AugmentedSystem sys = build_augmented(m.op, p, 1.0, s);
    const LsqSolution sol = lsq_solve(sys);
    CHECK((sol.lambda - lambda_ref()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((sol.U1 - u).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(sol.residual_norm < 1e-6 * sys.C.norm());
  }
}

TEST_CASE("orthonormal columns project exactly") {
  const Matrix Q = Eigen::HouseholderQR<Matrix>(Matrix::Random(8, 3)).householderQ() *
                   Matrix::Identity(8, 3);
  const LeastSquaresSolver solver(Q);
  const Vector x = solver.solve(Vector(Q.col(0)));
  CHECK((x - Vector::Unit(3, 0)).norm() < 1e-12);
}

TEST_CASE("least squares solution is linear in C") {
  const Matrix W = Matrix::Random(30, 6);
  const LeastSquaresSolver solver(W);
  const Vector a = Vector::Random(30), b = Vector::Random(30);
  const Vector lhs = solver.solve(Vector(a + b));
  const Vector rhs = solver.solve(a) + solver.solve(b);
  CHECK((lhs - rhs).norm() <= 1e-9 * lhs.norm());
}

TEST_CASE("rank deficiency is reported") {
  Matrix W = Matrix::Random(10, 4);
  W.col(3) = W.col(0) + W.col(1);
  const LeastSquaresSolver solver(W);
  CHECK(solver.rank() == 3);
  CHECK_FALSE(solver.full_column_rank());
  try {
    solver.solve(Vector(Vector::Ones(10)));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRankDeficient);
    CHECK(e.detail().value() == 3);
  }
}

TEST_CASE("proportional source modes are unidentifiable") {
  PointCloud c = generate_1d(0.0, 1.0, 5);
  Physics ph;
  ph.modes.push_back({"a", [](const Coord&) { return 1.0; }, {}});
  ph.modes.push_back({"b", [](const Coord&) { return 2.0; }, {}});
  const DiscreteOperator op = assemble(c, knn_stencils(c, 3), RbfConfig{}, ph);
  const AugmentedSystem sys = build_augmented(op, Placement{{2}}, 1.0, Vector::Ones(1));
  CHECK_THROWS_AS(lsq_solve(sys), Error);
}

TEST_CASE("placement json round trip") {
  std::stringstream ss;
  write_placement_json(ss, Placement{{4, 9, 17}}, 400, 4.25, 1.0, 7);
  const PlacementRecord r = read_placement_json(ss);
  CHECK(r.placement.indices == std::vector<Index>{4, 9, 17});
  CHECK(r.n == 400);
  CHECK(r.criterion_log10 == 4.25);
  CHECK(r.gamma == 1.0);
  CHECK(r.seed == 7);
  std::stringstream bad("{\"n\": 4, \"k\": 2, \"indices\": [1]}");
  CHECK_THROWS_AS(read_placement_json(bad), Error);
}

TEST_CASE("full observation with a large weight lands on the physics manifold") {
  CaseSpec spec = heat1d_case();
  spec.n = 60;
  spec.stencil_size = 9;
  const CaseModel m = build_case(spec);
  Placement all;
  for (Index i = 0; i < 60; ++i) all.indices.push_back(i);
  Vector s = forward_solve(m.op, lambda_ref());
  s = apply_noise(s, {0.05, 3});
  const LsqSolution sol = lsq_solve(build_augmented(m.op, all, 1e6, s));
  const Vector fwd = forward_solve(m.op, sol.lambda);
  CHECK((sol.U1 - fwd).cwiseAbs().maxCoeff() < 1e-6);
}
