#include <Eigen/Eigenvalues>
#include <sstream>

#include "doctest.h"
#include "pspo/criterion.hpp"
#include "pspo/error.hpp"
#include "pspo/harness.hpp"

using namespace pspo;

namespace {

// sigma_max / sigma_min through the eigenvalues of W^T W
double kappa_oracle(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(W.transpose() * W);
  const Vector ev = es.eigenvalues();
  return std::sqrt(ev(ev.size() - 1) / ev(0));
}

const CaseModel& heat() {
  static const CaseModel m = build_case(heat1d_case());
  return m;
}

}  // namespace

TEST_CASE("condition number examples") {
  CHECK(condition_number(Matrix::Identity(5, 5)).kappa == doctest::Approx(1.0));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  CHECK(condition_number(d).kappa == doctest::Approx(3.0));
  Matrix s = Matrix::Zero(3, 2);
  s(0, 0) = 1.0;
  s(1, 1) = 1.0;
  CHECK(condition_number(s).kappa == doctest::Approx(1.0));
  CHECK(condition_number(s).log10_kappa == doctest::Approx(0.0));
}

TEST_CASE("condition number of a singular matrix is infinite") {
  Matrix W = Matrix::Random(6, 3);
  W.col(2) = W.col(0);
  const CriterionValue v = condition_number(W);
  CHECK_FALSE(v.rank_ok);
  CHECK(std::isinf(v.kappa));
  CHECK_FALSE(condition_number(Matrix::Random(2, 3)).rank_ok);
}

TEST_CASE("condition number agrees with norm times pseudo-inverse norm") {
  std::srand(3);
  for (int t = 0; t < 5; ++t) {
    const Matrix W = Matrix::Random(50, 20);
    const Matrix pinv = W.completeOrthogonalDecomposition().pseudoInverse();
    const double norm_w = Eigen::JacobiSVD<Matrix>(W).singularValues()(0);
    const double norm_p = Eigen::JacobiSVD<Matrix>(pinv).singularValues()(0);
    CHECK(condition_number(W).kappa == doctest::Approx(norm_w * norm_p).epsilon(1e-8));
    CHECK(condition_number(W).kappa == doctest::Approx(kappa_oracle(W)).epsilon(1e-6));
  }
}

TEST_CASE("condition number is scale invariant") {
  const Matrix W = Matrix::Random(30, 10);
  const double k1 = condition_number(W).kappa;
  for (double c : {1e-3, 1.0, 1e3}) {
    CHECK(condition_number(c * W).kappa == doctest::Approx(k1).epsilon(1e-10));
  }
}

TEST_CASE("spectral route matches the dense route") {
  const CriterionContext ctx(heat().op, 1.0);
  for (Index k : {1, 2, 3, 10, 25, 60}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Placement p = random_placement(400, k, seed + 100 * k);
      const CriterionValue fast = ctx.evaluate(p);
      const CriterionValue exact = ctx.evaluate_exact(p);
      CHECK(fast.rank_ok == exact.rank_ok);
      if (exact.rank_ok) {
        CHECK(fast.kappa == doctest::Approx(exact.kappa).epsilon(1e-8));
      }
    }
  }
  const CriterionContext ctx2(heat().op, 3.5);
  const Placement p = uniform_placement(400, 12);
  CHECK(ctx2.evaluate(p).kappa ==
        doctest::Approx(condition_number(build_augmented(heat().op, p, 3.5, std::nullopt).W).kappa)
            .epsilon(1e-8));
}

TEST_CASE("placement fitness") {
  const CriterionContext ctx(heat().op, 1.0);
  const Placement p = uniform_placement(400, 5);
  CHECK(placement_fitness(p, ctx) == doctest::Approx(ctx.evaluate(p).log10_kappa));
  CHECK(placement_fitness(Placement{{3, 3, 4}}, ctx) == kInfeasiblePenalty);
  CHECK(placement_fitness(Placement{{0, 400}}, ctx) == kInfeasiblePenalty);
}

TEST_CASE("observing every node beats observing l nodes") {
  CaseSpec spec = heat1d_case();
  spec.n = 80;
  spec.stencil_size = 9;
  const CaseModel m = build_case(spec);
  const CriterionContext ctx(m.op, 1.0);
  Placement all;
  for (Index i = 0; i < 80; ++i) all.indices.push_back(i);
  const Placement two = uniform_placement(80, 2);
  CHECK(placement_fitness(all, ctx) < placement_fitness(two, ctx));
}

TEST_CASE("log transform keeps the argmin") {
  CaseSpec spec = heat1d_case();
  spec.n = 12;
  spec.stencil_size = 5;
  const CaseModel m = build_case(spec);
  const CriterionContext ctx(m.op, 1.0);
  const auto by_log = exhaustive_select(ctx, 3);
  const auto by_kappa = exhaustive_select(
      [&](const Placement& p) { return ctx.evaluate(p).kappa; }, 12, 3);
  CHECK(by_log.best == by_kappa.best);
}

TEST_CASE("perturbation sandwich holds") {
  const auto& m = heat();
  Vector lam(2);
  lam << 0.49, 2.25;
  for (std::uint64_t seed : {1u, 2u}) {
    const Placement p = random_placement(400, 8, seed);
    const AugmentedSystem sys = consistent_system(m.op, p, 1.0, lam);
    const BoundReport r = verify_bounds(sys, 200, 1e-3, seed);
    CHECK(r.violations == 0);
    CHECK(r.trials == 200);
    CHECK(r.tightest_ratio_high <= 1.0);
    CHECK(r.tightest_ratio_low <= 1.0);
    CHECK(r.min_ratio <= r.max_ratio);
  }
}

TEST_CASE("zero perturbation gives zero ratios") {
  Vector lam(2);
  lam << 3.0, 4.0;
  const AugmentedSystem sys = consistent_system(heat().op, uniform_placement(400, 6), 1.0, lam);
  const BoundReport r = verify_bounds(sys, 10, 0.0, 1);
  CHECK(r.violations == 0);
  CHECK(r.min_ratio == 0.0);
  CHECK(r.max_ratio == 0.0);
  std::stringstream ss;
  write_bound_report_json(ss, r);
  CHECK(ss.str().find("\"violations\": 0") != std::string::npos);
}
