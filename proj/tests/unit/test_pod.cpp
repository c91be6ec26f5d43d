#include "doctest.h"
#include "pspo/error.hpp"
#include "pspo/pod.hpp"

using namespace pspo;

namespace {

SnapshotMatrix subspace_snapshots(Index n, Index r, Index count, unsigned seed) {
  std::srand(seed);
  const Matrix basis = Matrix::Random(n, r);
  const Matrix coeffs = Matrix::Random(r, count);
  return {basis * coeffs, "random"};
}

}  // namespace

TEST_CASE("rank one snapshots") {
  const Vector v = Vector::LinSpaced(30, 1.0, 2.0);
  Matrix data(30, 5);
  for (Index j = 0; j < 5; ++j) data.col(j) = (j + 1.0) * v;
  const PODBasis b = pod_fit({data, "rank1"}, 1);
  REQUIRE(b.r() == 1);
  const double cosine = std::abs(b.modes.col(0).dot(v)) / v.norm();
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
  // asking for more modes than the data holds truncates to the rank
  CHECK(pod_fit({data, "rank1"}, 4).r() == 1);
}

TEST_CASE("projection onto a full-rank basis is exact") {
  const SnapshotMatrix s = subspace_snapshots(40, 4, 12, 1);
  const PODBasis b = pod_fit(s, 4);
  CHECK(b.r() == 4);
  const Matrix back = b.expand(b.coefficients(s.data));
  CHECK((back - s.data).cwiseAbs().maxCoeff() < 1e-8 * s.data.cwiseAbs().maxCoeff());
  CHECK((b.modes.transpose() * b.modes).isIdentity(1e-12));
  for (Index i = 1; i < b.r(); ++i) {
    CHECK(b.singular_values(i) <= b.singular_values(i - 1));
  }
}

TEST_CASE("mean removal option") {
  SnapshotMatrix s = subspace_snapshots(20, 2, 10, 2);
  s.data.colwise() += Vector::Constant(20, 5.0);
  PodOptions opts;
  opts.remove_mean = true;
  const PODBasis b = pod_fit(s, 2, opts);
  CHECK(b.mean_removed);
  const Matrix back = b.expand(b.coefficients(s.data));
  CHECK((back - s.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pod_fit argument checks") {
  const SnapshotMatrix s = subspace_snapshots(10, 2, 5, 3);
  CHECK_THROWS_AS(pod_fit(s, 0), Error);
  CHECK_THROWS_AS(pod_fit(s, 6), Error);
  CHECK_THROWS_AS(pod_fit({Matrix::Zero(10, 5), "zero"}, 2), Error);
}

TEST_CASE("gappy reconstruction of an in-span field") {
  const SnapshotMatrix s = subspace_snapshots(50, 5, 20, 4);
  const PODBasis b = pod_fit(s, 5);
  const Placement p{{1, 7, 12, 20, 33, 41, 49}};
  const Vector u = s.data.col(3);
  Vector meas(p.k());
  for (Index r = 0; r < p.k(); ++r) meas(r) = u(p.indices[r]);
  const Vector rec = gappy_pod_reconstruct(b, p, meas);
  CHECK((rec - u).cwiseAbs().maxCoeff() < 1e-8 * u.cwiseAbs().maxCoeff());
  CHECK(gappy_pod_reconstruct(b, p, Vector::Zero(p.k())).isZero(0.0));
}

TEST_CASE("gappy reconstruction is linear") {
  const SnapshotMatrix s = subspace_snapshots(30, 3, 10, 5);
  const GappyPod g(pod_fit(s, 3), Placement{{0, 5, 9, 22}});
  const Vector a = Vector::Random(4), c = Vector::Random(4);
  const Vector lhs = g.reconstruct(a + c);
  CHECK((lhs - g.reconstruct(a) - g.reconstruct(c)).norm() <= 1e-10 * lhs.norm());
  Matrix both(4, 2);
  both << a, c;
  CHECK((g.reconstruct_many(both).col(1) - g.reconstruct(c)).norm() < 1e-12);
}

TEST_CASE("gappy with too few informative sensors") {
  Matrix data = Matrix::Zero(6, 4);
  data.block(0, 0, 3, 4) = Matrix::Random(3, 4);
  const PODBasis b = pod_fit({data, "top"}, 3);
  // the bottom rows carry no information about any mode
  CHECK_THROWS_AS(GappyPod(b, Placement{{3, 4, 5}}), Error);
  CHECK_NOTHROW(GappyPod(b, Placement{{0, 1}}));
}
