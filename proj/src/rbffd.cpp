#include "pspo/rbffd.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "pspo/error.hpp"

namespace pspo {

namespace {

using Exponents = std::array<int, 2>;

std::vector<Exponents> monomials(int dim, int degree) {
  std::vector<Exponents> out;
  for (int total = 0; total <= degree; ++total) {
    if (dim == 1) {
      out.push_back({total, 0});
    } else {
      for (int a = total; a >= 0; --a) out.push_back({a, total - a});
    }
  }
  return out;
}

double eval_monomial(const Exponents& e, const Coord& z) {
  return std::pow(z.x(), e[0]) * std::pow(z.y(), e[1]);
}

}  // namespace

Index RbfConfig::monomial_count(int dim) const {
  return static_cast<Index>(monomials(dim, poly_degree).size());
}

void RbfConfig::validate() const {
  require(phs_exponent >= 3 && phs_exponent % 2 == 1,
          "polyharmonic exponent must be odd and >= 3");
  require(poly_degree >= 1, "polynomial degree must be >= 1");
}

Vector local_weights(const PointCloud& cloud, std::span<const Index> stencil,
                     Index center, OperatorKind kind, const RbfConfig& cfg,
                     const Coord& normal) {
  cfg.validate();
  const Index m = static_cast<Index>(stencil.size());
  const auto self = std::find(stencil.begin(), stencil.end(), center);
  require(self != stencil.end(), "stencil must contain its center point");
  const Index self_pos = self - stencil.begin();

  if (kind == OperatorKind::kIdentity) {
    Vector w = Vector::Zero(m);
    w(self_pos) = 1.0;
    return w;
  }

  const int dim = cloud.dim;
  const auto basis = monomials(dim, cfg.poly_degree);
  const Index q = static_cast<Index>(basis.size());
  if (m < q) {
    fail(ErrorCode::kDegenerateStencil,
         "stencil of size " + std::to_string(m) + " at point " +
             std::to_string(center) + " is smaller than the " +
             std::to_string(q) + " augmenting monomials",
         center);
  }

  // Shift to the center and scale to unit radius before building the
  // saddle system; the weights are rescaled on the way out.
  const Coord xc = cloud.points[center];
  std::vector<Coord> z(static_cast<std::size_t>(m));
  double radius = 0.0;
  for (Index j = 0; j < m; ++j) {
    z[j] = cloud.points[stencil[j]] - xc;
    radius = std::max(radius, z[j].norm());
  }
  if (radius == 0.0) {
    fail(ErrorCode::kDegenerateStencil,
         "stencil at point " + std::to_string(center) + " has zero extent",
         center);
  }
  for (auto& zj : z) zj /= radius;

  const int p = cfg.phs_exponent;
  Matrix saddle = Matrix::Zero(m + q, m + q);
  Vector rhs = Vector::Zero(m + q);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const double v = std::pow((z[i] - z[j]).norm(), p);
      saddle(i, j) = v;
      saddle(j, i) = v;
    }
    for (Index c = 0; c < q; ++c) {
      const double v = eval_monomial(basis[c], z[i]);
      saddle(i, m + c) = v;
      saddle(m + c, i) = v;
    }
    const double r = z[i].norm();
    if (kind == OperatorKind::kLaplacian) {
      rhs(i) = p * (p + dim - 2) * std::pow(r, p - 2);
    } else {
      rhs(i) = -p * std::pow(r, p - 2) * z[i].dot(normal);
    }
  }
  for (Index c = 0; c < q; ++c) {
    const Exponents& e = basis[c];
    if (kind == OperatorKind::kLaplacian) {
      if ((e[0] == 2 && e[1] == 0) || (e[0] == 0 && e[1] == 2)) rhs(m + c) = 2.0;
    } else {
      if (e[0] == 1 && e[1] == 0) rhs(m + c) = normal.x();
      if (e[0] == 0 && e[1] == 1) rhs(m + c) = normal.y();
    }
  }

  Eigen::FullPivLU<Matrix> lu(saddle);
  if (!lu.isInvertible()) {
    fail(ErrorCode::kDegenerateStencil,
         "singular local saddle system at point " + std::to_string(center),
         center);
  }
  Vector sol = lu.solve(rhs);
  if (!sol.allFinite()) {
    fail(ErrorCode::kDegenerateStencil,
         "non-finite weights at point " + std::to_string(center), center);
  }
  const double scale =
      kind == OperatorKind::kLaplacian ? radius * radius : radius;
  return sol.head(m) / scale;
}

Vector DiscreteOperator::rhs(const Vector& lambda) const {
  require(lambda.size() == l(), "parameter vector length must equal l");
  return source_basis * lambda + f_fixed + g;
}

DiscreteOperator assemble(const PointCloud& cloud, const StencilSet& stencils,
                          const RbfConfig& cfg, const Physics& physics) {
  const Index n = cloud.size();
  require(stencils.size() == n, "stencil set does not match the cloud");
  require(physics.conductivity > 0.0, "conductivity must be positive");
  const Index l = static_cast<Index>(physics.modes.size());

  DiscreteOperator op;
  op.g = Vector::Zero(n);
  op.f_fixed = Vector::Zero(n);
  op.source_basis = Matrix::Zero(n, l);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n * stencils.stencil_size()));
  for (Index i = 0; i < n; ++i) {
    const Coord& x = cloud.points[i];
    const auto stencil = stencils[i];
    switch (cloud.tags[i]) {
      case BoundaryTag::kInterior: {
        const Vector w = physics.conductivity *
                         local_weights(cloud, stencil, i,
                                       OperatorKind::kLaplacian, cfg);
        for (Index j = 0; j < w.size(); ++j) {
          triplets.emplace_back(i, stencil[j], w(j));
        }
        if (physics.fixed_source) op.f_fixed(i) = physics.fixed_source(x);
        for (Index c = 0; c < l; ++c) {
          if (physics.modes[c].interior) {
            op.source_basis(i, c) = physics.modes[c].interior(x);
          }
        }
        break;
      }
      case BoundaryTag::kDirichlet: {
        triplets.emplace_back(i, i, 1.0);
        if (physics.dirichlet_value) op.g(i) = physics.dirichlet_value(x);
        for (Index c = 0; c < l; ++c) {
          if (physics.modes[c].dirichlet) {
            op.source_basis(i, c) = physics.modes[c].dirichlet(x);
          }
        }
        break;
      }
      case BoundaryTag::kNeumann: {
        const Vector w =
            physics.conductivity *
            local_weights(cloud, stencil, i, OperatorKind::kNormalDerivative,
                          cfg, cloud.normals[i]);
        for (Index j = 0; j < w.size(); ++j) {
          triplets.emplace_back(i, stencil[j], w(j));
        }
        break;
      }
    }
  }
  op.W1.resize(n, n);
  op.W1.setFromTriplets(triplets.begin(), triplets.end());
  op.W1.makeCompressed();
  return op;
}

struct ForwardSolver::Impl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

ForwardSolver::ForwardSolver(const DiscreteOperator& op)
    : source_basis_(op.source_basis),
      fixed_rhs_(op.f_fixed + op.g),
      impl_(std::make_unique<Impl>()) {
  if (op.W1.rows() != op.W1.cols()) {
    fail(ErrorCode::kIllPosedModel, "forward solve needs a square W1");
  }
  Eigen::SparseMatrix<double> a = op.W1;
  a.makeCompressed();
  impl_->lu.compute(a);
  if (impl_->lu.info() != Eigen::Success) {
    fail(ErrorCode::kIllPosedModel,
         "W1 is singular: " + impl_->lu.lastErrorMessage());
  }
}

ForwardSolver::~ForwardSolver() = default;
ForwardSolver::ForwardSolver(ForwardSolver&&) noexcept = default;
ForwardSolver& ForwardSolver::operator=(ForwardSolver&&) noexcept = default;

Vector ForwardSolver::solve(const Vector& lambda) const {
  require(lambda.size() == source_basis_.cols(),
          "parameter vector length must equal l");
  Vector u = impl_->lu.solve(source_basis_ * lambda + fixed_rhs_);
  if (!u.allFinite()) {
    fail(ErrorCode::kIllPosedModel, "forward solve produced non-finite values");
  }
  return u;
}

Matrix ForwardSolver::solve_many(const Matrix& lambdas) const {
  require(lambdas.rows() == source_basis_.cols(),
          "parameter rows must equal l");
  Matrix rhs = source_basis_ * lambdas;
  rhs.colwise() += fixed_rhs_;
  Matrix u = impl_->lu.solve(rhs);
  if (!u.allFinite()) {
    fail(ErrorCode::kIllPosedModel, "forward solve produced non-finite values");
  }
  return u;
}

Vector forward_solve(const DiscreteOperator& op, const Vector& lambda) {
  return ForwardSolver(op).solve(lambda);
}

namespace {

void write_dense(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIo, "cannot open " + path);
  os.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

Matrix read_dense(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  const Index cols = rows.empty() ? 0 : static_cast<Index>(rows[0].size());
  Matrix m(static_cast<Index>(rows.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    if (static_cast<Index>(rows[i].size()) != cols) {
      fail(ErrorCode::kIo, "ragged rows in " + path);
    }
    for (Index j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

void export_operator(const DiscreteOperator& op, const std::string& prefix) {
  {
    const std::string path = prefix + "W1.csv";
    std::ofstream os(path);
    if (!os) fail(ErrorCode::kIo, "cannot open " + path);
    os.precision(17);
    os << "row,col,value\n";
    for (Index r = 0; r < op.W1.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(op.W1, r); it; ++it) {
        os << it.row() << ',' << it.col() << ',' << it.value() << '\n';
      }
    }
  }
  write_dense(prefix + "g.csv", op.g);
  write_dense(prefix + "source_basis.csv", op.source_basis);
  write_dense(prefix + "f_fixed.csv", op.f_fixed);
}

DiscreteOperator import_operator(const std::string& prefix) {
  DiscreteOperator op;
  op.g = read_dense(prefix + "g.csv");
  op.f_fixed = read_dense(prefix + "f_fixed.csv");
  op.source_basis = read_dense(prefix + "source_basis.csv");
  const Index n = op.g.size();
  if (op.source_basis.rows() == 0) op.source_basis.resize(n, 0);
  if (op.f_fixed.size() != n || op.source_basis.rows() != n) {
    fail(ErrorCode::kIo, "operator side files disagree on n");
  }

  const std::string path = prefix + "W1.csv";
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "row,col,value") fail(ErrorCode::kIo, "bad triplet header");
  std::vector<Eigen::Triplet<double>> triplets;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
        !std::getline(ss, c)) {
      fail(ErrorCode::kIo, "malformed triplet: " + line);
    }
    triplets.emplace_back(std::stoll(a), std::stoll(b), std::stod(c));
  }
  op.W1.resize(n, n);
  op.W1.setFromTriplets(triplets.begin(), triplets.end());
  op.W1.makeCompressed();
  return op;
}

}  // namespace pspo
