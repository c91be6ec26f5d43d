#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pspo/cloud.hpp"
#include "pspo/types.hpp"

namespace pspo {

/// Polyharmonic spline phi(r) = r^phs_exponent augmented with all monomials
/// of total degree <= poly_degree.
struct RbfConfig {
  int phs_exponent = 3;
  int poly_degree = 2;

  /// Number of augmenting monomials, C(poly_degree + dim, dim).
  Index monomial_count(int dim) const;
  void validate() const;
};

enum class OperatorKind { kLaplacian, kIdentity, kNormalDerivative };

/// Weights w with sum_j w_j u(x_stencil[j]) ~ (L u)(x_center). `normal` is
/// only read for kNormalDerivative.
Vector local_weights(const PointCloud& cloud, std::span<const Index> stencil,
                     Index center, OperatorKind kind, const RbfConfig& cfg,
                     const Coord& normal = Coord::Zero());

using ScalarField = std::function<double(const Coord&)>;

/// One separable source mode. `interior` is sampled on interior rows of the
/// right-hand side; `dirichlet` gives the coefficient this mode contributes
/// to Dirichlet data (for boundary values that depend on the unknown
/// parameters). Either may be empty, meaning zero.
struct SourceMode {
  std::string name;
  ScalarField interior;
  ScalarField dirichlet;
};

/// Steady conduction model `conductivity * Lap(u) = sum_j mode_j * lambda_j
/// + fixed_source` with Dirichlet data `dirichlet_value` and Neumann rows
/// `conductivity * du/dn = 0`.
struct Physics {
  double conductivity = 1.0;
  std::vector<SourceMode> modes;
  ScalarField fixed_source;
  ScalarField dirichlet_value;
};

/// Assembled physics block: W1 U1 = source_basis * lambda + f_fixed + g.
struct DiscreteOperator {
  SparseMatrix W1;
  Vector g;
  Matrix source_basis;
  Vector f_fixed;

  Index n() const { return W1.cols(); }
  Index rows() const { return W1.rows(); }
  Index l() const { return source_basis.cols(); }
  Vector rhs(const Vector& lambda) const;
};

DiscreteOperator assemble(const PointCloud& cloud, const StencilSet& stencils,
                          const RbfConfig& cfg, const Physics& physics);

/// Factorizes W1 once; reuse for many parameter vectors. Keeps its own copy
/// of the right-hand-side pieces.
class ForwardSolver {
 public:
  explicit ForwardSolver(const DiscreteOperator& op);
  ~ForwardSolver();
  ForwardSolver(ForwardSolver&&) noexcept;
  ForwardSolver& operator=(ForwardSolver&&) noexcept;

  Vector solve(const Vector& lambda) const;
  Matrix solve_many(const Matrix& lambdas) const;  // one parameter per column

 private:
  struct Impl;
  Matrix source_basis_;
  Vector fixed_rhs_;  // f_fixed + g
  std::unique_ptr<Impl> impl_;
};

Vector forward_solve(const DiscreteOperator& op, const Vector& lambda);

/// Writes `<prefix>W1.csv` (row,col,value triplets), `<prefix>g.csv`,
/// `<prefix>source_basis.csv` and `<prefix>f_fixed.csv`.
void export_operator(const DiscreteOperator& op, const std::string& prefix);
DiscreteOperator import_operator(const std::string& prefix);

}  // namespace pspo
