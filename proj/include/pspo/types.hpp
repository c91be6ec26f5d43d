#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace pspo {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using IndexVector = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

// Coordinates are stored as 2-vectors; 1D clouds keep y = 0.
using Coord = Eigen::Vector2d;

}  // namespace pspo
