#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pspo/types.hpp"

namespace pspo {

enum class BoundaryTag : std::uint8_t { kInterior, kDirichlet, kNeumann };

char tag_code(BoundaryTag tag);
BoundaryTag tag_from_code(char code);

/// Candidate nodes of the discretization. The same nodes form the universe
/// of admissible sensor locations.
struct PointCloud {
  int dim = 1;
  std::vector<Coord> points;
  std::vector<BoundaryTag> tags;
  /// Outward unit normal for Neumann nodes, zero elsewhere.
  std::vector<Coord> normals;
  /// Grid corners whose edge tags conflicted and were resolved to Dirichlet.
  std::vector<Index> resolved_corners;

  Index size() const { return static_cast<Index>(points.size()); }
  Index count(BoundaryTag tag) const;
  /// Throws kInvalidArgument when an invariant is broken.
  void validate() const;
};

/// Per-point neighbour lists of fixed length m, self first, distances
/// non-decreasing, ties broken by lower index.
class StencilSet {
 public:
  StencilSet() = default;
  StencilSet(Index n, Index m, std::vector<Index> flat);

  Index size() const { return n_; }
  Index stencil_size() const { return m_; }
  std::span<const Index> operator[](Index i) const {
    return {flat_.data() + i * m_, static_cast<std::size_t>(m_)};
  }

 private:
  Index n_ = 0;
  Index m_ = 0;
  std::vector<Index> flat_;
};

struct EdgeLayout {
  BoundaryTag bottom = BoundaryTag::kDirichlet;
  BoundaryTag right = BoundaryTag::kNeumann;
  BoundaryTag top = BoundaryTag::kNeumann;
  BoundaryTag left = BoundaryTag::kNeumann;
};

/// n equispaced nodes on [a, b]; both endpoints Dirichlet.
PointCloud generate_1d(double a, double b, Index n);

/// Endpoints plus n - 2 uniformly random interior nodes, sorted.
PointCloud generate_random_1d(double a, double b, Index n, std::uint64_t seed);

/// Tensor grid on [0, width] x [0, height], row-major with x fastest.
/// Corners touching a Dirichlet edge become Dirichlet; corners between two
/// Neumann edges get the normalized sum of both outward normals.
PointCloud generate_grid_2d(double width, double height, Index nx, Index ny,
                            const EdgeLayout& layout);

/// n uniformly random interior nodes in the rectangle (no boundary nodes).
PointCloud generate_random_2d(double width, double height, Index n,
                              std::uint64_t seed);

StencilSet knn_stencils(const PointCloud& cloud, Index m);

/// CSV with header `x[,y],tag[,nx,ny]`, tags encoded as I|D|N.
void write_cloud_csv(std::ostream& os, const PointCloud& cloud);
PointCloud read_cloud_csv(std::istream& is);

}  // namespace pspo
