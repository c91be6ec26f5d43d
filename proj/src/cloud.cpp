#include "pspo/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "pspo/error.hpp"

namespace pspo {

char tag_code(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::kInterior:
      return 'I';
    case BoundaryTag::kDirichlet:
      return 'D';
    case BoundaryTag::kNeumann:
      return 'N';
  }
  return '?';
}

BoundaryTag tag_from_code(char code) {
  switch (code) {
    case 'I':
      return BoundaryTag::kInterior;
    case 'D':
      return BoundaryTag::kDirichlet;
    case 'N':
      return BoundaryTag::kNeumann;
    default:
      fail(ErrorCode::kInvalidArgument,
           std::string("unknown boundary tag '") + code + "'");
  }
}

Index PointCloud::count(BoundaryTag tag) const {
  return static_cast<Index>(std::count(tags.begin(), tags.end(), tag));
}

void PointCloud::validate() const {
  require(dim == 1 || dim == 2, "point cloud dimension must be 1 or 2");
  require(tags.size() == points.size() && normals.size() == points.size(),
          "point cloud arrays have inconsistent lengths");
  std::set<std::pair<double, double>> seen;
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(seen.emplace(points[i].x(), points[i].y()).second,
            "duplicate point at index " + std::to_string(i));
    if (tags[i] == BoundaryTag::kNeumann) {
      require(std::abs(normals[i].norm() - 1.0) < 1e-12,
              "Neumann normal is not unit length at index " +
                  std::to_string(i));
    }
  }
}

StencilSet::StencilSet(Index n, Index m, std::vector<Index> flat)
    : n_(n), m_(m), flat_(std::move(flat)) {
  require(static_cast<Index>(flat_.size()) == n * m,
          "stencil storage does not match n * m");
}

namespace {

PointCloud make_cloud(int dim, Index n) {
  PointCloud cloud;
  cloud.dim = dim;
  cloud.points.assign(static_cast<std::size_t>(n), Coord::Zero());
  cloud.tags.assign(static_cast<std::size_t>(n), BoundaryTag::kInterior);
  cloud.normals.assign(static_cast<std::size_t>(n), Coord::Zero());
  return cloud;
}

}  // namespace

PointCloud generate_1d(double a, double b, Index n) {
  require(n >= 3, "a 1D cloud needs at least 3 points");
  require(a < b, "interval must satisfy a < b");
  PointCloud cloud = make_cloud(1, n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (Index i = 0; i < n; ++i) {
    cloud.points[i].x() = (i == n - 1) ? b : a + h * static_cast<double>(i);
  }
  cloud.tags.front() = BoundaryTag::kDirichlet;
  cloud.tags.back() = BoundaryTag::kDirichlet;
  return cloud;
}

PointCloud generate_random_1d(double a, double b, Index n,
                              std::uint64_t seed) {
  require(n >= 3, "a 1D cloud needs at least 3 points");
  require(a < b, "interval must satisfy a < b");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(a, b);
  std::set<double> xs{a, b};
  while (static_cast<Index>(xs.size()) < n) xs.insert(unif(rng));
  PointCloud cloud = make_cloud(1, n);
  Index i = 0;
  for (double x : xs) cloud.points[i++].x() = x;
  cloud.tags.front() = BoundaryTag::kDirichlet;
  cloud.tags.back() = BoundaryTag::kDirichlet;
  return cloud;
}

PointCloud generate_grid_2d(double width, double height, Index nx, Index ny,
                            const EdgeLayout& layout) {
  require(nx >= 3 && ny >= 3, "grid needs at least 3 points per direction");
  require(width > 0.0 && height > 0.0, "grid extents must be positive");
  PointCloud cloud = make_cloud(2, nx * ny);
  const double hx = width / static_cast<double>(nx - 1);
  const double hy = height / static_cast<double>(ny - 1);

  struct Edge {
    BoundaryTag tag;
    Coord normal;
  };
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index p = j * nx + i;
      cloud.points[p] = {i == nx - 1 ? width : hx * static_cast<double>(i),
                         j == ny - 1 ? height : hy * static_cast<double>(j)};
      std::vector<Edge> edges;
      if (j == 0) edges.push_back({layout.bottom, {0.0, -1.0}});
      if (i == nx - 1) edges.push_back({layout.right, {1.0, 0.0}});
      if (j == ny - 1) edges.push_back({layout.top, {0.0, 1.0}});
      if (i == 0) edges.push_back({layout.left, {-1.0, 0.0}});
      if (edges.empty()) continue;

      const bool any_dirichlet =
          std::any_of(edges.begin(), edges.end(), [](const Edge& e) {
            return e.tag == BoundaryTag::kDirichlet;
          });
      const bool any_neumann =
          std::any_of(edges.begin(), edges.end(), [](const Edge& e) {
            return e.tag == BoundaryTag::kNeumann;
          });
      if (any_dirichlet) {
        cloud.tags[p] = BoundaryTag::kDirichlet;
        if (any_neumann) cloud.resolved_corners.push_back(p);
      } else if (any_neumann) {
        Coord n = Coord::Zero();
        for (const Edge& e : edges) {
          if (e.tag == BoundaryTag::kNeumann) n += e.normal;
        }
        cloud.tags[p] = BoundaryTag::kNeumann;
        cloud.normals[p] = n.normalized();
      }
    }
  }
  return cloud;
}

PointCloud generate_random_2d(double width, double height, Index n,
                              std::uint64_t seed) {
  require(n >= 3, "a 2D cloud needs at least 3 points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, width);
  std::uniform_real_distribution<double> uy(0.0, height);
  PointCloud cloud = make_cloud(2, n);
  std::set<std::pair<double, double>> seen;
  for (Index i = 0; i < n;) {
    const Coord c{ux(rng), uy(rng)};
    if (seen.emplace(c.x(), c.y()).second) cloud.points[i++] = c;
  }
  return cloud;
}

StencilSet knn_stencils(const PointCloud& cloud, Index m) {
  const Index n = cloud.size();
  if (m < 1 || m > n) {
    fail(ErrorCode::kInvalidArgument,
         "stencil size m=" + std::to_string(m) + " must lie in [1, " +
             std::to_string(n) + "]");
  }
  std::vector<Index> flat(static_cast<std::size_t>(n * m));
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      dist[j] = {(cloud.points[j] - cloud.points[i]).squaredNorm(), j};
    }
    // Pair ordering compares distance first, then index: the tie rule.
    std::partial_sort(dist.begin(), dist.begin() + m, dist.end());
    for (Index r = 0; r < m; ++r) flat[i * m + r] = dist[r].second;
  }
  return {n, m, std::move(flat)};
}

void write_cloud_csv(std::ostream& os, const PointCloud& cloud) {
  const bool with_normals = cloud.count(BoundaryTag::kNeumann) > 0 ||
                            cloud.dim == 2;
  os << (cloud.dim == 2 ? "x,y,tag" : "x,tag");
  if (with_normals) os << ",nx,ny";
  os << '\n';
  os.precision(17);
  for (Index i = 0; i < cloud.size(); ++i) {
    os << cloud.points[i].x();
    if (cloud.dim == 2) os << ',' << cloud.points[i].y();
    os << ',' << tag_code(cloud.tags[i]);
    if (with_normals) {
      os << ',' << cloud.normals[i].x() << ',' << cloud.normals[i].y();
    }
    os << '\n';
  }
}

PointCloud read_cloud_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::kIo, "empty cloud file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) header.push_back(col);
  }
  const bool two_d = header.size() >= 2 && header[1] == "y";
  const bool with_normals = !header.empty() && header.back() == "ny";
  const std::size_t expected = (two_d ? 3u : 2u) + (with_normals ? 2u : 0u);
  if (header.size() != expected || header[0] != "x") {
    fail(ErrorCode::kIo, "unrecognized cloud header: " + line);
  }

  PointCloud cloud;
  cloud.dim = two_d ? 2 : 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() != expected) {
      fail(ErrorCode::kIo, "malformed cloud row: " + line);
    }
    std::size_t col = 0;
    Coord p = Coord::Zero();
    p.x() = std::stod(cells[col++]);
    if (two_d) p.y() = std::stod(cells[col++]);
    const std::string& tag = cells[col++];
    if (tag.size() != 1) fail(ErrorCode::kIo, "malformed tag: " + tag);
    Coord n = Coord::Zero();
    if (with_normals) {
      n.x() = std::stod(cells[col++]);
      n.y() = std::stod(cells[col++]);
    }
    cloud.points.push_back(p);
    cloud.tags.push_back(tag_from_code(tag[0]));
    cloud.normals.push_back(n);
  }
  cloud.validate();
  return cloud;
}

}  // namespace pspo
