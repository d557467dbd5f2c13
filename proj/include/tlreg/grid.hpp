#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace tlreg {

using Index = Eigen::Index;
using Point = std::array<double, 2>;

/// Uniform grid of interior nodes on the unit cube (0,1)^d, d in {1, 2}.
///
/// Boundary nodes are eliminated (homogeneous Dirichlet), so node i along an
/// axis sits at (i + 1) h with h = 1 / (n + 1). In 2D the flat index is
/// ix + n * iy. Every node carries the same quadrature weight h^d.
class DomainGrid {
 public:
  DomainGrid(int dimension, int nodes_per_axis);

  int dimension() const { return dimension_; }
  int nodes_per_axis() const { return nodes_per_axis_; }
  double spacing() const { return 1.0 / (nodes_per_axis_ + 1); }
  Index size() const;

  double weight(Index) const { return node_weight_; }
  Eigen::VectorXd weights() const;
  double total_weight() const { return node_weight_ * static_cast<double>(size()); }

  /// Per-axis integer position of a flat index.
  std::array<int, 2> axis_indices(Index i) const;
  Point coordinate(Index i) const;

  /// True if the node touches the eliminated boundary layer.
  bool is_boundary_adjacent(Index i) const;

  bool operator==(const DomainGrid& other) const {
    return dimension_ == other.dimension_ && nodes_per_axis_ == other.nodes_per_axis_;
  }

 private:
  int dimension_;
  int nodes_per_axis_;
  double node_weight_;
};

/// Discrete element of L2(D): one value per interior node. The inner product is
/// the weighted sum <u, v> = sum_i w_i u_i v_i.
class GridFunction {
 public:
  explicit GridFunction(const DomainGrid& grid);
  GridFunction(const DomainGrid& grid, Eigen::VectorXd values);

  static GridFunction constant(const DomainGrid& grid, double value);
  static GridFunction sample(const DomainGrid& grid, const std::function<double(const Point&)>& f);

  const DomainGrid& grid() const { return grid_; }
  Index size() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](Index i) const { return values_[i]; }
  double& operator[](Index i) { return values_[i]; }

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double scale);

 private:
  DomainGrid grid_;
  Eigen::VectorXd values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double scale, GridFunction a);

double inner(const GridFunction& a, const GridFunction& b);
double norm(const GridFunction& a);
double max_abs(const GridFunction& a);

/// Throws DimensionMismatch unless both functions live on the same grid.
void require_same_grid(const DomainGrid& a, const DomainGrid& b, const char* what);

/// Subset of nodes representing the observation region D'.
class ObservationRegion {
 public:
  /// The whole domain.
  static ObservationRegion all(const DomainGrid& grid);
  /// Nodes whose coordinates lie in the closed box [lower, upper] per axis.
  /// With `inner_subdomain`, nodes adjacent to the boundary are rejected.
  static ObservationRegion box(const DomainGrid& grid, const Point& lower, const Point& upper,
                               bool inner_subdomain);
  static ObservationRegion nodes(const DomainGrid& grid, std::vector<Index> indices,
                                 bool inner_subdomain = false);

  const std::vector<Index>& indices() const { return indices_; }
  Index size() const { return static_cast<Index>(indices_.size()); }
  bool inner_subdomain() const { return inner_subdomain_; }
  const DomainGrid& grid() const { return grid_; }

  /// Weights of the region nodes, in region order.
  Eigen::VectorXd weights() const;

 private:
  ObservationRegion(const DomainGrid& grid, std::vector<Index> indices, bool inner);

  DomainGrid grid_;
  std::vector<Index> indices_;
  bool inner_subdomain_;
};

/// Values of y on the region nodes only.
Eigen::VectorXd restrict(const GridFunction& y, const ObservationRegion& region);
/// Zero extension of region values back to the full grid.
GridFunction extend(const Eigen::VectorXd& values, const ObservationRegion& region);

}  // namespace tlreg
