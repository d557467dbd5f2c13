#include "tlreg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tlreg/errors.hpp"

namespace tlreg {

DomainGrid::DomainGrid(int dimension, int nodes_per_axis)
    : dimension_(dimension), nodes_per_axis_(nodes_per_axis) {
  if (dimension != 1 && dimension != 2) {
    throw Error(ErrorKind::kInvalidArgument, "grid dimension must be 1 or 2");
  }
  if (nodes_per_axis < 3) {
    throw Error(ErrorKind::kInvalidArgument, "grid needs at least 3 nodes per axis");
  }
  node_weight_ = std::pow(spacing(), dimension_);
}

Index DomainGrid::size() const {
  Index count = 1;
  for (int k = 0; k < dimension_; ++k) count *= nodes_per_axis_;
  return count;
}

Eigen::VectorXd DomainGrid::weights() const {
  return Eigen::VectorXd::Constant(size(), node_weight_);
}

std::array<int, 2> DomainGrid::axis_indices(Index i) const {
  if (dimension_ == 1) return {static_cast<int>(i), 0};
  return {static_cast<int>(i % nodes_per_axis_), static_cast<int>(i / nodes_per_axis_)};
}

Point DomainGrid::coordinate(Index i) const {
  const auto idx = axis_indices(i);
  const double h = spacing();
  if (dimension_ == 1) return {(idx[0] + 1) * h, 0.0};
  return {(idx[0] + 1) * h, (idx[1] + 1) * h};
}

bool DomainGrid::is_boundary_adjacent(Index i) const {
  const auto idx = axis_indices(i);
  for (int k = 0; k < dimension_; ++k) {
    if (idx[k] == 0 || idx[k] == nodes_per_axis_ - 1) return true;
  }
  return false;
}

GridFunction::GridFunction(const DomainGrid& grid)
    : grid_(grid), values_(Eigen::VectorXd::Zero(grid.size())) {}

GridFunction::GridFunction(const DomainGrid& grid, Eigen::VectorXd values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "grid function has " + std::to_string(values_.size()) + " values, grid has " +
                    std::to_string(grid_.size()) + " nodes");
  }
}

GridFunction GridFunction::constant(const DomainGrid& grid, double value) {
  return GridFunction(grid, Eigen::VectorXd::Constant(grid.size(), value));
}

GridFunction GridFunction::sample(const DomainGrid& grid,
                                  const std::function<double(const Point&)>& f) {
  Eigen::VectorXd values(grid.size());
  for (Index i = 0; i < grid.size(); ++i) values[i] = f(grid.coordinate(i));
  return GridFunction(grid, std::move(values));
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require_same_grid(grid_, other.grid_, "operator+");
  values_ += other.values_;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require_same_grid(grid_, other.grid_, "operator-");
  values_ -= other.values_;
  return *this;
}

GridFunction& GridFunction::operator*=(double scale) {
  values_ *= scale;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double scale, GridFunction a) { return a *= scale; }

double inner(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  return a.grid().weight(0) * a.values().dot(b.values());
}

double norm(const GridFunction& a) { return std::sqrt(std::max(0.0, inner(a, a))); }

double max_abs(const GridFunction& a) {
  return a.size() == 0 ? 0.0 : a.values().cwiseAbs().maxCoeff();
}

void require_same_grid(const DomainGrid& a, const DomainGrid& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(what) + ": grids differ (d=" + std::to_string(a.dimension()) +
                    ", n=" + std::to_string(a.nodes_per_axis()) + " vs d=" +
                    std::to_string(b.dimension()) + ", n=" + std::to_string(b.nodes_per_axis()) +
                    ")");
  }
}

ObservationRegion::ObservationRegion(const DomainGrid& grid, std::vector<Index> indices,
                                     bool inner)
    : grid_(grid), indices_(std::move(indices)), inner_subdomain_(inner) {
  if (indices_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "observation region is empty");
  }
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  for (Index i : indices_) {
    if (i < 0 || i >= grid_.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "observation region index " + std::to_string(i) + " out of range");
    }
    if (inner_subdomain_ && grid_.is_boundary_adjacent(i)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "inner observation region touches the boundary at node " + std::to_string(i));
    }
  }
}

ObservationRegion ObservationRegion::all(const DomainGrid& grid) {
  std::vector<Index> indices(static_cast<size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) indices[static_cast<size_t>(i)] = i;
  return ObservationRegion(grid, std::move(indices), false);
}

ObservationRegion ObservationRegion::box(const DomainGrid& grid, const Point& lower,
                                         const Point& upper, bool inner_subdomain) {
  // Small slack so that bounds given as exact node coordinates include the node.
  const double slack = 1e-12;
  std::vector<Index> indices;
  for (Index i = 0; i < grid.size(); ++i) {
    const Point x = grid.coordinate(i);
    bool inside = true;
    for (int k = 0; k < grid.dimension(); ++k) {
      inside = inside && x[k] >= lower[k] - slack && x[k] <= upper[k] + slack;
    }
    if (inside) indices.push_back(i);
  }
  return ObservationRegion(grid, std::move(indices), inner_subdomain);
}

ObservationRegion ObservationRegion::nodes(const DomainGrid& grid, std::vector<Index> indices,
                                           bool inner_subdomain) {
  return ObservationRegion(grid, std::move(indices), inner_subdomain);
}

Eigen::VectorXd ObservationRegion::weights() const {
  Eigen::VectorXd w(size());
  for (Index j = 0; j < size(); ++j) w[j] = grid_.weight(indices_[static_cast<size_t>(j)]);
  return w;
}

Eigen::VectorXd restrict(const GridFunction& y, const ObservationRegion& region) {
  require_same_grid(y.grid(), region.grid(), "restrict");
  Eigen::VectorXd out(region.size());
  for (Index j = 0; j < region.size(); ++j) {
    out[j] = y[region.indices()[static_cast<size_t>(j)]];
  }
  return out;
}

GridFunction extend(const Eigen::VectorXd& values, const ObservationRegion& region) {
  if (values.size() != region.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "extend: value count differs from region size");
  }
  GridFunction out(region.grid());
  for (Index j = 0; j < region.size(); ++j) {
    out[region.indices()[static_cast<size_t>(j)]] = values[j];
  }
  return out;
}

}  // namespace tlreg
