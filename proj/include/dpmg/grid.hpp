#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dpmg/common.hpp"

namespace dpmg {

struct GridAxis {
  double min;
  double max;
  int steps;  // number of points, endpoints included
};

// Rectangular evaluation grid; points enumerated row-major with the last
// axis fastest.
class Grid {
 public:
  explicit Grid(std::vector<GridAxis> axes, std::size_t point_cap = 1000000)
      : axes_(std::move(axes)) {
    if (axes_.empty()) throw validation_error("Grid: no axes");
    total_points_ = 1;
    cell_volume_ = 1.0;
    for (const auto& a : axes_) {
      if (a.steps < 2) throw validation_error("Grid: each axis needs at least 2 steps");
      if (!(a.min < a.max)) throw validation_error("Grid: axis min must be below max");
      total_points_ *= static_cast<std::size_t>(a.steps);
      if (total_points_ > point_cap) {
        throw validation_error("Grid: total points exceed cap of " +
                               std::to_string(point_cap));
      }
      cell_volume_ *= (a.max - a.min) / static_cast<double>(a.steps - 1);
    }
  }

  static Grid from_data(const Eigen::MatrixXd& data, double pad_fraction = 0.25,
                        int steps_per_axis = 200) {
    std::vector<GridAxis> axes;
    axes.reserve(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double lo = data.col(j).minCoeff();
      const double hi = data.col(j).maxCoeff();
      const double pad = (hi - lo) * pad_fraction;
      axes.push_back({lo - pad, hi + pad, steps_per_axis});
    }
    return Grid(std::move(axes));
  }

  std::size_t dim() const { return axes_.size(); }
  std::size_t total_points() const { return total_points_; }
  double cell_volume() const { return cell_volume_; }
  const std::vector<GridAxis>& axes() const { return axes_; }

  double axis_value(std::size_t axis, int index) const {
    const GridAxis& a = axes_[axis];
    return a.min + (a.max - a.min) * static_cast<double>(index) /
                       static_cast<double>(a.steps - 1);
  }

  Eigen::VectorXd point(std::size_t flat) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim()));
    for (std::size_t k = dim(); k-- > 0;) {
      const auto steps = static_cast<std::size_t>(axes_[k].steps);
      x(static_cast<Eigen::Index>(k)) = axis_value(k, static_cast<int>(flat % steps));
      flat /= steps;
    }
    return x;
  }

  bool same_geometry(const Grid& other, double rel_tol = 1e-9) const {
    if (dim() != other.dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k) {
      const auto& a = axes_[k];
      const auto& b = other.axes_[k];
      if (a.steps != b.steps) return false;
      const double scale = std::max({std::abs(a.min), std::abs(a.max), std::abs(b.min),
                                     std::abs(b.max), 1e-300});
      if (std::abs(a.min - b.min) > rel_tol * scale) return false;
      if (std::abs(a.max - b.max) > rel_tol * scale) return false;
    }
    return true;
  }

 private:
  std::vector<GridAxis> axes_;
  std::size_t total_points_ = 0;
  double cell_volume_ = 0.0;
};

}  // namespace dpmg
