#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gswe/tensor.hpp"

namespace gswe {

enum class Split { train, test };

/// An unordered multiset of d-dimensional points, stored as an M x d matrix
/// of row vectors, with an optional class label.
struct PointSet {
  Tensor points;  // {M, d}
  std::optional<int> label;
  std::optional<Split> split;

  PointSet() = default;
  explicit PointSet(Tensor pts, std::optional<int> lbl = std::nullopt)
      : points(std::move(pts)), label(lbl) {
    if (points.rank() != 2 || points.extent(0) == 0 || points.extent(1) == 0) {
      throw std::invalid_argument(
          "PointSet: expected a non-empty M x d matrix, got shape " +
          Tensor::shape_str(points.shape()));
    }
  }

  std::size_t size() const { return points.extent(0); }
  std::size_t dim() const { return points.extent(1); }
};

/// A labelled collection of point sets with a common ambient dimension.
struct SetDataset {
  std::vector<PointSet> sets;
  std::size_t d = 0;
  int n_classes = 0;

  void validate() const {
    if (sets.empty()) throw std::invalid_argument("SetDataset: no sets");
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (sets[i].dim() != d) {
        throw std::invalid_argument(
            "SetDataset: set " + std::to_string(i) + " has dimension " +
            std::to_string(sets[i].dim()) + ", expected " + std::to_string(d));
      }
      if (sets[i].label &&
          (*sets[i].label < 0 || *sets[i].label >= n_classes)) {
        throw std::invalid_argument("SetDataset: set " + std::to_string(i) +
                                    " has label " +
                                    std::to_string(*sets[i].label) +
                                    " outside [0, " +
                                    std::to_string(n_classes) + ")");
      }
    }
  }

  SetDataset subset(Split s) const {
    SetDataset out;
    out.d = d;
    out.n_classes = n_classes;
    for (const auto& ps : sets) {
      if (ps.split == s) out.sets.push_back(ps);
    }
    return out;
  }
};

}  // namespace gswe
