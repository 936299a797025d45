#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace scenefuse {

/// Feature rows with category labels 0..class_count-1.
struct LabeledDataset {
  Eigen::MatrixXd features;  // one sample per row
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Eigen::Index dim() const noexcept { return features.cols(); }

  /// Throws Error when rows/labels disagree, a label is out of range or a
  /// feature is non-finite.
  void validate() const;

  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
};

}  // namespace scenefuse
