#include "spectrack/dataset.hpp"

#include "spectrack/error.hpp"

namespace spectrack {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(indices.size()), inputs.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (i >= size()) fail(ErrorKind::InvalidInput, "subset index out of range");
    out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
  }
  return out;
}

}  // namespace spectrack
