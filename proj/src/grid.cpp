#include "bregmm/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bregmm {

void validate(const ImageGrid& grid) {
  if (grid.width <= 0 || grid.height <= 0) {
    throw std::invalid_argument("ImageGrid: width and height must be positive");
  }
  if (!(grid.pixel_size > 0.0) || !std::isfinite(grid.pixel_size)) {
    throw std::invalid_argument("ImageGrid: pixel_size must be positive and finite");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(grid.width) * grid.height;
  if (grid.values.size() != n) {
    throw std::invalid_argument("ImageGrid: values has size " +
                                std::to_string(grid.values.size()) + ", expected " +
                                std::to_string(n));
  }
  if (!grid.mask.empty() && static_cast<Eigen::Index>(grid.mask.size()) != n) {
    throw std::invalid_argument("ImageGrid: mask size does not match the grid");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = grid.values[i];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ImageGrid: non-finite value at pixel " +
                                  std::to_string(i));
    }
    if (grid.inside_mask(i)) {
      if (v < 0.0) {
        throw std::invalid_argument("ImageGrid: negative value at in-mask pixel " +
                                    std::to_string(i));
      }
    } else if (v != 0.0) {
      throw std::invalid_argument("ImageGrid: nonzero value at out-of-mask pixel " +
                                  std::to_string(i));
    }
  }
}

}  // namespace bregmm
