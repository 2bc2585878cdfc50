#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace bregmm {

// Pixel raster with an optional reconstruction field-of-view mask.
// Pixels are stored row-major, n = iy*width + ix. Centers sit on a grid
// symmetric about the image center, in physical units of pixel_size.
struct ImageGrid {
  int width = 0;
  int height = 0;
  double pixel_size = 1.0;
  Eigen::VectorXd values;          // length width*height, >= 0 on the mask, 0 outside
  std::vector<std::uint8_t> mask;  // 1 inside the field of view; empty = all inside

  int size() const { return width * height; }
  bool inside_mask(int n) const {
    return mask.empty() || mask[static_cast<std::size_t>(n)] != 0;
  }
  double center_x(int ix) const { return (ix + 0.5 - 0.5 * width) * pixel_size; }
  double center_y(int iy) const { return (iy + 0.5 - 0.5 * height) * pixel_size; }
};

// Throws std::invalid_argument on dimension/length mismatches, negative
// values on the mask, or nonzero values outside it.
void validate(const ImageGrid& grid);

}  // namespace bregmm
