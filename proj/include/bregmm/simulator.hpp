#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "bregmm/grid.hpp"
#include "bregmm/sparse_op.hpp"

namespace bregmm {

struct EllipseSpec {
  double cx = 0.0;       // center, physical units
  double cy = 0.0;
  double rx = 1.0;       // semi-axes, physical units
  double ry = 1.0;
  double angle_deg = 0.0;
  double activity = 0.0;
};

struct PhantomSpec {
  int width = 0;
  int height = 0;
  double pixel_size = 1.0;
  double background_activity = 0.0;
  std::vector<EllipseSpec> ellipses;
};

// Rasterize by pixel-center membership; later ellipses overwrite earlier
// ones where they overlap. The mask marks pixels covered by any ellipse.
ImageGrid phantom_generate(const PhantomSpec& spec);

struct ScanGeometry {
  int n_angles = 0;
  int n_bins = 0;
  double bin_width = 1.0;  // in pixel-size units
};

struct Projector {
  SparseNonnegOperator op;
  // Row m of `op` corresponds to (angle index, bin index); rows whose strip
  // covers no pixel center are dropped entirely.
  std::vector<int> row_angle;
  std::vector<int> row_bin;
};

// Parallel-beam strip projector: angles theta_k = k pi / n_angles, a pixel
// belongs to the bin containing the projection of its center onto the
// detector axis (cos theta, sin theta), all weights 1.
Projector build_projector(const ScanGeometry& geom, int width, int height,
                          double pixel_size);

// One Poisson draw at `rate` >= 0: inversion by sequential search below
// rate 30, Hormann's PTRS transformed rejection above.
std::int64_t poisson_draw(std::mt19937_64& g, double rate);

// Independent per-bin draws; bin m uses stream(seed, m), so the result is
// invariant to evaluation order.
Eigen::VectorXd poisson_sample(const Eigen::VectorXd& rates, std::uint64_t seed);

// Binary dilation of `mask` by an r-pixel chebyshev ball.
std::vector<std::uint8_t> dilate_mask(const std::vector<std::uint8_t>& mask, int width,
                                      int height, int r);

// Pixels covered by at least one projector row, as a mask.
std::vector<std::uint8_t> coverage_mask(const SparseNonnegOperator& op, int n_pixels);

}  // namespace bregmm
