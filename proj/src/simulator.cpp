#include "bregmm/simulator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bregmm/rng.hpp"

namespace bregmm {

ImageGrid phantom_generate(const PhantomSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || !(spec.pixel_size > 0.0)) {
    throw std::invalid_argument("phantom_generate: invalid grid dimensions");
  }
  if (!(spec.background_activity >= 0.0) || !std::isfinite(spec.background_activity)) {
    throw std::invalid_argument("phantom_generate: background activity must be >= 0");
  }
  for (const auto& e : spec.ellipses) {
    if (!(e.rx > 0.0) || !(e.ry > 0.0) || !(e.activity >= 0.0) ||
        !std::isfinite(e.activity)) {
      throw std::invalid_argument("phantom_generate: invalid ellipse");
    }
  }

  ImageGrid grid;
  grid.width = spec.width;
  grid.height = spec.height;
  grid.pixel_size = spec.pixel_size;
  grid.values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.width) * spec.height,
                                          spec.background_activity);
  grid.mask.assign(static_cast<std::size_t>(spec.width) * spec.height,
                   spec.background_activity > 0.0 ? 1 : 0);

  const double pi = std::acos(-1.0);
  for (const auto& e : spec.ellipses) {
    const double th = e.angle_deg * pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    for (int iy = 0; iy < spec.height; ++iy) {
      const double py = grid.center_y(iy);
      for (int ix = 0; ix < spec.width; ++ix) {
        const double px = grid.center_x(ix);
        const double dx = px - e.cx, dy = py - e.cy;
        const double xr = (c * dx + s * dy) / e.rx;
        const double yr = (-s * dx + c * dy) / e.ry;
        if (xr * xr + yr * yr <= 1.0) {
          const int p = iy * spec.width + ix;
          grid.values[p] = e.activity;  // later ellipses overwrite
          grid.mask[static_cast<std::size_t>(p)] = 1;
        }
      }
    }
  }
  validate(grid);
  return grid;
}

Projector build_projector(const ScanGeometry& geom, int width, int height,
                          double pixel_size) {
  if (geom.n_angles <= 0 || geom.n_bins <= 0 || !(geom.bin_width > 0.0)) {
    throw std::invalid_argument("build_projector: degenerate geometry");
  }
  if (width <= 0 || height <= 0 || !(pixel_size > 0.0)) {
    throw std::invalid_argument("build_projector: invalid image dimensions");
  }

  ImageGrid ref;  // coordinate helper only
  ref.width = width;
  ref.height = height;
  ref.pixel_size = pixel_size;

  const double pi = std::acos(-1.0);
  const double bin_len = geom.bin_width * pixel_size;
  const int provisional_rows = geom.n_angles * geom.n_bins;

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(geom.n_angles) * width * height);
  for (int k = 0; k < geom.n_angles; ++k) {
    const double theta = k * pi / geom.n_angles;
    const double c = std::cos(theta), s = std::sin(theta);
    for (int iy = 0; iy < height; ++iy) {
      const double py = ref.center_y(iy);
      for (int ix = 0; ix < width; ++ix) {
        // pixel-center membership, unit strip weight
        const double t = c * ref.center_x(ix) + s * py;
        const int bin = static_cast<int>(std::floor(t / bin_len + 0.5 * geom.n_bins));
        if (bin >= 0 && bin < geom.n_bins) {
          triplets.push_back({k * geom.n_bins + bin, iy * width + ix, 1.0});
        }
      }
    }
  }

  // Renumber rows so empty (angle, bin) strips vanish from the operator.
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(provisional_rows), 0);
  for (const auto& t : triplets) occupied[static_cast<std::size_t>(t.row)] = 1;
  std::vector<int> new_row(static_cast<std::size_t>(provisional_rows), -1);
  std::vector<int> row_angle, row_bin;
  int rows = 0;
  for (int m = 0; m < provisional_rows; ++m) {
    if (occupied[static_cast<std::size_t>(m)]) {
      new_row[static_cast<std::size_t>(m)] = rows++;
      row_angle.push_back(m / geom.n_bins);
      row_bin.push_back(m % geom.n_bins);
    }
  }
  if (rows == 0) {
    throw std::invalid_argument("build_projector: no strip covers any pixel");
  }
  for (auto& t : triplets) t.row = new_row[static_cast<std::size_t>(t.row)];
  return Projector{SparseNonnegOperator(rows, width * height, triplets),
                   std::move(row_angle), std::move(row_bin)};
}

std::int64_t poisson_draw(std::mt19937_64& g, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("poisson_draw: rate must be finite and >= 0");
  }
  if (rate < 30.0) {
    // Inversion by sequential search.
    const double u = rng::uniform01(g);
    double p = std::exp(-rate);
    double cum = p;
    std::int64_t k = 0;
    while (u > cum && k < 4096) {
      ++k;
      p *= rate / static_cast<double>(k);
      cum += p;
    }
    return k;
  }
  // Hormann's PTRS transformed rejection.
  const double b = 0.931 + 2.53 * std::sqrt(rate);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_rate = std::log(rate);
  for (;;) {
    const double u = rng::uniform01(g) - 0.5;
    const double v = rng::uniform01(g);
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_rate - rate - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(kf);
    }
  }
}

Eigen::VectorXd poisson_sample(const Eigen::VectorXd& rates, std::uint64_t seed) {
  Eigen::VectorXd counts(rates.size());
  for (Eigen::Index m = 0; m < rates.size(); ++m) {
    auto g = rng::stream(seed, static_cast<std::uint64_t>(m));
    counts[m] = static_cast<double>(poisson_draw(g, rates[m]));
  }
  return counts;
}

std::vector<std::uint8_t> dilate_mask(const std::vector<std::uint8_t>& mask, int width,
                                      int height, int r) {
  if (static_cast<int>(mask.size()) != width * height) {
    throw std::invalid_argument("dilate_mask: mask size mismatch");
  }
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int iy = 0; iy < height; ++iy) {
    for (int ix = 0; ix < width; ++ix) {
      bool hit = false;
      for (int dy = -r; dy <= r && !hit; ++dy) {
        const int qy = iy + dy;
        if (qy < 0 || qy >= height) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int qx = ix + dx;
          if (qx < 0 || qx >= width) continue;
          if (mask[static_cast<std::size_t>(qy * width + qx)] != 0) {
            hit = true;
            break;
          }
        }
      }
      out[static_cast<std::size_t>(iy * width + ix)] = hit ? 1 : 0;
    }
  }
  return out;
}

std::vector<std::uint8_t> coverage_mask(const SparseNonnegOperator& op, int n_pixels) {
  if (op.cols() != n_pixels) {
    throw std::invalid_argument("coverage_mask: pixel count mismatch");
  }
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(n_pixels), 0);
  for (int m = 0; m < op.rows(); ++m) {
    for (const auto& e : op.row(m)) covered[static_cast<std::size_t>(e.col)] = 1;
  }
  return covered;
}

}  // namespace bregmm
