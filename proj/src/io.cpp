#include "bregmm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bregmm {

std::string format_g17(double v) {
  // to_chars is printf %.17g in the C locale: '.' separator regardless of
  // environment, and 17 significant digits round-trip any double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  if (res.ec != std::errc()) throw std::runtime_error("format_g17: conversion failed");
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_pgm16(const std::string& path, const ImageGrid& grid) {
  validate(grid);
  const double vmax = grid.values.size() > 0 ? grid.values.maxCoeff() : 0.0;
  std::string body = "P5\n" + std::to_string(grid.width) + " " +
                     std::to_string(grid.height) + "\n65535\n";
  body.reserve(body.size() + static_cast<std::size_t>(grid.size()) * 2);
  for (int p = 0; p < grid.size(); ++p) {
    const double scaled = vmax > 0.0 ? grid.values[p] / vmax * 65535.0 : 0.0;
    const auto pix = static_cast<std::uint16_t>(std::llround(scaled));
    body.push_back(static_cast<char>(pix >> 8));
    body.push_back(static_cast<char>(pix & 0xFF));
  }
  write_text_file(path, body);

  std::string meta = "width " + std::to_string(grid.width) + "\n" +
                     "height " + std::to_string(grid.height) + "\n" +
                     "pixel_size " + format_g17(grid.pixel_size) + "\n" +
                     "scale_max " + format_g17(vmax) + "\n" + "mask\n";
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      meta.push_back(grid.inside_mask(iy * grid.width + ix) ? '1' : '0');
    }
    meta.push_back('\n');
  }
  write_text_file(path + ".meta", meta);
}

ImageGrid read_pgm16(const std::string& path) {
  const std::string raw = read_text_file(path);
  std::istringstream header(raw);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  header >> magic >> width >> height >> maxval;
  if (magic != "P5" || width <= 0 || height <= 0 || maxval != 65535) {
    throw std::runtime_error("read_pgm16: not a 16-bit P5 greymap: " + path);
  }
  // one whitespace byte separates the header from the raster
  const auto data_off = static_cast<std::size_t>(header.tellg()) + 1;
  const std::size_t need = static_cast<std::size_t>(width) * height * 2;
  if (raw.size() < data_off + need) {
    throw std::runtime_error("read_pgm16: truncated raster: " + path);
  }

  const std::string meta = read_text_file(path + ".meta");
  std::istringstream ms(meta);
  std::string key;
  double pixel_size = 1.0, scale_max = 0.0;
  int mw = 0, mh = 0;
  ImageGrid grid;
  while (ms >> key) {
    if (key == "width") ms >> mw;
    else if (key == "height") ms >> mh;
    else if (key == "pixel_size") ms >> pixel_size;
    else if (key == "scale_max") ms >> scale_max;
    else if (key == "mask") break;
    else throw std::runtime_error("read_pgm16: unknown meta key '" + key + "'");
  }
  if (mw != width || mh != height) {
    throw std::runtime_error("read_pgm16: meta/raster dimension mismatch: " + path);
  }
  grid.width = width;
  grid.height = height;
  grid.pixel_size = pixel_size;
  grid.mask.assign(static_cast<std::size_t>(width) * height, 0);
  std::string row;
  for (int iy = 0; iy < height; ++iy) {
    if (!(ms >> row) || static_cast<int>(row.size()) != width) {
      throw std::runtime_error("read_pgm16: bad mask row in meta: " + path);
    }
    for (int ix = 0; ix < width; ++ix) {
      grid.mask[static_cast<std::size_t>(iy * width + ix)] = row[static_cast<std::size_t>(ix)] == '1' ? 1 : 0;
    }
  }

  grid.values.resize(static_cast<Eigen::Index>(width) * height);
  for (int p = 0; p < width * height; ++p) {
    const auto hi = static_cast<unsigned char>(raw[data_off + 2 * static_cast<std::size_t>(p)]);
    const auto lo = static_cast<unsigned char>(raw[data_off + 2 * static_cast<std::size_t>(p) + 1]);
    const int pix = hi * 256 + lo;
    grid.values[p] = scale_max > 0.0 ? pix / 65535.0 * scale_max : 0.0;
    if (!grid.inside_mask(p)) grid.values[p] = 0.0;
  }
  validate(grid);
  return grid;
}

void write_trace_csv(const std::string& path, const IterateHistory& history,
                     const std::vector<double>& nrmse) {
  if (!nrmse.empty() && nrmse.size() != history.rows.size()) {
    throw std::invalid_argument("write_trace_csv: nrmse length mismatch");
  }
  std::string out =
      "iter,wall_time_s,objective_F,step_norm,residual_w,suff_decrease_slack,"
      "nrmse,fwd_calls,adj_calls\n";
  for (std::size_t k = 0; k < history.rows.size(); ++k) {
    const IterateRecord& r = history.rows[k];
    const double e = nrmse.empty() ? std::numeric_limits<double>::quiet_NaN() : nrmse[k];
    out += std::to_string(r.iter) + "," + format_g17(r.wall_time_s) + "," +
           format_g17(r.objective) + "," + format_g17(r.step_norm) + "," +
           format_g17(r.residual_w) + "," + format_g17(r.suff_decrease_slack) + "," +
           format_g17(e) + "," + std::to_string(r.fwd_calls) + "," +
           std::to_string(r.adj_calls) + "\n";
  }
  write_text_file(path, out);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  const std::string raw = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  for (const char ch : raw) {
    if (ch == '\n') {
      row.push_back(cell);
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else if (ch == ',') {
      row.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  if (!cell.empty() || !row.empty()) {
    row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bregmm
