#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bregmm/grid.hpp"
#include "bregmm/solver.hpp"

namespace bregmm {

// printf %.17g: round-trips doubles exactly, '.' decimal separator.
std::string format_g17(double v);

// 16-bit binary PGM (P5, maxval 65535, big-endian) scaled so the image max
// maps to 65535, plus a `<path>.meta` text sidecar carrying the grid shape,
// the exact scale factor, and the mask (one 0/1 row per line).
void write_pgm16(const std::string& path, const ImageGrid& grid);
ImageGrid read_pgm16(const std::string& path);

// Iterate trace as CSV with a fixed header:
//   iter,wall_time_s,objective_F,step_norm,residual_w,suff_decrease_slack,
//   nrmse,fwd_calls,adj_calls
// `nrmse` may be empty (written as nan) when no ground truth is attached.
void write_trace_csv(const std::string& path, const IterateHistory& history,
                     const std::vector<double>& nrmse);
std::vector<std::vector<std::string>> read_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bregmm
