#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bregmm/simulator.hpp"
#include "bregmm/solver.hpp"

namespace bregmm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoiseSpec {
  std::uint64_t seed = 1;
  // b_m = background_fraction * mean(H xbar) unless an absolute level is set.
  double background_fraction = 0.05;
  double background_absolute = 0.0;  // <= 0 means "use the fraction"
};

struct SolverSpec {
  std::string majorant = "maj6";  // maj1|maj4|maj5|maj6|maj8 (or "mlem")
  double mu = -1.0;
  double tau = -1.0;
  double m_r = 0.0;
  double epsilon0 = -1.0;
  int max_iters = 1000;
  double step_tol = 1e-8;
  double wall_budget_s = 0.0;
};

struct BenchmarkSpec {
  std::vector<std::string> majorants;  // >= 2 entries
  double rel_dist_tol = 1e-3;          // limit-point proximity threshold
  int limit_factor = 10;               // x_inf from limit_factor * max_iters extra work
};

struct CheckSpec {
  int samples = 2000;
  std::uint64_t seed = 7;
};

struct RunConfig {
  PhantomSpec phantom;
  ScanGeometry geometry;
  NoiseSpec noise;
  RegularizerParams reg;
  SolverSpec solver;
  BenchmarkSpec benchmark;
  CheckSpec check;
};

// Structured-text (JSON) config; unknown keys anywhere are errors, every
// message names the offending dotted path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
RunConfig default_config();

struct SimulationArtifacts {
  ImageGrid phantom;               // ground truth with support mask
  std::vector<std::uint8_t> fov_mask;  // reconstruction mask
  Projector projector;
  Eigen::VectorXd noiseless;       // H xbar
  Eigen::VectorXd y;
  Eigen::VectorXd b;
};

SimulationArtifacts simulate(const RunConfig& config);

struct MetricsRecord {
  std::string majorant;
  int iterations = 0;
  double final_objective = 0.0;
  double final_step_norm = 0.0;
  double final_residual_w = 0.0;
  double nrmse = 0.0;              // ||xhat - xbar|| / ||xbar|| over the mask
  double wall_time_s = 0.0;
  std::int64_t fwd_calls = 0;
  std::int64_t adj_calls = 0;
  std::string stop_reason;
};

// CLI entry points; return the process exit code (0 ok, 4 check failures).
int cmd_simulate(const RunConfig& config, const std::string& out_dir);
int cmd_reconstruct(const RunConfig& config, const std::string& out_dir,
                    const std::string& majorant_override);
int cmd_benchmark(const RunConfig& config, const std::string& out_dir);
int cmd_check(const RunConfig& config, const std::string& out_dir);

}  // namespace bregmm
