#include "bregmm/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <string>

#include "json.hpp"

#include "bregmm/io.hpp"
#include "bregmm/rng.hpp"

namespace bregmm {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

// Object wrapper that remembers which keys were consumed; finish() turns any
// leftover into an error naming the dotted path, so typos cannot silently
// fall back to defaults.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_fail(path_, "expected an object");
  }

  void read_double(const std::string& key, double& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_number()) config_fail(path_ + "." + key, "expected a number");
    out = v->get<double>();
  }

  void read_int(const std::string& key, int& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) config_fail(path_ + "." + key, "expected an integer");
    out = v->get<int>();
  }

  void read_u64(const std::string& key, std::uint64_t& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<std::int64_t>() < 0 &&
                                    !v->is_number_unsigned())) {
      config_fail(path_ + "." + key, "expected a nonnegative integer");
    }
    out = v->get<std::uint64_t>();
  }

  void read_string(const std::string& key, std::string& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_string()) config_fail(path_ + "." + key, "expected a string");
    out = v->get<std::string>();
  }

  const json* take(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const std::string& path() const { return path_; }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (used_.find(it.key()) == used_.end()) {
        config_fail(path_ + "." + it.key(), "unknown key");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void parse_phantom(const json& j, const std::string& path, PhantomSpec& out) {
  Section s(j, path);
  s.read_int("width", out.width);
  s.read_int("height", out.height);
  s.read_double("pixel_size", out.pixel_size);
  s.read_double("background_activity", out.background_activity);
  if (const json* arr = s.take("ellipses")) {
    if (!arr->is_array()) config_fail(path + ".ellipses", "expected an array");
    out.ellipses.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string epath = path + ".ellipses[" + std::to_string(i) + "]";
      Section e((*arr)[i], epath);
      EllipseSpec el;
      e.read_double("cx", el.cx);
      e.read_double("cy", el.cy);
      e.read_double("rx", el.rx);
      e.read_double("ry", el.ry);
      e.read_double("angle_deg", el.angle_deg);
      e.read_double("activity", el.activity);
      e.finish();
      out.ellipses.push_back(el);
    }
  }
  s.finish();
}

void parse_geometry(const json& j, const std::string& path, ScanGeometry& out) {
  Section s(j, path);
  s.read_int("n_angles", out.n_angles);
  s.read_int("n_bins", out.n_bins);
  s.read_double("bin_width", out.bin_width);
  s.finish();
}

void parse_noise(const json& j, const std::string& path, NoiseSpec& out) {
  Section s(j, path);
  s.read_u64("seed", out.seed);
  s.read_double("background_fraction", out.background_fraction);
  s.read_double("background_absolute", out.background_absolute);
  s.finish();
}

void parse_reg(const json& j, const std::string& path, RegularizerParams& out) {
  Section s(j, path);
  s.read_double("lambda", out.lambda);
  s.read_double("delta", out.delta);
  s.read_double("epsilon", out.epsilon);
  s.finish();
}

void parse_solver(const json& j, const std::string& path, SolverSpec& out) {
  Section s(j, path);
  s.read_string("majorant", out.majorant);
  s.read_double("mu", out.mu);
  s.read_double("tau", out.tau);
  s.read_double("m_r", out.m_r);
  s.read_double("epsilon0", out.epsilon0);
  s.read_int("max_iters", out.max_iters);
  s.read_double("step_tol", out.step_tol);
  s.read_double("wall_budget_s", out.wall_budget_s);
  s.finish();
}

void parse_benchmark(const json& j, const std::string& path, BenchmarkSpec& out) {
  Section s(j, path);
  if (const json* arr = s.take("majorants")) {
    if (!arr->is_array()) config_fail(path + ".majorants", "expected an array");
    out.majorants.clear();
    for (const auto& v : *arr) {
      if (!v.is_string()) config_fail(path + ".majorants", "expected strings");
      out.majorants.push_back(v.get<std::string>());
    }
  }
  s.read_double("rel_dist_tol", out.rel_dist_tol);
  s.read_int("limit_factor", out.limit_factor);
  s.finish();
}

void parse_check(const json& j, const std::string& path, CheckSpec& out) {
  Section s(j, path);
  s.read_int("samples", out.samples);
  s.read_u64("seed", out.seed);
  s.finish();
}

MajorantKind parse_majorant_name(const std::string& name) {
  for (int k = 0; k < 9; ++k) {
    const auto kind = static_cast<MajorantKind>(k);
    if (name == majorant_name(kind)) return kind;
  }
  throw ConfigError("config: unknown majorant '" + name + "' (expected maj1..maj9)");
}

const std::set<std::string> kSolverMajorants = {"maj1", "maj4", "maj5", "maj6", "maj8"};

void validate_config(const RunConfig& config) {
  if (config.phantom.width <= 0 || config.phantom.height <= 0) {
    throw ConfigError("config: phantom.width/height must be positive");
  }
  if (!(config.phantom.pixel_size > 0.0)) {
    throw ConfigError("config: phantom.pixel_size must be positive");
  }
  if (config.geometry.n_angles <= 0 || config.geometry.n_bins <= 0 ||
      !(config.geometry.bin_width > 0.0)) {
    throw ConfigError("config: geometry must have positive angles/bins/bin_width");
  }
  try {
    validate(config.reg);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: regularizer: ") + e.what());
  }
  if (config.solver.majorant != "mlem" &&
      kSolverMajorants.find(config.solver.majorant) == kSolverMajorants.end()) {
    throw ConfigError("config: solver.majorant '" + config.solver.majorant +
                      "' is not solvable (use maj1/maj4/maj5/maj6/maj8 or mlem)");
  }
  if (config.solver.max_iters < 0) {
    throw ConfigError("config: solver.max_iters must be >= 0");
  }
  for (const auto& name : config.benchmark.majorants) {
    if (kSolverMajorants.find(name) == kSolverMajorants.end()) {
      throw ConfigError("config: benchmark.majorants: '" + name +
                        "' is not solvable (use maj1/maj4/maj5/maj6/maj8)");
    }
  }
  if (config.benchmark.limit_factor < 1) {
    throw ConfigError("config: benchmark.limit_factor must be >= 1");
  }
  if (config.check.samples <= 0) {
    throw ConfigError("config: check.samples must be positive");
  }
}

SolverConfig make_solver_config(const RunConfig& config, const std::string& majorant) {
  SolverConfig sc;
  sc.majorant.kind = parse_majorant_name(majorant);
  sc.majorant.mu = config.solver.mu;
  sc.majorant.tau = config.solver.tau;
  sc.reg = config.reg;
  sc.m_r = config.solver.m_r;
  sc.epsilon0 = config.solver.epsilon0;
  sc.max_iters = config.solver.max_iters;
  sc.step_tol = config.solver.step_tol;
  sc.wall_budget_s = config.solver.wall_budget_s;
  sc.seed = config.noise.seed;
  return sc;
}

// A fully wired reconstruction problem. Heap-held because PoissonModel and
// Objective point into the restricted operator.
struct Problem {
  SparseNonnegOperator op;
  std::vector<int> rows_kept;
  PoissonModel model;
  Objective objective;
  Eigen::VectorXd xbar;  // ground truth on the solver variables

  Problem(SparseNonnegOperator::Restricted restricted, Eigen::VectorXd y,
          Eigen::VectorXd b, int width, int height, std::vector<int> var_to_pixel,
          Eigen::VectorXd xbar_vars)
      : op(std::move(restricted.op)),
        rows_kept(std::move(restricted.rows_kept)),
        model(op, std::move(y), std::move(b)),
        objective{&model, width, height, std::move(var_to_pixel)},
        xbar(std::move(xbar_vars)) {}
};

std::unique_ptr<Problem> make_problem(const ImageGrid& phantom,
                                      const std::vector<std::uint8_t>& fov,
                                      const Projector& projector, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& b) {
  auto restricted = projector.op.restrict_columns(fov);
  Eigen::VectorXd y_kept(restricted.rows_kept.size());
  Eigen::VectorXd b_kept(restricted.rows_kept.size());
  for (std::size_t i = 0; i < restricted.rows_kept.size(); ++i) {
    y_kept[static_cast<Eigen::Index>(i)] = y[restricted.rows_kept[i]];
    b_kept[static_cast<Eigen::Index>(i)] = b[restricted.rows_kept[i]];
  }
  std::vector<int> var_to_pixel;
  for (std::size_t p = 0; p < fov.size(); ++p) {
    if (fov[p] != 0) var_to_pixel.push_back(static_cast<int>(p));
  }
  Eigen::VectorXd xbar(static_cast<Eigen::Index>(var_to_pixel.size()));
  for (std::size_t j = 0; j < var_to_pixel.size(); ++j) {
    xbar[static_cast<Eigen::Index>(j)] = phantom.values[var_to_pixel[j]];
  }
  return std::make_unique<Problem>(std::move(restricted), std::move(y_kept),
                                   std::move(b_kept), phantom.width, phantom.height,
                                   std::move(var_to_pixel), std::move(xbar));
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::vector<std::string> mask_rows(const std::vector<std::uint8_t>& mask, int width,
                                   int height) {
  std::vector<std::string> rows;
  for (int iy = 0; iy < height; ++iy) {
    std::string row(static_cast<std::size_t>(width), '0');
    for (int ix = 0; ix < width; ++ix) {
      if (mask[static_cast<std::size_t>(iy * width + ix)] != 0) row[static_cast<std::size_t>(ix)] = '1';
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::uint8_t> mask_from_rows(const std::vector<std::string>& rows, int width,
                                         int height, const std::string& what) {
  if (static_cast<int>(rows.size()) != height) {
    throw std::runtime_error("dataset: " + what + " has wrong row count");
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
  for (int iy = 0; iy < height; ++iy) {
    if (static_cast<int>(rows[static_cast<std::size_t>(iy)].size()) != width) {
      throw std::runtime_error("dataset: " + what + " has wrong row width");
    }
    for (int ix = 0; ix < width; ++ix) {
      mask[static_cast<std::size_t>(iy * width + ix)] =
          rows[static_cast<std::size_t>(iy)][static_cast<std::size_t>(ix)] == '1' ? 1 : 0;
    }
  }
  return mask;
}

// What reconstruct/benchmark need back from a simulate() output directory.
struct Dataset {
  ImageGrid phantom;
  std::vector<std::uint8_t> fov;
  ScanGeometry geometry;
  Eigen::VectorXd y;
  Eigen::VectorXd b;
};

Dataset load_dataset(const std::string& out_dir) {
  const std::string dataset_path = join_path(out_dir, "dataset.json");
  if (!std::filesystem::exists(dataset_path)) {
    throw std::runtime_error("missing simulation artifact: " + dataset_path +
                             " (run simulate first)");
  }
  json j;
  try {
    j = json::parse(read_text_file(dataset_path));
  } catch (const json::exception& e) {
    throw std::runtime_error("dataset.json: parse error: " + std::string(e.what()));
  }

  Dataset ds;
  ds.geometry.n_angles = j.at("geometry").at("n_angles").get<int>();
  ds.geometry.n_bins = j.at("geometry").at("n_bins").get<int>();
  ds.geometry.bin_width = j.at("geometry").at("bin_width").get<double>();

  const json& ph = j.at("phantom");
  ds.phantom.width = ph.at("width").get<int>();
  ds.phantom.height = ph.at("height").get<int>();
  ds.phantom.pixel_size = ph.at("pixel_size").get<double>();
  const auto values = ph.at("values").get<std::vector<double>>();
  ds.phantom.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                        static_cast<Eigen::Index>(values.size()));
  ds.phantom.mask = mask_from_rows(ph.at("mask").get<std::vector<std::string>>(),
                                   ds.phantom.width, ds.phantom.height, "phantom mask");
  validate(ds.phantom);
  ds.fov = mask_from_rows(j.at("fov_mask").get<std::vector<std::string>>(),
                          ds.phantom.width, ds.phantom.height, "fov mask");

  const std::string sino_path = join_path(out_dir, "sinogram.csv");
  if (!std::filesystem::exists(sino_path)) {
    throw std::runtime_error("missing simulation artifact: " + sino_path);
  }
  const auto rows = read_csv(sino_path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"row", "angle", "bin", "y", "b"}) {
    throw std::runtime_error("sinogram.csv: unexpected header");
  }
  const std::size_t m = rows.size() - 1;
  ds.y.resize(static_cast<Eigen::Index>(m));
  ds.b.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = rows[i + 1];
    if (row.size() != 5) throw std::runtime_error("sinogram.csv: malformed row");
    ds.y[static_cast<Eigen::Index>(i)] = std::stod(row[3]);
    ds.b[static_cast<Eigen::Index>(i)] = std::stod(row[4]);
  }
  return ds;
}

std::vector<double> nrmse_series(const IterateHistory& history, const Eigen::VectorXd& xbar) {
  const double denom = xbar.norm();
  std::vector<double> out;
  out.reserve(history.iterates.size());
  for (const auto& x : history.iterates) {
    out.push_back(denom > 0.0 ? (x - xbar).norm() / denom
                              : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

void write_metrics(const std::string& path, const MetricsRecord& rec) {
  json j;
  j["majorant"] = rec.majorant;
  j["iterations"] = rec.iterations;
  j["final_objective"] = rec.final_objective;
  j["final_step_norm"] = rec.final_step_norm;
  j["final_residual_w"] = rec.final_residual_w;
  j["nrmse"] = rec.nrmse;
  j["wall_time_s"] = rec.wall_time_s;
  j["fwd_calls"] = rec.fwd_calls;
  j["adj_calls"] = rec.adj_calls;
  j["stop_reason"] = rec.stop_reason;
  write_text_file(path, j.dump(2) + "\n");
}

ImageGrid embed_image(const Dataset& ds, const Objective& objective,
                      const Eigen::VectorXd& x) {
  ImageGrid grid;
  grid.width = ds.phantom.width;
  grid.height = ds.phantom.height;
  grid.pixel_size = ds.phantom.pixel_size;
  grid.values = objective.embed(x);
  grid.mask = ds.fov;
  return grid;
}

// Reconstruction shared by cmd_reconstruct and cmd_benchmark.
struct ReconRun {
  RunResult result;
  std::vector<double> nrmse;
};

ReconRun run_solver(const Problem& problem, const RunConfig& config,
                    const std::string& majorant, bool record_iterates) {
  if (majorant == "mlem") {
    SolverConfig proxy = make_solver_config(config, "maj6");
    Eigen::VectorXd x0 = warm_start(problem.objective, proxy);
    for (Eigen::Index n = 0; n < x0.size(); ++n) x0[n] = std::max(x0[n], 1e-3);
    ReconRun run{mlem_run(problem.model, x0, config.solver.max_iters, record_iterates), {}};
    if (record_iterates) run.nrmse = nrmse_series(run.result.history, problem.xbar);
    return run;
  }
  SolverConfig sc = make_solver_config(config, majorant);
  sc.record_iterates = record_iterates;
  const Eigen::VectorXd x0 = warm_start(problem.objective, sc);
  ReconRun run{vbmm_run(problem.objective, sc, x0), {}};
  if (record_iterates) run.nrmse = nrmse_series(run.result.history, problem.xbar);
  return run;
}

}  // namespace

RunConfig default_config() {
  RunConfig config;
  config.phantom.width = 32;
  config.phantom.height = 32;
  config.phantom.pixel_size = 1.0;
  config.phantom.background_activity = 0.0;
  config.phantom.ellipses = {
      {0.0, 0.0, 13.0, 11.0, 0.0, 1.0},
      {-4.0, -3.0, 5.0, 4.0, 30.0, 3.0},
      {5.0, 4.0, 3.5, 3.0, 0.0, 0.5},
  };
  config.geometry.n_angles = 48;
  config.geometry.n_bins = 47;
  config.geometry.bin_width = 1.0;
  config.noise.seed = 1;
  config.noise.background_fraction = 0.05;
  config.reg.lambda = 0.3;
  config.reg.delta = 0.5;
  config.reg.epsilon = 1e-3;
  config.solver.majorant = "maj6";
  config.solver.max_iters = 1000;
  config.solver.step_tol = 1e-8;
  config.benchmark.majorants = {"maj1", "maj4", "maj5", "maj6", "maj8"};
  config.benchmark.rel_dist_tol = 1e-3;
  config.benchmark.limit_factor = 10;
  config.check.samples = 2000;
  config.check.seed = 7;
  return config;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error: " + std::string(e.what()));
  }
  RunConfig config = default_config();
  Section root(j, "");
  if (const json* v = root.take("phantom")) parse_phantom(*v, "phantom", config.phantom);
  if (const json* v = root.take("geometry")) parse_geometry(*v, "geometry", config.geometry);
  if (const json* v = root.take("noise")) parse_noise(*v, "noise", config.noise);
  if (const json* v = root.take("regularizer")) parse_reg(*v, "regularizer", config.reg);
  if (const json* v = root.take("solver")) parse_solver(*v, "solver", config.solver);
  if (const json* v = root.take("benchmark")) {
    parse_benchmark(*v, "benchmark", config.benchmark);
  }
  if (const json* v = root.take("check")) parse_check(*v, "check", config.check);
  root.finish();
  validate_config(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return parse_config(text);
}

SimulationArtifacts simulate(const RunConfig& config) {
  validate_config(config);
  SimulationArtifacts art;
  art.phantom = phantom_generate(config.phantom);
  Projector proj = build_projector(config.geometry, config.phantom.width,
                                   config.phantom.height, config.phantom.pixel_size);
  art.noiseless = proj.op.forward(art.phantom.values);

  double b_level = config.noise.background_absolute;
  if (b_level <= 0.0) {
    b_level = config.noise.background_fraction * art.noiseless.mean();
  }
  if (!(b_level > 0.0)) {
    throw ConfigError(
        "config: background level is not positive (zero-activity phantom needs "
        "noise.background_absolute)");
  }
  art.b = Eigen::VectorXd::Constant(art.noiseless.size(), b_level);
  art.y = poisson_sample(art.noiseless + art.b, config.noise.seed);

  const auto covered = coverage_mask(proj.op, art.phantom.size());
  const auto support = dilate_mask(art.phantom.mask, art.phantom.width,
                                   art.phantom.height, 2);
  art.fov_mask.resize(covered.size());
  for (std::size_t p = 0; p < covered.size(); ++p) {
    art.fov_mask[p] = (covered[p] != 0 && support[p] != 0) ? 1 : 0;
  }
  art.projector = std::move(proj);
  return art;
}

int cmd_simulate(const RunConfig& config, const std::string& out_dir) {
  const SimulationArtifacts art = simulate(config);
  std::filesystem::create_directories(out_dir);

  write_pgm16(join_path(out_dir, "phantom.pgm"), art.phantom);

  std::string sino = "row,angle,bin,y,b\n";
  for (int m = 0; m < art.projector.op.rows(); ++m) {
    sino += std::to_string(m) + "," + std::to_string(art.projector.row_angle[static_cast<std::size_t>(m)]) +
            "," + std::to_string(art.projector.row_bin[static_cast<std::size_t>(m)]) + "," +
            std::to_string(static_cast<std::int64_t>(art.y[m])) + "," +
            format_g17(art.b[m]) + "\n";
  }
  write_text_file(join_path(out_dir, "sinogram.csv"), sino);

  json j;
  j["geometry"]["n_angles"] = config.geometry.n_angles;
  j["geometry"]["n_bins"] = config.geometry.n_bins;
  j["geometry"]["bin_width"] = config.geometry.bin_width;
  j["phantom"]["width"] = art.phantom.width;
  j["phantom"]["height"] = art.phantom.height;
  j["phantom"]["pixel_size"] = art.phantom.pixel_size;
  j["phantom"]["values"] = std::vector<double>(
      art.phantom.values.data(), art.phantom.values.data() + art.phantom.values.size());
  j["phantom"]["mask"] = mask_rows(art.phantom.mask, art.phantom.width, art.phantom.height);
  j["fov_mask"] = mask_rows(art.fov_mask, art.phantom.width, art.phantom.height);
  j["noise"]["seed"] = config.noise.seed;
  j["noise"]["b_level"] = art.b.size() > 0 ? art.b[0] : 0.0;
  write_text_file(join_path(out_dir, "dataset.json"), j.dump(2) + "\n");
  return 0;
}

int cmd_reconstruct(const RunConfig& config, const std::string& out_dir,
                    const std::string& majorant_override) {
  const Dataset ds = load_dataset(out_dir);
  const Projector proj = build_projector(ds.geometry, ds.phantom.width, ds.phantom.height,
                                         ds.phantom.pixel_size);
  if (proj.op.rows() != ds.y.size()) {
    throw std::runtime_error("sinogram.csv does not match the stored geometry");
  }
  const auto problem = make_problem(ds.phantom, ds.fov, proj, ds.y, ds.b);

  const std::string majorant =
      majorant_override.empty() ? config.solver.majorant : majorant_override;
  if (majorant != "mlem" && kSolverMajorants.find(majorant) == kSolverMajorants.end()) {
    throw ConfigError("config: majorant '" + majorant + "' is not solvable");
  }

  const ReconRun run = run_solver(*problem, config, majorant, true);
  const IterateHistory& hist = run.result.history;

  write_trace_csv(join_path(out_dir, "trace_" + majorant + ".csv"), hist, run.nrmse);
  write_pgm16(join_path(out_dir, "recon_" + majorant + ".pgm"),
              embed_image(ds, problem->objective, run.result.x));

  MetricsRecord rec;
  rec.majorant = majorant;
  rec.iterations = hist.iterations();
  rec.final_objective = hist.rows.back().objective;
  rec.final_step_norm =
      hist.rows.size() > 1 ? hist.rows[hist.rows.size() - 2].step_norm : 0.0;
  rec.final_residual_w =
      hist.rows.size() > 1 ? hist.rows[hist.rows.size() - 2].residual_w : 0.0;
  rec.nrmse = run.nrmse.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : run.nrmse.back();
  rec.wall_time_s = hist.rows.back().wall_time_s;
  rec.fwd_calls = hist.rows.back().fwd_calls;
  rec.adj_calls = hist.rows.back().adj_calls;
  rec.stop_reason = stop_reason_name(hist.stop);
  write_metrics(join_path(out_dir, "metrics_" + majorant + ".json"), rec);
  return 0;
}

int cmd_benchmark(const RunConfig& config, const std::string& out_dir) {
  if (config.benchmark.majorants.size() < 2) {
    throw ConfigError("config: benchmark needs at least 2 majorants");
  }
  const Dataset ds = load_dataset(out_dir);
  const Projector proj = build_projector(ds.geometry, ds.phantom.width, ds.phantom.height,
                                         ds.phantom.pixel_size);
  if (proj.op.rows() != ds.y.size()) {
    throw std::runtime_error("sinogram.csv does not match the stored geometry");
  }
  const auto problem = make_problem(ds.phantom, ds.fov, proj, ds.y, ds.b);

  std::string summary =
      "majorant,iterations,iters_to_tol,wall_to_tol_s,fwd_calls_to_tol,"
      "adj_calls_to_tol,fwd_calls_total,adj_calls_total,stop_reason\n";
  for (const auto& name : config.benchmark.majorants) {
    const ReconRun run = run_solver(*problem, config, name, true);
    const IterateHistory& hist = run.result.history;
    const int k_run = hist.iterations();

    // Limit point: same start, ten times the recorded iteration budget.
    SolverConfig limit_sc = make_solver_config(config, name);
    limit_sc.max_iters = std::max(1, config.benchmark.limit_factor * std::max(1, k_run));
    limit_sc.step_tol = 0.0;
    limit_sc.wall_budget_s = 0.0;
    const Eigen::VectorXd x0 = warm_start(problem->objective, limit_sc);
    const RunResult limit = vbmm_run(problem->objective, limit_sc, x0);
    const double denom = limit.x.norm();

    std::string bench = "iter,wall_time_s,rel_dist,fwd_calls,adj_calls\n";
    int iters_to_tol = -1;
    double wall_to_tol = std::numeric_limits<double>::quiet_NaN();
    std::int64_t fwd_to_tol = -1, adj_to_tol = -1;
    for (std::size_t k = 0; k < hist.iterates.size(); ++k) {
      const double rel =
          denom > 0.0 ? (hist.iterates[k] - limit.x).norm() / denom
                      : std::numeric_limits<double>::quiet_NaN();
      const IterateRecord& row = hist.rows[k];
      bench += std::to_string(row.iter) + "," + format_g17(row.wall_time_s) + "," +
               format_g17(rel) + "," + std::to_string(row.fwd_calls) + "," +
               std::to_string(row.adj_calls) + "\n";
      if (iters_to_tol < 0 && rel <= config.benchmark.rel_dist_tol) {
        iters_to_tol = row.iter;
        wall_to_tol = row.wall_time_s;
        fwd_to_tol = row.fwd_calls;
        adj_to_tol = row.adj_calls;
      }
    }
    write_text_file(join_path(out_dir, "bench_" + name + ".csv"), bench);
    summary += name + "," + std::to_string(k_run) + "," + std::to_string(iters_to_tol) +
               "," + format_g17(wall_to_tol) + "," + std::to_string(fwd_to_tol) + "," +
               std::to_string(adj_to_tol) + "," +
               std::to_string(hist.rows.back().fwd_calls) + "," +
               std::to_string(hist.rows.back().adj_calls) + "," +
               stop_reason_name(hist.stop) + "\n";
  }
  write_text_file(join_path(out_dir, "benchmark_summary.csv"), summary);
  return 0;
}

int cmd_check(const RunConfig& config, const std::string& out_dir) {
  const SimulationArtifacts art = simulate(config);
  const auto problem = make_problem(art.phantom, art.fov_mask, art.projector, art.y, art.b);
  const PoissonModel& model = problem->model;
  const int dim = problem->objective.dim();
  const int samples = config.check.samples;
  const std::uint64_t seed = config.check.seed;

  json checks = json::array();
  bool all_pass = true;
  const auto push = [&](const std::string& name, bool pass, double measured,
                        double threshold, const std::string& sense) {
    json e;
    e["name"] = name;
    e["pass"] = pass;
    e["measured"] = measured;
    e["threshold"] = threshold;
    e["sense"] = sense;
    checks.push_back(e);
    all_pass = all_pass && pass;
    std::printf("%-34s %s  measured=%.3e\n", name.c_str(), pass ? "pass" : "FAIL",
                measured);
  };

  // Operator self-consistency.
  const double adj = adjoint_check(*model.op, 20, seed);
  push("adjoint", adj <= 1e-12, adj, 1e-12, "<=");

  // Majorization of the log part for every family.
  const auto ell = [&](const Eigen::VectorXd& v) { return ell_value(model, v); };
  const auto ell_grad = [&](const Eigen::VectorXd& v) { return ell_gradient(model, v); };
  for (int k = 0; k < 9; ++k) {
    MajorantSpec spec{static_cast<MajorantKind>(k), -1.0, -1.0};
    const Box box = domain_box(spec, model.rho, 3.0);
    const auto report = majorization_check(
        ell, ell_grad,
        [&](const Eigen::VectorXd& z) { return make_generator(model, spec, z); }, box,
        dim, samples, seed);
    push(std::string("majorization_") + majorant_name(spec.kind),
         report.min_gap >= -1e-8 && report.max_tangency <= 1e-12, report.min_gap, -1e-8,
         ">=");
  }

  // Fault injection: the checker must flag a corrupted majorant. Run it on a
  // one-pixel sibling with flat background (zeta_m b_m constant): there the
  // log-shift majorant reproduces the fidelity Bregman distance exactly, so
  // halving its coefficient undershoots at every x != z and any sample
  // budget catches it. On a generic multi-pixel model the halved majorant
  // can stay above the fidelity, which would test nothing.
  {
    const std::vector<Triplet> trip{{0, 0, 1.0}, {1, 0, 2.0}, {2, 0, 0.5}};
    const SparseNonnegOperator fault_op(3, 1, trip);
    Eigen::VectorXd fy(3), fb(3);
    fy << 4.0, 7.0, 3.0;
    fb = 0.25 * fault_op.row_sums();  // zeta_m b_m = 0.25 on every row
    const PoissonModel fault_model(fault_op, fy, fb);
    const auto fault_ell = [&](const Eigen::VectorXd& v) { return ell_value(fault_model, v); };
    const auto fault_grad = [&](const Eigen::VectorXd& v) { return ell_gradient(fault_model, v); };
    MajorantSpec spec{MajorantKind::Maj1, -1.0, -1.0};
    const Box box = domain_box(spec, fault_model.rho, 3.0);
    const auto corrupted = majorization_check(
        fault_ell, fault_grad,
        [&](const Eigen::VectorXd& z) {
          return MajorantGenerator(make_separable_legendre(
              SeparableLegendre::Form::LogShift, fault_model.rho,
              (0.5 * coeff_maj1(fault_model, z)).eval()));
        },
        box, 1, samples, seed);
    push("fault_injection_maj1_halved", corrupted.min_gap < -1e-8, corrupted.min_gap,
         -1e-8, "<");
  }

  // Order relations; the last one needs zeta_m b_m constant, so it runs on a
  // sibling model with b_m proportional to the row sums.
  {
    const double rho = model.rho;
    auto gen = [&](MajorantKind kind, double mu, const Eigen::VectorXd& z) {
      MajorantSpec spec{kind, mu, -1.0};
      return make_generator(model, spec, z);
    };
    auto relation = [&](const std::string& name, MajorantKind tight, MajorantKind loose,
                        double lo_edge, std::uint64_t salt, double mu_tight = -1.0) {
      const Box box{-lo_edge + 1e-3, 3.0};
      auto g = rng::stream(seed, salt);
      double worst = std::numeric_limits<double>::infinity();
      const int outer = 50;
      const int inner = std::max(1, samples / outer);
      Eigen::VectorXd z(dim);
      for (int i = 0; i < outer; ++i) {
        for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
        const MajorantGenerator ht = gen(tight, mu_tight, z);
        const MajorantGenerator hl = gen(loose, -1.0, z);
        worst = std::min(worst, order_check(ht, hl, box, dim, inner,
                                            rng::splitmix64(seed ^ (salt * 1000 + static_cast<std::uint64_t>(i)))));
      }
      push("order_" + name, worst >= -1e-9, worst, -1e-9, ">=");
    };
    relation("h4_h1", MajorantKind::Maj4, MajorantKind::Maj1, rho, 11, rho);
    relation("h1_h2", MajorantKind::Maj1, MajorantKind::Maj2, rho, 12);
    relation("h1_h3", MajorantKind::Maj1, MajorantKind::Maj3, rho, 13);
    relation("h1_h5", MajorantKind::Maj1, MajorantKind::Maj5, 0.0, 14);
    relation("h6_h5", MajorantKind::Maj6, MajorantKind::Maj5, 0.0, 15);
    relation("h7_h8", MajorantKind::Maj7, MajorantKind::Maj8,
             MajorantSpec{MajorantKind::Maj7, -1.0, -1.0}.resolved_tau(rho), 16);
  }
  {
    // zeta_m b_m = rho for every row: b_m = rho * row_sum_m. The quadratic's
    // weight is frozen at the base point, so this order is anchored: it
    // compares D(., z) at the z the generators were built from, for x down
    // to -tau where the quadratic still majorizes.
    const Eigen::VectorXd b_flat = model.rho * model.op->row_sums();
    const PoissonModel flat(*model.op, model.y, b_flat);
    const double tau = MajorantSpec{MajorantKind::Maj7, -1.0, -1.0}.resolved_tau(flat.rho);
    const Box box{-tau + 1e-3, 3.0};
    auto g = rng::stream(seed, 17);
    double worst = std::numeric_limits<double>::infinity();
    const int outer = 50;
    const int inner = std::max(1, samples / outer);
    Eigen::VectorXd z(dim);
    for (int i = 0; i < outer; ++i) {
      for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
      const MajorantGenerator h3 =
          make_generator(flat, MajorantSpec{MajorantKind::Maj3, -1.0, -1.0}, z);
      const MajorantGenerator h7 =
          make_generator(flat, MajorantSpec{MajorantKind::Maj7, -1.0, -1.0}, z);
      worst = std::min(worst, order_check_anchored(h3, h7, z, box, inner,
                                                   rng::splitmix64(seed ^ (17000 + static_cast<std::uint64_t>(i)))));
    }
    push("order_h3_h7_flat_background", worst >= -1e-9, worst, -1e-9, ">=");
  }

  // Closed-form curvature against blunt numerical integration.
  {
    std::vector<double> nodes, weights;
    gauss_legendre_01(32, nodes, weights);
    double worst = 0.0;
    for (int it = 0; it < 3; ++it) {
      const double tau = 0.2 + 0.3 * it;
      for (int ie = 0; ie < 10; ++ie) {
        const double eta = tau + 0.05 + 0.35 * ie;
        for (int ix = 0; ix < 20; ++ix) {
          const double xi = ix == 0 ? -tau + 1e-8 : -tau + 0.4 * ix;
          double quad = 0.0;
          for (int p = 0; p < 16; ++p) {  // composite panels
            for (std::size_t q = 0; q < nodes.size(); ++q) {
              const double t = (p + nodes[q]) / 16.0;
              const double den = (1.0 - t) * xi - t * tau + eta;
              quad += weights[q] / 16.0 * 2.0 * (1.0 - t) / (den * den);
            }
          }
          const double closed = curvature_c_tau(xi, eta, tau);
          worst = std::max(worst, std::abs(closed - quad) / std::abs(quad));
        }
      }
    }
    push("curvature_vs_quadrature", worst <= 1e-8, worst, 1e-8, "<=");
  }

  // Gradients against central differences at a random interior point.
  {
    auto g = rng::stream(seed, 99);
    Eigen::VectorXd x(dim);
    for (int n = 0; n < dim; ++n) x[n] = rng::uniform(g, 0.5, 2.0);
    const Eigen::VectorXd grad = kl_gradient(model, x);
    Eigen::VectorXd fd(dim);
    for (int n = 0; n < dim; ++n) {
      const double h = 1e-5 * (1.0 + std::abs(x[n]));
      Eigen::VectorXd xp = x, xm = x;
      xp[n] += h;
      xm[n] -= h;
      fd[n] = (kl_value(model, xp) - kl_value(model, xm)) / (2.0 * h);
    }
    const double rel = (grad - fd).norm() / std::max(1e-30, grad.norm());
    push("kl_gradient_fd", rel <= 1e-5, rel, 1e-5, "<=");
  }

  // Hessian-characterization certificate for the tight log-shift family.
  {
    auto g = rng::stream(seed, 101);
    double worst = std::numeric_limits<double>::infinity();
    MajorantSpec spec{MajorantKind::Maj1, -1.0, -1.0};
    const Box box = domain_box(spec, model.rho, 3.0);
    Eigen::VectorXd x(dim), z(dim);
    for (int t = 0; t < 20; ++t) {
      for (int n = 0; n < dim; ++n) x[n] = rng::uniform(g, box.lo, box.hi);
      for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
      const MajorantGenerator h = make_generator(model, spec, z);
      const double v = hessian_characterization_check(
          [&](const Eigen::VectorXd& vv, const Eigen::VectorXd& dd) {
            return ell_dir_curvature(model, vv, dd);
          },
          h, x, z);
      worst = std::min(worst, v / (1.0 + std::abs(v)));
    }
    push("hessian_characterization_maj1", worst >= -1e-10, worst, -1e-10, ">=");
  }

  json report;
  report["all_pass"] = all_pass;
  report["checks"] = checks;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(join_path(out_dir, "report.json"), report.dump(2) + "\n");
  }
  std::printf("check: %s\n", all_pass ? "all checks passed" : "FAILURES present");
  return all_pass ? 0 : 4;
}

}  // namespace bregmm
