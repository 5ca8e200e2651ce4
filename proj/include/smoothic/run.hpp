#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothic/cluster.hpp"
#include "smoothic/continuation.hpp"
#include "smoothic/csv.hpp"
#include "smoothic/datasets.hpp"
#include "smoothic/models.hpp"
#include "smoothic/objective.hpp"
#include "smoothic/oracle.hpp"
#include "smoothic/smoothers.hpp"

namespace smoothic::run {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Bad or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Unusable input data; maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 1;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SeedSpec {
  bool named = false;
  std::string label;
  std::vector<double> values;

  json echo() const { return named ? json(label) : json(values); }
};

struct GridSpec {
  std::optional<std::string> coordinate_name;  // resolved against data columns
  std::optional<std::size_t> coordinate_index;
  double min = 0.0;
  double max = 0.0;
  std::size_t points = 0;
};

struct RunConfig {
  std::string mode;
  std::string data_path;   // empty when synthetic data is requested
  json synthetic;          // null unless synthetic data is requested
  std::string response = "y";
  bool intercept = true;
  std::string objective = "aic";
  SmootherFamily family = SmootherFamily::Sech;

  std::optional<double> k0, k_max, snap_tol;  // absolute overrides
  double k0_over_sigma = 0.5;                 // defaults scale with the data
  double kmax_over_sigma = 1e4;
  double snap_over_sigma = 1e-4;
  double ratio = 1.25;
  double inner_tol = 1e-8;
  int inner_max_iter = 60;
  int series_order = 3;

  std::optional<double> sigma2;  // regression noise variance override
  std::optional<double> sigma;   // means-model noise sd override

  std::vector<SeedSpec> seeds;  // empty = mode default
  std::optional<std::vector<std::string>> penalized;
  bool penalize_intercept = false;

  std::vector<double> k_list;     // surface mode
  std::optional<GridSpec> grid;   // surface mode
  json base = json("ols");        // surface slice base point
  std::string column;             // oracle-partition column; empty = first
};

namespace detail {

inline double as_finite_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("key '" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("key '" + key + "' must be finite");
  return d;
}

inline double as_positive_number(const json& v, const std::string& key) {
  const double d = as_finite_number(v, key);
  if (!(d > 0.0)) throw ConfigError("key '" + key + "' must be positive");
  return d;
}

inline int as_positive_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("key '" + key + "' must be an integer");
  const auto n = v.get<long long>();
  if (n < 1) throw ConfigError("key '" + key + "' must be at least 1");
  return static_cast<int>(n);
}

inline std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("key '" + key + "' must be a string");
  return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("key '" + key + "' must be a boolean");
  return v.get<bool>();
}

inline SeedSpec parse_seed(const json& v) {
  SeedSpec spec;
  if (v.is_string()) {
    spec.named = true;
    spec.label = v.get<std::string>();
    static const std::set<std::string> kKnown{"ols", "zero", "saturated"};
    if (!kKnown.count(spec.label)) {
      throw ConfigError("unknown seed name '" + spec.label + "'");
    }
    return spec;
  }
  if (v.is_array()) {
    if (v.empty()) throw ConfigError("seed vectors must be non-empty");
    for (const auto& entry : v) spec.values.push_back(as_finite_number(entry, "seeds"));
    return spec;
  }
  throw ConfigError("each seed must be a name or an array of numbers");
}

inline GridSpec parse_grid(const json& v) {
  if (!v.is_object()) throw ConfigError("key 'grid' must be an object");
  static const std::set<std::string> kKeys{"coordinate", "min", "max", "points"};
  for (const auto& [key, _] : v.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown grid key '" + key + "'");
  }
  GridSpec grid;
  if (v.contains("coordinate")) {
    const json& c = v.at("coordinate");
    if (c.is_string()) {
      grid.coordinate_name = c.get<std::string>();
    } else if (c.is_number_integer() && c.get<long long>() >= 0) {
      grid.coordinate_index = static_cast<std::size_t>(c.get<long long>());
    } else {
      throw ConfigError("grid key 'coordinate' must be a column name or non-negative index");
    }
  }
  if (!v.contains("min") || !v.contains("max") || !v.contains("points")) {
    throw ConfigError("grid requires 'min', 'max', and 'points'");
  }
  grid.min = as_finite_number(v.at("min"), "grid.min");
  grid.max = as_finite_number(v.at("max"), "grid.max");
  if (!(grid.min < grid.max)) throw ConfigError("grid requires min < max");
  const int points = as_positive_int(v.at("points"), "grid.points");
  if (points < 2) throw ConfigError("grid requires at least 2 points");
  grid.points = static_cast<std::size_t>(points);
  return grid;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  static const std::set<std::string> kKeys{
      "mode",           "data",         "synthetic",      "response",
      "intercept",      "objective",    "smoother",       "k0",
      "ratio",          "k_max",        "inner_tol",      "inner_max_iter",
      "order",          "snap_tol",     "k0_over_sigma",  "kmax_over_sigma",
      "snap_over_sigma", "sigma2",      "sigma",          "seeds",
      "penalized",      "penalize_intercept",             "k_list",
      "grid",           "base",         "column"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig cfg;
  if (!j.contains("mode")) throw ConfigError("key 'mode' is required");
  cfg.mode = detail::as_string(j.at("mode"), "mode");
  static const std::set<std::string> kModes{"select", "cluster", "oracle-subset",
                                            "oracle-partition", "surface"};
  if (!kModes.count(cfg.mode)) throw ConfigError("unknown mode '" + cfg.mode + "'");

  if (j.contains("data")) cfg.data_path = detail::as_string(j.at("data"), "data");
  if (j.contains("synthetic")) {
    if (!j.at("synthetic").is_object()) throw ConfigError("key 'synthetic' must be an object");
    cfg.synthetic = j.at("synthetic");
  }
  if (!cfg.data_path.empty() && !cfg.synthetic.is_null()) {
    throw ConfigError("provide either 'data' or 'synthetic', not both");
  }
  if (cfg.data_path.empty() && cfg.synthetic.is_null()) {
    throw ConfigError("one of 'data' or 'synthetic' is required");
  }

  if (j.contains("response")) cfg.response = detail::as_string(j.at("response"), "response");
  if (j.contains("intercept")) cfg.intercept = detail::as_bool(j.at("intercept"), "intercept");
  if (j.contains("objective")) cfg.objective = detail::as_string(j.at("objective"), "objective");
  if (j.contains("smoother")) {
    try {
      cfg.family = parse_family(detail::as_string(j.at("smoother"), "smoother"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  if (j.contains("k0")) cfg.k0 = detail::as_positive_number(j.at("k0"), "k0");
  if (j.contains("k_max")) cfg.k_max = detail::as_positive_number(j.at("k_max"), "k_max");
  if (j.contains("snap_tol")) cfg.snap_tol = detail::as_positive_number(j.at("snap_tol"), "snap_tol");
  if (j.contains("ratio")) {
    cfg.ratio = detail::as_finite_number(j.at("ratio"), "ratio");
    if (!(cfg.ratio > 1.0)) throw ConfigError("key 'ratio' must exceed 1");
  }
  if (j.contains("inner_tol")) cfg.inner_tol = detail::as_positive_number(j.at("inner_tol"), "inner_tol");
  if (j.contains("inner_max_iter")) {
    cfg.inner_max_iter = detail::as_positive_int(j.at("inner_max_iter"), "inner_max_iter");
  }
  if (j.contains("order")) cfg.series_order = detail::as_positive_int(j.at("order"), "order");
  if (j.contains("k0_over_sigma")) {
    cfg.k0_over_sigma = detail::as_positive_number(j.at("k0_over_sigma"), "k0_over_sigma");
  }
  if (j.contains("kmax_over_sigma")) {
    cfg.kmax_over_sigma = detail::as_positive_number(j.at("kmax_over_sigma"), "kmax_over_sigma");
  }
  if (j.contains("snap_over_sigma")) {
    cfg.snap_over_sigma = detail::as_positive_number(j.at("snap_over_sigma"), "snap_over_sigma");
  }
  if (j.contains("sigma2")) cfg.sigma2 = detail::as_positive_number(j.at("sigma2"), "sigma2");
  if (j.contains("sigma")) cfg.sigma = detail::as_positive_number(j.at("sigma"), "sigma");

  if (j.contains("seeds")) {
    const json& seeds = j.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      throw ConfigError("key 'seeds' must be a non-empty array");
    }
    for (const auto& entry : seeds) cfg.seeds.push_back(detail::parse_seed(entry));
  }
  if (j.contains("penalized")) {
    const json& pen = j.at("penalized");
    if (!pen.is_array()) throw ConfigError("key 'penalized' must be an array of column names");
    std::vector<std::string> names;
    for (const auto& entry : pen) names.push_back(detail::as_string(entry, "penalized"));
    std::set<std::string> seen(names.begin(), names.end());
    if (seen.size() != names.size()) throw ConfigError("key 'penalized' has duplicate names");
    cfg.penalized = std::move(names);
  }
  if (j.contains("penalize_intercept")) {
    cfg.penalize_intercept = detail::as_bool(j.at("penalize_intercept"), "penalize_intercept");
  }

  if (j.contains("k_list")) {
    const json& ks = j.at("k_list");
    if (!ks.is_array() || ks.empty()) throw ConfigError("key 'k_list' must be a non-empty array");
    for (const auto& entry : ks) cfg.k_list.push_back(detail::as_positive_number(entry, "k_list"));
  }
  if (j.contains("grid")) cfg.grid = detail::parse_grid(j.at("grid"));
  if (j.contains("base")) {
    const json& base = j.at("base");
    const bool named = base.is_string() &&
                       (base.get<std::string>() == "ols" || base.get<std::string>() == "zero");
    if (!named && !base.is_array()) {
      throw ConfigError("key 'base' must be \"ols\", \"zero\", or an array of numbers");
    }
    cfg.base = base;
  }
  if (j.contains("column")) cfg.column = detail::as_string(j.at("column"), "column");

  if (cfg.mode == "surface") {
    if (cfg.k_list.empty()) throw ConfigError("surface mode requires 'k_list'");
    if (!cfg.grid) throw ConfigError("surface mode requires 'grid'");
  }
  return cfg;
}

/// Reads and parses a JSON config file; parse errors carry line/column info.
inline json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Data loading
// ---------------------------------------------------------------------------

namespace detail {

inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) throw DataError("need at least 2 observations to set the data scale");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  if (!(sd > 0.0)) throw DataError("data scale is zero (constant column)");
  return sd;
}

inline std::uint32_t synthetic_seed(const json& spec) {
  if (!spec.contains("seed")) throw ConfigError("synthetic data requires 'seed'");
  const json& s = spec.at("seed");
  if (!s.is_number_integer() || s.get<long long>() < 0) {
    throw ConfigError("synthetic key 'seed' must be a non-negative integer");
  }
  return static_cast<std::uint32_t>(s.get<long long>());
}

inline std::size_t synthetic_n(const json& spec, std::size_t fallback, std::size_t min_n) {
  if (!spec.contains("n")) return fallback;
  const json& v = spec.at("n");
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_n)) {
    throw ConfigError("synthetic key 'n' must be an integer >= " + std::to_string(min_n));
  }
  return static_cast<std::size_t>(v.get<long long>());
}

inline void check_synthetic_keys(const json& spec, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : spec.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown synthetic key '" + key + "'");
  }
}

}  // namespace detail

struct RegressionData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> coord_names;  // one per column of X
  bool has_intercept = false;
  std::optional<std::uint32_t> synthetic_seed;
  std::string source;
};

inline RegressionData load_regression(const RunConfig& cfg) {
  RegressionData data;
  if (!cfg.synthetic.is_null()) {
    const std::string kind = cfg.synthetic.contains("kind")
                                 ? detail::as_string(cfg.synthetic.at("kind"), "synthetic.kind")
                                 : "";
    if (kind != "two-basin-regression") {
      throw ConfigError("regression modes accept synthetic kind 'two-basin-regression'");
    }
    detail::check_synthetic_keys(cfg.synthetic, {"kind", "seed", "n"});
    const std::uint32_t seed = detail::synthetic_seed(cfg.synthetic);
    const std::size_t n = detail::synthetic_n(cfg.synthetic, 8, 4);
    const datasets::TwoBasinToy toy = datasets::make_two_basin_toy(seed, n);
    data.X = toy.design;
    data.y = toy.response;
    data.coord_names = {"intercept", "x"};
    data.has_intercept = true;
    data.synthetic_seed = seed;
    data.source = "synthetic:two-basin-regression";
    return data;
  }

  const csv::NumericTable table = csv::read_numeric(cfg.data_path);
  const auto it = std::find(table.header.begin(), table.header.end(), cfg.response);
  if (it == table.header.end()) {
    throw DataError(cfg.data_path + ": response column '" + cfg.response + "' not found");
  }
  const std::size_t resp = static_cast<std::size_t>(it - table.header.begin());
  const std::size_t n = table.row_count();
  if (n == 0) throw DataError(cfg.data_path + ": no data rows");

  std::vector<std::size_t> predictor_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != resp) predictor_cols.push_back(c);
  }
  const std::size_t q = predictor_cols.size() + (cfg.intercept ? 1 : 0);
  if (q == 0) throw DataError(cfg.data_path + ": no predictor columns and no intercept");

  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  std::size_t col = 0;
  if (cfg.intercept) {
    data.X.col(0).setOnes();
    data.coord_names.push_back("intercept");
    data.has_intercept = true;
    col = 1;
  }
  for (std::size_t c : predictor_cols) {
    for (std::size_t r = 0; r < n; ++r) {
      data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = table.columns[c][r];
    }
    data.coord_names.push_back(table.header[c]);
    ++col;
  }
  data.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) data.y[static_cast<Eigen::Index>(r)] = table.columns[resp][r];
  data.source = cfg.data_path;
  return data;
}

struct ColumnData {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::optional<std::uint32_t> synthetic_seed;
  std::string source;

  std::size_t row_count() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline ColumnData load_columns(const RunConfig& cfg) {
  ColumnData data;
  if (!cfg.synthetic.is_null()) {
    const std::string kind = cfg.synthetic.contains("kind")
                                 ? detail::as_string(cfg.synthetic.at("kind"), "synthetic.kind")
                                 : "";
    if (kind == "geyser-like") {
      detail::check_synthetic_keys(cfg.synthetic, {"kind", "seed", "n"});
      const std::uint32_t seed = detail::synthetic_seed(cfg.synthetic);
      const std::size_t n = detail::synthetic_n(cfg.synthetic, 272, 10);
      const datasets::BivariateSample sample = datasets::make_geyser_like(n, seed);
      data.names = {"eruptions", "waiting"};
      data.columns = {sample.eruptions, sample.waiting};
      data.synthetic_seed = seed;
      data.source = "synthetic:geyser-like";
      return data;
    }
    if (kind == "separated-means") {
      detail::check_synthetic_keys(cfg.synthetic, {"kind", "seed", "n", "gap", "noise_sd"});
      const std::uint32_t seed = detail::synthetic_seed(cfg.synthetic);
      const std::size_t n = detail::synthetic_n(cfg.synthetic, 8, 2);
      if (!cfg.synthetic.contains("gap") || !cfg.synthetic.contains("noise_sd")) {
        throw ConfigError("synthetic kind 'separated-means' requires 'gap' and 'noise_sd'");
      }
      const double gap = detail::as_positive_number(cfg.synthetic.at("gap"), "synthetic.gap");
      const double sd = detail::as_positive_number(cfg.synthetic.at("noise_sd"), "synthetic.noise_sd");
      const datasets::SeparatedMeans sample = datasets::make_separated_means(n, gap, sd, seed);
      data.names = {"y"};
      data.columns = {sample.values};
      data.synthetic_seed = seed;
      data.source = "synthetic:separated-means";
      return data;
    }
    throw ConfigError("column modes accept synthetic kinds 'geyser-like' and 'separated-means'");
  }

  const csv::NumericTable table = csv::read_numeric(cfg.data_path);
  if (table.row_count() == 0) throw DataError(cfg.data_path + ": no data rows");
  data.names = table.header;
  data.columns = table.columns;
  data.source = cfg.data_path;
  return data;
}

// ---------------------------------------------------------------------------
// Shared run plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline ContinuationSchedule build_schedule(const RunConfig& cfg, double sigma_scale) {
  ContinuationSchedule sched;
  sched.k0 = cfg.k0 ? *cfg.k0 : cfg.k0_over_sigma / sigma_scale;
  sched.k_max = cfg.k_max ? *cfg.k_max : cfg.kmax_over_sigma / sigma_scale;
  sched.ratio = cfg.ratio;
  sched.inner_tol = cfg.inner_tol;
  sched.inner_max_iter = cfg.inner_max_iter;
  sched.series_order = cfg.series_order;
  try {
    validate_schedule(sched);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return sched;
}

inline double resolve_snap_tol(const RunConfig& cfg, double sigma_scale) {
  return cfg.snap_tol ? *cfg.snap_tol : cfg.snap_over_sigma * sigma_scale;
}

inline double resolve_objective_weight(const RunConfig& cfg, std::size_t n) {
  try {
    return resolve_ic_weight(cfg.objective, n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// Zero-penalty coordinate mask from column names; default penalizes every
/// coordinate except an intercept.
inline std::vector<std::size_t> build_penalized_mask(const RunConfig& cfg,
                                                     const RegressionData& data) {
  std::vector<std::size_t> mask;
  if (cfg.penalized) {
    for (const std::string& name : *cfg.penalized) {
      const auto it = std::find(data.coord_names.begin(), data.coord_names.end(), name);
      if (it == data.coord_names.end()) {
        throw ConfigError("penalized column '" + name + "' not found in data");
      }
      mask.push_back(static_cast<std::size_t>(it - data.coord_names.begin()));
    }
    std::sort(mask.begin(), mask.end());
    return mask;
  }
  for (std::size_t jcoord = 0; jcoord < data.coord_names.size(); ++jcoord) {
    if (data.has_intercept && jcoord == 0 && !cfg.penalize_intercept) continue;
    mask.push_back(jcoord);
  }
  // An empty mask would mean "penalize everything" downstream; demand an
  // explicit choice instead.
  if (mask.empty()) {
    throw ConfigError("no penalized coordinates; list some under 'penalized'");
  }
  return mask;
}

inline std::string support_string(const std::vector<bool>& support) {
  std::string out;
  out.reserve(support.size());
  for (bool b : support) out.push_back(b ? '1' : '0');
  return out;
}

inline std::string labels_string(const std::vector<int>& labels) {
  std::string out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(static_cast<char>('0' + l));
  return out;
}

inline void write_json_file(const std::filesystem::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open file for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace detail

/// One row of a solution-path CSV; mirrors the file schema exactly.
struct PathCsvRow {
  double k = 0.0;
  int sweeps = 0;
  bool converged = false;
  bool jump_flagged = false;
  double objective = 0.0;
  double surrogate_count = 0.0;
  double max_abs_grad = 0.0;
  std::vector<double> theta;

  bool operator==(const PathCsvRow&) const = default;
};

inline std::vector<PathCsvRow> path_rows(const SolutionPath& path) {
  std::vector<PathCsvRow> rows;
  rows.reserve(path.records.size());
  for (const PathRecord& rec : path.records) {
    PathCsvRow row;
    row.k = rec.k;
    row.sweeps = rec.sweeps;
    row.converged = rec.converged;
    row.jump_flagged = rec.jump_flagged;
    row.objective = rec.objective;
    row.surrogate_count = rec.surrogate_count;
    row.max_abs_grad = rec.max_abs_grad;
    row.theta = rec.theta;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_path_csv(const std::string& path, const std::vector<PathCsvRow>& rows,
                           std::size_t q) {
  std::vector<std::string> header{"k",         "sweeps",          "converged",
                                  "jump_flagged", "objective",    "surrogate_count",
                                  "max_abs_grad"};
  for (std::size_t jcoord = 0; jcoord < q; ++jcoord) {
    header.push_back("theta_" + std::to_string(jcoord));
  }
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const PathCsvRow& row : rows) {
    std::vector<std::string> line{csv::format_double(row.k),
                                  std::to_string(row.sweeps),
                                  row.converged ? "1" : "0",
                                  row.jump_flagged ? "1" : "0",
                                  csv::format_double(row.objective),
                                  csv::format_double(row.surrogate_count),
                                  csv::format_double(row.max_abs_grad)};
    for (double t : row.theta) line.push_back(csv::format_double(t));
    cells.push_back(std::move(line));
  }
  csv::write_table(path, header, cells);
}

/// Reads a path CSV back; round-trips the written rows exactly.
inline std::vector<PathCsvRow> read_path_csv(const std::string& path) {
  const csv::Table table = csv::read_table(path);
  constexpr std::size_t kFixed = 7;
  if (table.header.size() < kFixed + 1) {
    throw csv::CsvError(path, 1, "not a path CSV: too few columns");
  }
  const std::size_t q = table.header.size() - kFixed;
  std::vector<PathCsvRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t line = r + 2;
    PathCsvRow row;
    row.k = csv::parse_double(cells[0], path, line);
    row.sweeps = static_cast<int>(csv::parse_double(cells[1], path, line));
    row.converged = cells[2] == "1";
    row.jump_flagged = cells[3] == "1";
    row.objective = csv::parse_double(cells[4], path, line);
    row.surrogate_count = csv::parse_double(cells[5], path, line);
    row.max_abs_grad = csv::parse_double(cells[6], path, line);
    row.theta.resize(q);
    for (std::size_t jcoord = 0; jcoord < q; ++jcoord) {
      row.theta[jcoord] = csv::parse_double(cells[kFixed + jcoord], path, line);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Mode runners
// ---------------------------------------------------------------------------

namespace detail {

inline LinearRegressionModel make_regression_model(const RunConfig& cfg,
                                                   const RegressionData& data) {
  try {
    if (cfg.sigma2) return LinearRegressionModel(data.X, data.y, *cfg.sigma2);
    return LinearRegressionModel(data.X, data.y);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

inline GaussianMeansModel make_means_model(const RunConfig& cfg, std::vector<double> column) {
  try {
    if (cfg.sigma) return GaussianMeansModel(std::move(column), *cfg.sigma);
    return GaussianMeansModel(std::move(column));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

inline std::vector<double> resolve_regression_seed(const SeedSpec& seed,
                                                   const LinearRegressionModel& model) {
  if (!seed.named) {
    if (seed.values.size() != model.param_count()) {
      throw ConfigError("seed vector length " + std::to_string(seed.values.size()) +
                        " does not match parameter count " + std::to_string(model.param_count()));
    }
    return seed.values;
  }
  if (seed.label == "zero") return std::vector<double>(model.param_count(), 0.0);
  if (seed.label == "ols") return model.ols();
  throw ConfigError("seed '" + seed.label + "' is not valid for regression modes");
}

inline std::vector<double> resolve_means_seed(const SeedSpec& seed,
                                              const std::vector<double>& column) {
  if (!seed.named) {
    if (seed.values.size() != column.size()) {
      throw ConfigError("seed vector length " + std::to_string(seed.values.size()) +
                        " does not match observation count " + std::to_string(column.size()));
    }
    return seed.values;
  }
  if (seed.label == "zero") return std::vector<double>(column.size(), 0.0);
  if (seed.label == "saturated") return column;
  throw ConfigError("seed '" + seed.label + "' is not valid for means modes");
}

inline ordered_json schedule_json(const ContinuationSchedule& sched) {
  ordered_json out;
  out["k0"] = sched.k0;
  out["ratio"] = sched.ratio;
  out["k_max"] = sched.k_max;
  out["inner_tol"] = sched.inner_tol;
  out["inner_max_iter"] = sched.inner_max_iter;
  out["series_order"] = sched.series_order;
  return out;
}

inline ordered_json objective_json(const RunConfig& cfg, double c_n) {
  ordered_json out;
  out["preset"] = cfg.objective;
  out["ic_weight"] = c_n;
  return out;
}

}  // namespace detail

inline void run_select(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const RegressionData data = load_regression(cfg);
  const std::size_t n = static_cast<std::size_t>(data.y.size());
  const LinearRegressionModel model = detail::make_regression_model(cfg, data);
  const double c_n = detail::resolve_objective_weight(cfg, n);
  const double sigma_scale =
      detail::sample_sd(std::span<const double>(data.y.data(), static_cast<std::size_t>(data.y.size())));
  const ContinuationSchedule sched = detail::build_schedule(cfg, sigma_scale);
  const double snap_tol = detail::resolve_snap_tol(cfg, sigma_scale);

  PenaltySpec penalty;
  penalty.mode = PenaltyMode::ZeroPenalty;
  penalty.family = cfg.family;
  penalty.ic_weight = c_n;
  penalty.penalized = detail::build_penalized_mask(cfg, data);

  std::vector<SeedSpec> seeds = cfg.seeds;
  if (seeds.empty()) {
    seeds.push_back(SeedSpec{true, "ols", {}});
    seeds.push_back(SeedSpec{true, "zero", {}});
  }

  ordered_json summary;
  summary["mode"] = "select";
  {
    ordered_json dj;
    dj["source"] = data.source;
    dj["n"] = n;
    dj["response"] = cfg.response;
    dj["coordinates"] = data.coord_names;
    if (data.synthetic_seed) dj["synthetic_seed"] = *data.synthetic_seed;
    summary["data"] = std::move(dj);
  }
  summary["objective"] = detail::objective_json(cfg, c_n);
  summary["smoother"] = std::string(family_name(cfg.family));
  summary["schedule"] = detail::schedule_json(sched);
  summary["snap_tol"] = snap_tol;
  summary["sigma_scale"] = sigma_scale;
  {
    std::vector<std::string> pen_names;
    for (std::size_t jcoord : penalty.penalized) pen_names.push_back(data.coord_names[jcoord]);
    summary["penalized"] = pen_names;
  }

  bool all_converged = true;
  double best_ic = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best_run;
  ordered_json runs = ordered_json::array();
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const std::vector<double> seed_theta = detail::resolve_regression_seed(seeds[s], model);
    const SolutionPath path = continuation_solve(model, penalty, sched, seed_theta, snap_tol);
    const std::string file = "path_seed" + std::to_string(s) + ".csv";
    write_path_csv((out_dir / file).string(), path_rows(path), model.param_count());

    ordered_json entry;
    entry["seed"] = seeds[s].echo();
    entry["path_file"] = file;
    entry["aborted"] = path.aborted;
    if (path.aborted) entry["abort_reason"] = path.abort_reason;
    const bool converged = !path.aborted && !path.records.empty() && path.records.back().converged;
    entry["converged"] = converged;
    entry["records"] = path.records.size();
    std::size_t jumps = 0;
    for (const PathRecord& rec : path.records) jumps += rec.jump_flagged ? 1 : 0;
    entry["jump_flags"] = jumps;
    if (!path.aborted) {
      entry["terminal_support"] = detail::support_string(path.terminal_pattern.support);
      std::vector<std::string> kept;
      for (std::size_t jcoord = 0; jcoord < path.terminal_pattern.support.size(); ++jcoord) {
        if (path.terminal_pattern.support[jcoord]) kept.push_back(data.coord_names[jcoord]);
      }
      entry["support_coordinates"] = kept;
      entry["param_count"] = path.terminal_pattern.param_count();
      entry["polished_theta"] = path.polished_theta;
      entry["polished_ic"] = path.polished_ic;
      if (std::isfinite(path.polished_ic) && path.polished_ic < best_ic) {
        best_ic = path.polished_ic;
        best_run = s;
      }
    }
    all_converged = all_converged && converged;
    runs.push_back(std::move(entry));
  }
  summary["runs"] = std::move(runs);
  summary["converged"] = all_converged;
  if (best_run) summary["best_run"] = *best_run;
  detail::write_json_file(out_dir / "summary.json", summary);
}

inline void run_cluster(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const ColumnData data = load_columns(cfg);
  const std::size_t n = data.row_count();
  const std::size_t dims = data.columns.size();
  const double c_n = detail::resolve_objective_weight(cfg, n);

  std::vector<SeedSpec> seeds = cfg.seeds;
  if (seeds.empty()) seeds.push_back(SeedSpec{true, "saturated", {}});

  ordered_json summary;
  summary["mode"] = "cluster";
  {
    ordered_json dj;
    dj["source"] = data.source;
    dj["n"] = n;
    dj["columns"] = data.names;
    if (data.synthetic_seed) dj["synthetic_seed"] = *data.synthetic_seed;
    summary["data"] = std::move(dj);
  }
  summary["objective"] = detail::objective_json(cfg, c_n);
  summary["smoother"] = std::string(family_name(cfg.family));

  std::vector<std::vector<int>> coordinate_labels;
  bool all_converged = true;
  ordered_json coords = ordered_json::array();
  for (std::size_t c = 0; c < dims; ++c) {
    const std::vector<double>& column = data.columns[c];
    const GaussianMeansModel model = detail::make_means_model(cfg, column);
    const double sigma_scale = detail::sample_sd(column);
    const ContinuationSchedule sched = detail::build_schedule(cfg, sigma_scale);
    const double snap_tol = detail::resolve_snap_tol(cfg, sigma_scale);

    PenaltySpec penalty;
    penalty.mode = PenaltyMode::FusionPenalty;
    penalty.family = cfg.family;
    penalty.ic_weight = c_n;

    ordered_json coord;
    coord["name"] = data.names[c];
    coord["sigma_scale"] = sigma_scale;
    coord["schedule"] = detail::schedule_json(sched);
    coord["snap_tol"] = snap_tol;

    double best_ic = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> best_run;
    std::vector<SolutionPath> paths;
    ordered_json runs = ordered_json::array();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const std::vector<double> seed_theta = detail::resolve_means_seed(seeds[s], column);
      SolutionPath path = continuation_solve(model, penalty, sched, seed_theta, snap_tol);
      const std::string file =
          "path_coord" + std::to_string(c) + "_seed" + std::to_string(s) + ".csv";
      write_path_csv((out_dir / file).string(), path_rows(path), n);

      ordered_json entry;
      entry["seed"] = seeds[s].echo();
      entry["path_file"] = file;
      entry["aborted"] = path.aborted;
      if (path.aborted) entry["abort_reason"] = path.abort_reason;
      const bool converged = !path.aborted && !path.records.empty() && path.records.back().converged;
      entry["converged"] = converged;
      entry["records"] = path.records.size();
      if (!path.aborted) {
        entry["group_count"] = path.terminal_pattern.param_count();
        entry["polished_ic"] = path.polished_ic;
        if (std::isfinite(path.polished_ic) && path.polished_ic < best_ic) {
          best_ic = path.polished_ic;
          best_run = s;
        }
      }
      runs.push_back(std::move(entry));
      paths.push_back(std::move(path));
    }
    coord["runs"] = std::move(runs);
    if (!best_run) {
      throw DataError("coordinate '" + data.names[c] + "': no seed produced a usable path");
    }
    coord["best_run"] = *best_run;
    const SolutionPath& best = paths[*best_run];
    const bool converged = !best.records.empty() && best.records.back().converged;
    all_converged = all_converged && converged;
    coord["group_count"] = best.terminal_pattern.param_count();
    coord["labels"] = detail::labels_string(best.terminal_pattern.group_labels);
    coordinate_labels.push_back(best.terminal_pattern.group_labels);
    coords.push_back(std::move(coord));
  }
  summary["coordinates"] = std::move(coords);

  const ClusterAssignment assignment = extract_clusters(coordinate_labels);
  {
    std::vector<std::string> header{"observation"};
    for (const std::string& name : data.names) header.push_back(name + "_label");
    header.push_back("merged_label");
    header.push_back("split_flag");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (std::size_t c = 0; c < dims; ++c) {
        row.push_back(std::to_string(assignment.per_coordinate_labels[c][i]));
      }
      row.push_back(std::to_string(assignment.merged_labels[i]));
      row.push_back(assignment.split_flags[i] ? "1" : "0");
      rows.push_back(std::move(row));
    }
    csv::write_table((out_dir / "clusters.csv").string(), header, rows);
  }

  std::vector<std::size_t> group_sizes(assignment.group_count(), 0);
  for (int label : assignment.merged_labels) ++group_sizes[static_cast<std::size_t>(label)];
  std::size_t multi_member = 0, covered = 0, splits = 0;
  for (std::size_t size : group_sizes) {
    if (size >= 2) {
      ++multi_member;
      covered += size;
    }
  }
  for (bool flag : assignment.split_flags) splits += flag ? 1 : 0;

  ordered_json merged;
  merged["group_count"] = assignment.group_count();
  merged["multi_member_groups"] = multi_member;
  merged["multi_member_coverage"] = static_cast<double>(covered) / static_cast<double>(n);
  merged["split_count"] = splits;
  summary["merged"] = std::move(merged);
  summary["converged"] = all_converged;
  detail::write_json_file(out_dir / "summary.json", summary);
}

inline void run_oracle_subset(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const RegressionData data = load_regression(cfg);
  const std::size_t n = static_cast<std::size_t>(data.y.size());
  const LinearRegressionModel model = detail::make_regression_model(cfg, data);
  const double c_n = detail::resolve_objective_weight(cfg, n);
  const std::vector<std::size_t> selectable = detail::build_penalized_mask(cfg, data);

  SubsetSearchResult result;
  try {
    result = exhaustive_subset_ic(model, c_n, selectable);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }

  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.table.size());
  for (const SubsetEntry& entry : result.table) {
    rows.push_back({detail::support_string(entry.pattern), std::to_string(entry.param_count),
                    csv::format_double(entry.ic)});
  }
  csv::write_table((out_dir / "oracle_subset.csv").string(), {"pattern", "param_count", "ic"},
                   rows);

  ordered_json summary;
  summary["mode"] = "oracle-subset";
  {
    ordered_json dj;
    dj["source"] = data.source;
    dj["n"] = n;
    dj["response"] = cfg.response;
    dj["coordinates"] = data.coord_names;
    if (data.synthetic_seed) dj["synthetic_seed"] = *data.synthetic_seed;
    summary["data"] = std::move(dj);
  }
  summary["objective"] = detail::objective_json(cfg, c_n);
  {
    std::vector<std::string> pen_names;
    for (std::size_t jcoord : selectable) pen_names.push_back(data.coord_names[jcoord]);
    summary["selectable"] = pen_names;
  }
  summary["candidates"] = result.table.size();
  ordered_json best;
  best["pattern"] = detail::support_string(result.best.pattern);
  best["param_count"] = result.best.param_count;
  best["ic"] = result.best.ic;
  {
    std::vector<std::size_t> support;
    for (std::size_t jcoord = 0; jcoord < result.best.pattern.size(); ++jcoord) {
      if (result.best.pattern[jcoord]) support.push_back(jcoord);
    }
    best["theta"] = model.refit(support);
  }
  summary["best"] = std::move(best);
  detail::write_json_file(out_dir / "summary.json", summary);
}

inline void run_oracle_partition(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const ColumnData data = load_columns(cfg);
  std::size_t col = 0;
  if (!cfg.column.empty()) {
    const auto it = std::find(data.names.begin(), data.names.end(), cfg.column);
    if (it == data.names.end()) {
      throw DataError(data.source + ": column '" + cfg.column + "' not found");
    }
    col = static_cast<std::size_t>(it - data.names.begin());
  }
  const std::vector<double>& column = data.columns[col];
  const std::size_t n = column.size();
  const GaussianMeansModel model = detail::make_means_model(cfg, column);
  const double c_n = detail::resolve_objective_weight(cfg, n);

  std::vector<std::vector<std::string>> rows;
  PartitionSearchResult result;
  try {
    bool first = true;
    for_each_partition_ic(model, c_n,
                          [&](const std::vector<int>& labels, std::size_t groups, double ic) {
                            rows.push_back({detail::labels_string(labels), std::to_string(groups),
                                            csv::format_double(ic)});
                            PartitionEntry entry{labels, groups, ic};
                            if (first || smoothic::detail::partition_better(entry, result.best)) {
                              result.best = std::move(entry);
                              first = false;
                            }
                            ++result.partitions_evaluated;
                          });
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  csv::write_table((out_dir / "oracle_partition.csv").string(), {"labels", "group_count", "ic"},
                   rows);

  ordered_json summary;
  summary["mode"] = "oracle-partition";
  {
    ordered_json dj;
    dj["source"] = data.source;
    dj["n"] = n;
    dj["column"] = data.names[col];
    if (data.synthetic_seed) dj["synthetic_seed"] = *data.synthetic_seed;
    summary["data"] = std::move(dj);
  }
  summary["objective"] = detail::objective_json(cfg, c_n);
  summary["partitions_evaluated"] = result.partitions_evaluated;
  ordered_json best;
  best["labels"] = detail::labels_string(result.best.labels);
  best["group_count"] = result.best.group_count;
  best["ic"] = result.best.ic;
  best["theta"] = model.refit(smoothic::detail::groups_from_labels(result.best.labels));
  summary["best"] = std::move(best);
  detail::write_json_file(out_dir / "summary.json", summary);
}

inline void run_surface(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const RegressionData data = load_regression(cfg);
  const std::size_t n = static_cast<std::size_t>(data.y.size());
  const LinearRegressionModel model = detail::make_regression_model(cfg, data);
  const double c_n = detail::resolve_objective_weight(cfg, n);
  const std::size_t q = model.param_count();

  PenaltySpec penalty;
  penalty.mode = PenaltyMode::ZeroPenalty;
  penalty.family = cfg.family;
  penalty.ic_weight = c_n;
  penalty.penalized = detail::build_penalized_mask(cfg, data);

  const GridSpec& grid = *cfg.grid;
  std::size_t coord = 0;
  if (grid.coordinate_name) {
    const auto it = std::find(data.coord_names.begin(), data.coord_names.end(),
                              *grid.coordinate_name);
    if (it == data.coord_names.end()) {
      throw ConfigError("grid coordinate '" + *grid.coordinate_name + "' not found in data");
    }
    coord = static_cast<std::size_t>(it - data.coord_names.begin());
  } else if (grid.coordinate_index) {
    if (*grid.coordinate_index >= q) {
      throw ConfigError("grid coordinate index out of range");
    }
    coord = *grid.coordinate_index;
  } else {
    coord = penalty.penalized.empty() ? 0 : penalty.penalized.front();
  }

  std::vector<double> base(q, 0.0);
  std::string base_echo;
  if (cfg.base.is_string()) {
    base_echo = cfg.base.get<std::string>();
    if (base_echo == "ols") base = model.ols();
    // "zero" keeps the zero vector
  } else {
    if (cfg.base.size() != q) {
      throw ConfigError("key 'base' must have one entry per parameter");
    }
    for (std::size_t jcoord = 0; jcoord < q; ++jcoord) {
      base[jcoord] = detail::as_finite_number(cfg.base.at(jcoord), "base");
    }
    base_echo = "explicit";
  }

  std::vector<std::vector<std::string>> rows;
  rows.reserve(cfg.k_list.size() * grid.points);
  for (double k : cfg.k_list) {
    const SurrogateObjective<LinearRegressionModel> objective(model, penalty, k);
    std::vector<double> theta = base;
    for (std::size_t g = 0; g < grid.points; ++g) {
      const double t = grid.min + (grid.max - grid.min) * static_cast<double>(g) /
                                      static_cast<double>(grid.points - 1);
      theta[coord] = t;
      double value = std::numeric_limits<double>::quiet_NaN();
      try {
        value = objective.value(theta);
      } catch (const EvaluationError& e) {
        throw DataError(std::string("surface evaluation failed: ") + e.what());
      }
      rows.push_back({csv::format_double(k), csv::format_double(t), csv::format_double(value)});
    }
  }
  csv::write_table((out_dir / "surface.csv").string(), {"k", "theta", "surrogate_ic"}, rows);

  ordered_json summary;
  summary["mode"] = "surface";
  {
    ordered_json dj;
    dj["source"] = data.source;
    dj["n"] = n;
    dj["response"] = cfg.response;
    dj["coordinates"] = data.coord_names;
    if (data.synthetic_seed) dj["synthetic_seed"] = *data.synthetic_seed;
    summary["data"] = std::move(dj);
  }
  summary["objective"] = detail::objective_json(cfg, c_n);
  summary["smoother"] = std::string(family_name(cfg.family));
  summary["coordinate"] = data.coord_names[coord];
  summary["base"] = base_echo;
  summary["k_list"] = cfg.k_list;
  summary["points"] = grid.points;
  summary["min"] = grid.min;
  summary["max"] = grid.max;
  detail::write_json_file(out_dir / "summary.json", summary);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Runs one configured job, writing outputs under `out_dir`. Returns the
/// process exit code; errors are reported on stderr.
inline int execute(const json& config, const std::string& out_dir) {
  try {
    const RunConfig cfg = parse_config(config);
    std::filesystem::path out(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
      std::cerr << "data error: cannot create output directory '" << out_dir
                << "': " << ec.message() << '\n';
      return kExitData;
    }
    if (cfg.mode == "select") {
      run_select(cfg, out);
    } else if (cfg.mode == "cluster") {
      run_cluster(cfg, out);
    } else if (cfg.mode == "oracle-subset") {
      run_oracle_subset(cfg, out);
    } else if (cfg.mode == "oracle-partition") {
      run_oracle_partition(cfg, out);
    } else {
      run_surface(cfg, out);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const csv::CsvError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace smoothic::run
