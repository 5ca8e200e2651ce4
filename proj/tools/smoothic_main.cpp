#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "smoothic/run.hpp"

namespace {

// Comma-separated numbers or a seed name ("ols", "zero", "saturated").
nlohmann::json parse_seed_flag(const std::string& text) {
  if (text == "ols" || text == "zero" || text == "saturated") return text;
  nlohmann::json values = nlohmann::json::array();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string field = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      std::size_t consumed = 0;
      const double v = std::stod(field, &consumed);
      if (consumed != field.size()) throw std::invalid_argument(field);
      values.push_back(v);
    } catch (const std::exception&) {
      throw smoothic::run::ConfigError("--seed: cannot parse '" + field + "' as a number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothed information-criterion model selection"};
  app.get_formatter()->column_width(28);

  std::string config_path, out_dir;
  std::string mode, data, response, objective, smoother, column;
  double k0 = 0, ratio = 0, k_max = 0, inner_tol = 0, snap_tol = 0, sigma2 = 0, sigma = 0;
  int inner_max_iter = 0, order = 0;
  bool no_intercept = false;
  std::vector<std::string> seed_flags, penalized;
  std::vector<double> k_list;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory")->required();
  auto* opt_mode = app.add_option("--mode", mode,
                                  "select|cluster|oracle-subset|oracle-partition|surface");
  auto* opt_data = app.add_option("--data", data, "input CSV file");
  auto* opt_response = app.add_option("--response", response, "response column name");
  auto* opt_objective = app.add_option("--objective", objective, "aic|bic|gic:<c>");
  auto* opt_smoother = app.add_option("--smoother", smoother, "sech|gaussian|rational");
  auto* opt_column = app.add_option("--column", column, "column for oracle-partition");
  auto* opt_k0 = app.add_option("--k0", k0, "initial sharpness");
  auto* opt_ratio = app.add_option("--ratio", ratio, "sharpness growth ratio");
  auto* opt_kmax = app.add_option("--k-max", k_max, "final sharpness");
  auto* opt_inner_tol = app.add_option("--inner-tol", inner_tol, "inner gradient tolerance");
  auto* opt_inner_iter = app.add_option("--inner-max-iter", inner_max_iter,
                                        "inner iteration cap");
  auto* opt_order = app.add_option("--order", order, "series step order");
  auto* opt_snap = app.add_option("--snap-tol", snap_tol, "terminal snap tolerance");
  auto* opt_sigma2 = app.add_option("--sigma2", sigma2, "regression noise variance");
  auto* opt_sigma = app.add_option("--sigma", sigma, "means-model noise sd");
  auto* opt_no_intercept = app.add_flag("--no-intercept", no_intercept,
                                        "do not prepend an intercept column");
  auto* opt_seeds = app.add_option("--seed", seed_flags,
                                   "seed name or comma-separated vector (repeatable)");
  auto* opt_penalized = app.add_option("--penalized", penalized,
                                       "penalized column names (repeatable)");
  auto* opt_klist = app.add_option("--k-list", k_list, "surface sharpness values (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : smoothic::run::kExitConfig;
  }

  try {
    nlohmann::json config = nlohmann::json::object();
    if (!config_path.empty()) config = smoothic::run::load_config_file(config_path);
    if (!config.is_object()) {
      throw smoothic::run::ConfigError(config_path + ": config root must be a JSON object");
    }

    if (*opt_mode) config["mode"] = mode;
    if (*opt_data) {
      config["data"] = data;
      config.erase("synthetic");
    }
    if (*opt_response) config["response"] = response;
    if (*opt_objective) config["objective"] = objective;
    if (*opt_smoother) config["smoother"] = smoother;
    if (*opt_column) config["column"] = column;
    if (*opt_k0) config["k0"] = k0;
    if (*opt_ratio) config["ratio"] = ratio;
    if (*opt_kmax) config["k_max"] = k_max;
    if (*opt_inner_tol) config["inner_tol"] = inner_tol;
    if (*opt_inner_iter) config["inner_max_iter"] = inner_max_iter;
    if (*opt_order) config["order"] = order;
    if (*opt_snap) config["snap_tol"] = snap_tol;
    if (*opt_sigma2) config["sigma2"] = sigma2;
    if (*opt_sigma) config["sigma"] = sigma;
    if (*opt_no_intercept) config["intercept"] = false;
    if (*opt_seeds) {
      nlohmann::json seeds = nlohmann::json::array();
      for (const std::string& flag : seed_flags) seeds.push_back(parse_seed_flag(flag));
      config["seeds"] = seeds;
    }
    if (*opt_penalized) config["penalized"] = penalized;
    if (*opt_klist) config["k_list"] = k_list;

    return smoothic::run::execute(config, out_dir);
  } catch (const smoothic::run::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return smoothic::run::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return smoothic::run::kExitInternal;
  }
}
