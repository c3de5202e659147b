#include "htc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <charconv>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "htc/data.hpp"
#include "htc/error.hpp"
#include "htc/gaopt.hpp"
#include "htc/pipeline.hpp"
#include "htc/shapley.hpp"
#include "htc/stats.hpp"
#include "htc/version.hpp"
#include "json.hpp"

namespace htc::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string data;
  std::string out = "out";
  std::uint64_t seed = 42;
  std::string model = "both";
  std::string grid;
  std::string application = "energy";
  std::size_t background = kDefaultBackgroundSize;

  // explain
  std::string target;
  std::size_t rows = 100;
  // optimize
  std::string profile;
  std::size_t population = 1000;
  std::size_t generations = 200;
  // synth
  std::size_t n = 500;
  double noise = 0.0;

  fs::path data_path;
  fs::path out_path;
  fs::path grid_path;
  fs::path profile_path;
};

std::string provenance(const RunConfig& cfg) {
  return "schema_version=" + std::to_string(kSchemaVersion) + " seed=" + std::to_string(cfg.seed) +
         " tool_version=" + kToolVersion;
}

json stamped(const RunConfig& cfg, json body) {
  json j = {{"schema_version", kSchemaVersion}, {"tool_version", kToolVersion}, {"seed", cfg.seed}};
  for (auto& [k, v] : body.items()) {
    if (!j.contains(k)) j[k] = v;
  }
  return j;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
  if (!f) fail(ErrorCode::io, "failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::invalid_argument, path.string() + " is not valid JSON: " + e.what());
  }
}

std::string csv_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

const Dataset& require_data(const RunConfig& cfg, std::optional<LoadResult>& cache) {
  if (cfg.data.empty()) fail(ErrorCode::invalid_argument, "--data is required for this command");
  if (!cache) cache = load_csv(cfg.data_path);
  return cache->dataset;
}

fs::path models_dir(const RunConfig& cfg) { return cfg.out_path / "models"; }

fs::path model_file(const RunConfig& cfg, ModelKind kind, Target target) {
  return models_dir(cfg) / (std::string(to_string(kind)) + "_" + std::string(name(target)) + ".json");
}

std::optional<TrainedTarget> try_load_model(const RunConfig& cfg, ModelKind kind, Target target) {
  const auto path = model_file(cfg, kind, target);
  if (!fs::exists(path)) return std::nullopt;
  try {
    return trained_target_from_json(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, path.string() + ": " + e.what());
  }
}

TrainedTarget load_model(const RunConfig& cfg, ModelKind kind, Target target) {
  auto m = try_load_model(cfg, kind, target);
  if (!m) fail(ErrorCode::missing_model_file, "no model file " + model_file(cfg, kind, target).string());
  return std::move(*m);
}

// Families a command acts on; `both` means both for train/evaluate and dtr
// for the single-model commands.
std::vector<ModelKind> kinds(const RunConfig& cfg) {
  switch (model_selection_from_string(cfg.model)) {
    case ModelSelection::dtr: return {ModelKind::dtr};
    case ModelSelection::svr: return {ModelKind::svr};
    case ModelSelection::both: break;
  }
  return {ModelKind::dtr, ModelKind::svr};
}

ModelKind single_kind(const RunConfig& cfg) {
  return model_selection_from_string(cfg.model) == ModelSelection::svr ? ModelKind::svr : ModelKind::dtr;
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  std::optional<LoadResult> loaded;
  const Dataset& ds = require_data(cfg, loaded);
  out << "n_rows: " << ds.size() << '\n';
  out << "missing values per column:\n";
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    std::size_t missing = 0;
    for (std::size_t r = 0; r < ds.size(); ++r) missing += ds.cell(r, c) ? 0 : 1;
    out << "  " << column_name(c) << ": " << missing << '\n';
  }
  out << "warnings: " << loaded->warnings.size() << '\n';
  for (const auto& w : loaded->warnings) {
    out << "  row " << w.row << ", " << w.column << " = " << csv_number(w.value) << ": " << w.message << '\n';
  }
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  std::optional<LoadResult> loaded;
  const Dataset& ds = require_data(cfg, loaded);
  const std::string prov = provenance(cfg);

  const CorrelationMatrix corr = correlation_matrix(ds);
  {
    auto f = open_out(cfg.out_path / "correlation_matrix.csv");
    f << "# " << prov << '\n';
    write_csv(corr, f);
  }
  write_json(cfg.out_path / "correlation_matrix.json", stamped(cfg, to_json(corr)));

  // All 21 variables on complete rows; sparse data falls back to the inputs
  // that vary, and a dataset with fewer than two of those gets a note only.
  std::vector<std::size_t> columns(kColumnCount);
  std::iota(columns.begin(), columns.end(), 0);
  json factors;
  try {
    factors = to_json(factor_analysis(ds, columns));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::too_few_rows && e.code() != ErrorCode::singular_input) throw;
    const std::string why = e.what();
    columns.clear();
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const double first = *ds.cell(0, c);
      for (std::size_t r = 1; r < ds.size(); ++r) {
        if (*ds.cell(r, c) != first) {
          columns.push_back(c);
          break;
        }
      }
    }
    try {
      factors = to_json(factor_analysis(ds, columns));
      factors["note"] = "fell back to varying input features: " + why;
    } catch (const Error& inner) {
      if (inner.code() != ErrorCode::too_few_rows && inner.code() != ErrorCode::singular_input &&
          inner.code() != ErrorCode::invalid_argument)
        throw;
      factors = json{{"note", "factor analysis not possible: " + std::string(inner.what())}};
    }
  }
  write_json(cfg.out_path / "factors.json", stamped(cfg, factors));

  bool any_hydrochar = false;
  for (const auto& row : ds.rows()) {
    any_hydrochar = any_hydrochar || (row.targets[Target::hc_c] && row.targets[Target::hc_h] && row.targets[Target::hc_o]);
  }
  {
    auto f = open_out(cfg.out_path / "van_krevelen.csv");
    f << "# " << prov << '\n';
    f << "row,biomass_h_c,biomass_o_c";
    if (any_hydrochar) f << ",hydrochar_h_c,hydrochar_o_c";
    f << '\n';
    for (std::size_t r = 0; r < ds.size(); ++r) {
      const auto& row = ds.row(r);
      f << r + 1 << ',';
      const auto& x = row.features;
      if (x[Feature::biomass_c] > 0.0) {
        const auto b = van_krevelen(x[Feature::biomass_c], x[Feature::biomass_h], x[Feature::biomass_o]);
        f << csv_number(b.h_over_c) << ',' << csv_number(b.o_over_c);
      } else {
        f << ',';
      }
      if (any_hydrochar) {
        const auto& y = row.targets;
        f << ',';
        if (y[Target::hc_c] && y[Target::hc_h] && y[Target::hc_o] && *y[Target::hc_c] > 0.0) {
          const auto h = van_krevelen(*y[Target::hc_c], *y[Target::hc_h], *y[Target::hc_o]);
          f << csv_number(h.h_over_c) << ',' << csv_number(h.o_over_c);
        } else {
          f << ',';
        }
      }
      f << '\n';
    }
  }
  out << "wrote correlation_matrix.csv, correlation_matrix.json, factors.json, van_krevelen.csv to "
      << cfg.out_path.string() << '\n';
  return kExitOk;
}

void print_metrics_table(std::ostream& out, const std::vector<TrainedTarget>& models) {
  out << std::left << std::setw(6) << "model" << std::setw(12) << "target" << std::right << std::setw(12)
      << "cv_rmse" << std::setw(10) << "train_r2" << std::setw(10) << "test_r2" << std::setw(12) << "test_rmse"
      << std::setw(12) << "test_mae" << '\n';
  for (const auto& m : models) {
    out << std::left << std::setw(6) << to_string(m.kind) << std::setw(12) << name(m.target) << std::right
        << std::setw(12) << fixed(m.cv_rmse) << std::setw(10) << fixed(m.train_metrics.r2) << std::setw(10)
        << fixed(m.test_metrics.r2) << std::setw(12) << fixed(m.test_metrics.rmse) << std::setw(12)
        << fixed(m.test_metrics.mae) << '\n';
  }
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  std::optional<LoadResult> loaded;
  const Dataset& ds = require_data(cfg, loaded);
  const ModelSelection selection = model_selection_from_string(cfg.model);
  HyperGrid grid = HyperGrid::defaults();
  if (!cfg.grid.empty()) {
    try {
      grid = hyper_grid_from_json(read_json(cfg.grid_path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::invalid_argument, "malformed grid file: " + std::string(e.what()));
    }
  }
  grid.validate(selection);

  const EvaluationReport report = train_all(ds, grid, cfg.seed, selection);
  fs::create_directories(models_dir(cfg));
  write_json(cfg.out_path / "report.json", to_json(report));
  for (const auto& m : report.models) write_json(model_file(cfg, m.kind, m.target), stamped(cfg, to_json(m)));

  // Gene bounds for the optimizer: training-split min/max.
  std::vector<std::size_t> train_rows;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (!std::binary_search(report.test_indices.begin(), report.test_indices.end(), r)) train_rows.push_back(r);
  }
  if (!train_rows.empty()) {
    const Matrix x = ds.feature_matrix(train_rows);
    json bounds = json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto col = x.column(f);
      bounds[std::string(kFeatureNames[f])] = {*std::min_element(col.begin(), col.end()),
                                                *std::max_element(col.begin(), col.end())};
    }
    write_json(cfg.out_path / "bounds.json", stamped(cfg, json{{"bounds", bounds}}));
  }

  print_metrics_table(out, report.models);
  for (const auto& s : report.skipped) {
    out << "skipped " << to_string(s.kind) << ' ' << name(s.target) << ": " << s.reason << '\n';
  }
  if (report.models.empty()) fail(ErrorCode::too_few_rows, "no target could be trained");
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  std::optional<LoadResult> loaded;
  const Dataset& ds = require_data(cfg, loaded);
  json j = {{"dataset_fingerprint", fingerprint(ds)}, {"n_rows", ds.size()}};
  json skipped = json::array();
  std::size_t evaluated = 0;
  out << std::left << std::setw(6) << "model" << std::setw(12) << "target" << std::right << std::setw(8) << "n"
      << std::setw(10) << "r2" << std::setw(12) << "rmse" << std::setw(12) << "mae" << '\n';
  for (ModelKind kind : kinds(cfg)) {
    json section = json::object();
    for (std::size_t t = 0; t < kTargetCount; ++t) {
      const Target target = static_cast<Target>(t);
      auto model = try_load_model(cfg, kind, target);
      if (!model) {
        skipped.push_back({{"model", to_string(kind)}, {"target", name(target)}, {"reason", "no model file"}});
        continue;
      }
      const auto rows = ds.rows_with(target);
      try {
        const MetricsReport m = evaluate(*model, ds.feature_matrix(rows), ds.target_values(target, rows));
        section[std::string(name(target))] = to_json(m);
        ++evaluated;
        out << std::left << std::setw(6) << to_string(kind) << std::setw(12) << name(target) << std::right
            << std::setw(8) << m.n << std::setw(10) << fixed(m.r2) << std::setw(12) << fixed(m.rmse)
            << std::setw(12) << fixed(m.mae) << '\n';
      } catch (const Error& e) {
        skipped.push_back({{"model", to_string(kind)}, {"target", name(target)}, {"reason", e.what()}});
      }
    }
    j[std::string(to_string(kind))] = std::move(section);
  }
  j["skipped"] = std::move(skipped);
  write_json(cfg.out_path / "evaluation.json", stamped(cfg, j));
  if (evaluated == 0) fail(ErrorCode::missing_model_file, "no model could be evaluated; run train first");
  return kExitOk;
}

int cmd_explain(const RunConfig& cfg, std::ostream& out) {
  const auto target = target_from_name(cfg.target);
  if (!target) fail(ErrorCode::invalid_argument, "unknown target '" + cfg.target + "'");
  const ModelKind kind = single_kind(cfg);
  const TrainedTarget model = load_model(cfg, kind, *target);
  std::optional<LoadResult> loaded;
  const Dataset& ds = require_data(cfg, loaded);
  require(cfg.background > 0 && cfg.rows > 0, ErrorCode::invalid_argument, "--background and --rows must be positive");

  // Background from the training split of `train`; tiny files use every row.
  const Matrix x = ds.feature_matrix();
  Matrix pool = x;
  if (ds.size() >= 6) pool = ds.feature_matrix(split(ds, cfg.seed).train_indices);
  const Matrix background = sample_background(pool, cfg.background, cfg.seed);
  const Matrix rows = sample_background(x, cfg.rows, cfg.seed + 1);
  const PredictFn f = [&model](std::span<const double> v) { return model.predict(v); };

  std::vector<ShapExplanation> explanations;
  explanations.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) explanations.push_back(explain(f, rows.row(r), background));
  const PlotTables tables = emit_plot_data(explanations);

  const fs::path dir = cfg.out_path / "explain" / (std::string(to_string(kind)) + "_" + std::string(name(*target)));
  fs::create_directories(dir);
  const std::vector<std::string> preamble = {provenance(cfg) + " model=" + std::string(to_string(kind)) +
                                             " target=" + std::string(name(*target))};
  const auto names = Dataset::feature_names();
  {
    auto s = open_out(dir / "beeswarm.csv");
    write_beeswarm_csv(tables, names, s, preamble);
  }
  {
    auto s = open_out(dir / "bar.csv");
    write_bar_csv(tables, names, s, preamble);
  }
  {
    auto s = open_out(dir / "heatmap.csv");
    write_heatmap_csv(tables, names, s, preamble);
  }
  {
    auto s = open_out(dir / "importance.svg");
    write_bar_svg(tables, names, "mean |SHAP| for " + std::string(name(*target)), s, preamble);
  }

  const GlobalImportance g = global_importance(explanations);
  out << "feature importance (mean |phi|) for " << to_string(kind) << ' ' << name(*target) << ":\n";
  for (std::size_t k : g.ranking) {
    out << "  " << std::left << std::setw(16) << names[k] << std::right << fixed(g.mean_abs_phi[k], 6) << '\n';
  }
  out << "wrote beeswarm.csv, bar.csv, heatmap.csv, importance.svg to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_optimize(const RunConfig& cfg, std::ostream& out) {
  ObjectiveProfile profile = cfg.profile.empty() ? ObjectiveProfile::by_name(cfg.application)
                                                 : objective_profile_from_json(read_json(cfg.profile_path));
  const ModelKind kind = single_kind(cfg);

  std::vector<TrainedTarget> models;
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    const Target target = static_cast<Target>(t);
    if (profile[target] != Direction::ignore) {
      models.push_back(load_model(cfg, kind, target));
    } else if (auto m = try_load_model(cfg, kind, target)) {
      models.push_back(std::move(*m));
    }
  }
  const SurrogateSet surrogates = surrogates_from(models, kind);

  GaConfig ga;
  ga.seed = cfg.seed;
  ga.population = cfg.population;
  ga.generations = cfg.generations;
  const fs::path bounds_path = cfg.out_path / "bounds.json";
  if (fs::exists(bounds_path)) {
    const json b = read_json(bounds_path).at("bounds");
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto& pair = b.at(std::string(kFeatureNames[f]));
      ga.lower.push_back(pair.at(0).get<double>());
      ga.upper.push_back(pair.at(1).get<double>());
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!(ga.lower[f] < ga.upper[f])) {
        const double pad = 1e-6 * std::max(1.0, std::abs(ga.lower[f]));
        ga.lower[f] -= pad;
        ga.upper[f] += pad;
      }
    }
  } else {
    std::optional<LoadResult> loaded;
    set_bounds_from_data(ga, require_data(cfg, loaded).feature_matrix());
  }

  OptimizationReport report{profile, ga, optimize(surrogates, profile, ga)};
  json j = to_json(report);
  j["model_kind"] = to_string(kind);
  write_json(cfg.out_path / "optimum.json", j);
  out << format_table(report);
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  require(cfg.n >= 1, ErrorCode::invalid_argument, "--n must be at least 1");
  require(cfg.noise >= 0.0, ErrorCode::invalid_argument, "--noise must be non-negative");
  const Dataset ds = generate_synthetic(cfg.n, cfg.seed, cfg.noise);
  const fs::path path = cfg.out_path.extension() == ".csv" ? cfg.out_path : cfg.out_path / "synthetic.csv";
  write_csv(ds, path);
  out << "wrote " << ds.size() << " rows to " << path.string() << '\n';
  return kExitOk;
}

void resolve_paths(RunConfig& cfg, const std::string& command) {
  if (!cfg.data.empty()) cfg.data_path = fs::absolute(cfg.data);
  if (!cfg.grid.empty()) cfg.grid_path = fs::absolute(cfg.grid);
  if (!cfg.profile.empty()) cfg.profile_path = fs::absolute(cfg.profile);
  cfg.out_path = fs::absolute(cfg.out);
  if (command == "validate") return;
  const fs::path dir = command == "synth" && cfg.out_path.extension() == ".csv" ? cfg.out_path.parent_path()
                                                                                : cfg.out_path;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Surrogate modelling and optimisation for hydrothermal carbonisation data", "htc"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);
  app.add_option("--data", cfg.data, "Dataset CSV in the canonical schema");
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--model", cfg.model, "Model family")
      ->check(CLI::IsMember({"dtr", "svr", "both"}))
      ->capture_default_str();
  app.add_option("--grid", cfg.grid, "Hyper-parameter grid JSON");
  app.add_option("--application", cfg.application, "Objective profile")
      ->check(CLI::IsMember({"energy", "soil", "adsorption"}))
      ->capture_default_str();
  app.add_option("--background", cfg.background, "Background rows for Shapley values")->capture_default_str();

  app.add_subcommand("validate", "Load a dataset and report missingness and range warnings");
  app.add_subcommand("stats", "Correlation matrix, factor analysis and van Krevelen ratios");
  app.add_subcommand("train", "Grid-search, fit and score every target");
  app.add_subcommand("evaluate", "Score saved models on a dataset");
  auto* explain_cmd = app.add_subcommand("explain", "Exact Shapley values for one saved model");
  explain_cmd->add_option("--target", cfg.target, "Target column, e.g. hc_yield")->required();
  explain_cmd->add_option("--rows", cfg.rows, "Rows to explain")->capture_default_str();
  auto* optimize_cmd = app.add_subcommand("optimize", "Genetic search for the best process inputs");
  optimize_cmd->add_option("--profile", cfg.profile, "JSON direction map overriding --application");
  optimize_cmd->add_option("--population", cfg.population, "GA population")->capture_default_str();
  optimize_cmd->add_option("--generations", cfg.generations, "GA generations")->capture_default_str();
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  synth_cmd->add_option("--n", cfg.n, "Rows")->capture_default_str();
  synth_cmd->add_option("--noise", cfg.noise, "Relative noise level")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    resolve_paths(cfg, command);
    if (command == "validate") return cmd_validate(cfg, out);
    if (command == "stats") return cmd_stats(cfg, out);
    if (command == "train") return cmd_train(cfg, out);
    if (command == "evaluate") return cmd_evaluate(cfg, out);
    if (command == "explain") return cmd_explain(cfg, out);
    if (command == "optimize") return cmd_optimize(cfg, out);
    if (command == "synth") return cmd_synth(cfg, out);
    err << "unknown command " << command << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitInput : kExitInternal;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace htc::cli
