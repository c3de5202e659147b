#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "htc/cart.hpp"
#include "htc/data.hpp"
#include "htc/stats.hpp"
#include "htc/svr.hpp"
#include "json.hpp"

namespace htc {

enum class ModelKind { dtr, svr };
enum class ModelSelection { dtr, svr, both };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view s);
ModelSelection model_selection_from_string(std::string_view s);

struct HyperGrid {
  std::vector<TreeParams> tree_grid;
  std::vector<SvrParams> svr_grid;

  // max_depth {4,6,8,10,12,16,none} x min_samples_leaf {1,2,5,10};
  // C {0.1,1,10,100} x epsilon {0.01,0.1,0.5} x {linear, rbf(0.05|0.1|0.5)}.
  static HyperGrid defaults();

  void validate(ModelSelection selection) const;
};

// {"dtr": [TreeParams...], "svr": [SvrParams...]}; a missing family keeps
// its default list.
HyperGrid hyper_grid_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const HyperGrid& grid);

struct CvResult {
  std::size_t chosen = 0;
  double cv_rmse = 0.0;
  std::vector<double> candidate_rmse;  // one mean-over-k-folds RMSE per candidate
};

// k-fold selection: rows are shuffled with `seed` and dealt round-robin into
// k folds. Every candidate is scored by the mean validation RMSE over the
// folds, refitting the input scaler on each fold's training part. The lowest
// mean wins; ties go to the earliest candidate. RMSE is on the original
// target scale.
CvResult grid_search(const Matrix& x, std::span<const double> y, std::span<const TreeParams> grid,
                     std::size_t k, std::uint64_t seed);
CvResult grid_search(const Matrix& x, std::span<const double> y, std::span<const SvrParams> grid,
                     std::size_t k, std::uint64_t seed);

struct TargetStats {
  double mean = 0.0;
  double std = 1.0;
};

// A fitted model for one response together with everything needed to
// apply it to raw (unscaled) feature vectors.
struct TrainedTarget {
  Target target = Target::yield;
  ModelKind kind = ModelKind::dtr;
  std::variant<RegressionTree, SvrModel> model;
  Scaler scaler_in;
  std::optional<Scaler> scaler_out;  // SVR targets are fitted standardized
  std::variant<TreeParams, SvrParams> chosen_params;
  double cv_rmse = 0.0;
  MetricsReport train_metrics;
  MetricsReport test_metrics;
  TargetStats target_stats;  // training targets, original units
  std::size_t n_train = 0;
  std::size_t n_test = 0;

  double predict(std::span<const double> raw_features) const;
};

// Fits one candidate on (x, y) in original units and returns the wrapped model.
TrainedTarget fit_target(Target target, const Matrix& x, std::span<const double> y,
                         const std::variant<TreeParams, SvrParams>& params, std::uint64_t seed);

MetricsReport evaluate(const TrainedTarget& model, const Matrix& x, std::span<const double> y);

nlohmann::ordered_json to_json(const TrainedTarget& t);
TrainedTarget trained_target_from_json(const nlohmann::ordered_json& j);

struct SkipRecord {
  ModelKind kind;
  Target target;
  std::string reason;
};

struct EvaluationReport {
  std::uint64_t seed = 0;
  std::size_t n_rows = 0;
  std::string fingerprint;
  ModelSelection selection = ModelSelection::both;
  std::vector<TrainedTarget> models;  // ordered by (kind, target)
  std::vector<SkipRecord> skipped;
  std::vector<std::size_t> test_indices;  // shared split, dataset row order

  const TrainedTarget* find(ModelKind kind, Target target) const;
};

// Shared 80/20 split over all rows; per target and family the rows that
// report the target are selected, the grid is searched on the training part
// with k-fold CV, the winner is refit on the whole training part and scored
// on both parts. Failures become skip records.
EvaluationReport train_all(const Dataset& dataset, const HyperGrid& grid, std::uint64_t seed,
                           ModelSelection selection = ModelSelection::both, std::size_t k = 5,
                           double test_fraction = 0.2);

// {schema_version, tool_version, seed, n_rows, dataset_fingerprint,
//  dtr: {target: {train, test, params, cv_rmse}}, svr: {...}, skipped: [...]}
nlohmann::ordered_json to_json(const EvaluationReport& report);

}  // namespace htc
