#include "htc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <thread>

#include "htc/error.hpp"
#include "htc/rng.hpp"
#include "htc/version.hpp"

namespace htc {

std::string_view to_string(ModelKind kind) { return kind == ModelKind::dtr ? "dtr" : "svr"; }

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "dtr") return ModelKind::dtr;
  if (s == "svr") return ModelKind::svr;
  fail(ErrorCode::invalid_argument, "unknown model kind '" + std::string(s) + "'");
}

ModelSelection model_selection_from_string(std::string_view s) {
  if (s == "dtr") return ModelSelection::dtr;
  if (s == "svr") return ModelSelection::svr;
  if (s == "both") return ModelSelection::both;
  fail(ErrorCode::invalid_argument, "model selection must be dtr, svr or both");
}

// ---------------------------------------------------------------------------

HyperGrid HyperGrid::defaults() {
  HyperGrid g;
  const std::vector<std::optional<std::size_t>> depths = {4, 6, 8, 10, 12, 16, std::nullopt};
  for (const auto& depth : depths) {
    for (std::size_t leaf : {1, 2, 5, 10}) {
      TreeParams p;
      p.max_depth = depth;
      p.min_samples_leaf = leaf;
      g.tree_grid.push_back(p);
    }
  }
  const std::vector<Kernel> kernels = {Kernel::linear(), Kernel::rbf(0.05), Kernel::rbf(0.1),
                                       Kernel::rbf(0.5)};
  for (double c : {0.1, 1.0, 10.0, 100.0}) {
    for (double eps : {0.01, 0.1, 0.5}) {
      for (const auto& kernel : kernels) {
        SvrParams p;
        p.c = c;
        p.epsilon = eps;
        p.kernel = kernel;
        g.svr_grid.push_back(p);
      }
    }
  }
  return g;
}

void HyperGrid::validate(ModelSelection selection) const {
  if (selection != ModelSelection::svr) {
    require(!tree_grid.empty(), ErrorCode::invalid_argument, "DTR grid is empty");
    for (const auto& p : tree_grid) p.validate();
  }
  if (selection != ModelSelection::dtr) {
    require(!svr_grid.empty(), ErrorCode::invalid_argument, "SVR grid is empty");
    for (const auto& p : svr_grid) p.validate();
  }
}

HyperGrid hyper_grid_from_json(const nlohmann::ordered_json& j) {
  HyperGrid g = HyperGrid::defaults();
  if (j.contains("dtr")) {
    g.tree_grid.clear();
    for (const auto& e : j.at("dtr")) g.tree_grid.push_back(tree_params_from_json(e));
  }
  if (j.contains("svr")) {
    g.svr_grid.clear();
    for (const auto& e : j.at("svr")) g.svr_grid.push_back(svr_params_from_json(e));
  }
  return g;
}

nlohmann::ordered_json to_json(const HyperGrid& grid) {
  nlohmann::ordered_json dtr = nlohmann::ordered_json::array();
  for (const auto& p : grid.tree_grid) dtr.push_back(to_json(p));
  nlohmann::ordered_json svr = nlohmann::ordered_json::array();
  for (const auto& p : grid.svr_grid) svr.push_back(to_json(p));
  return {{"dtr", std::move(dtr)}, {"svr", std::move(svr)}};
}

// ---------------------------------------------------------------------------

double TrainedTarget::predict(std::span<const double> raw_features) const {
  const auto z = scaler_in.transform(raw_features);
  if (const auto* tree = std::get_if<RegressionTree>(&model)) return tree->predict(z);
  const double out = std::get<SvrModel>(model).predict(z);
  return scaler_out ? scaler_out->inverse_value(out) : out;
}

TrainedTarget fit_target(Target target, const Matrix& x, std::span<const double> y,
                         const std::variant<TreeParams, SvrParams>& params, std::uint64_t seed) {
  TrainedTarget t;
  t.target = target;
  t.chosen_params = params;
  t.n_train = y.size();
  t.scaler_in = Scaler::fit(x, kFeatureNames);
  const Matrix z = t.scaler_in.transform(x);

  double sum = std::accumulate(y.begin(), y.end(), 0.0);
  t.target_stats.mean = sum / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - t.target_stats.mean) * (v - t.target_stats.mean);
  t.target_stats.std = std::sqrt(ss / static_cast<double>(y.size()));

  if (const auto* tp = std::get_if<TreeParams>(&params)) {
    t.kind = ModelKind::dtr;
    t.model = fit_tree(z, y, *tp);
  } else {
    t.kind = ModelKind::svr;
    t.scaler_out = Scaler::fit(y, name(target));
    std::vector<double> yz(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yz[i] = t.scaler_out->transform_value(y[i]);
    t.model = fit_svr(z, yz, std::get<SvrParams>(params), seed);
  }
  return t;
}

MetricsReport evaluate(const TrainedTarget& model, const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) fail(ErrorCode::dimension_mismatch, "feature rows vs targets");
  if (y.empty()) fail(ErrorCode::empty_input, "evaluation needs at least one row");
  std::vector<double> predicted(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) predicted[i] = model.predict(x.row(i));
  return compute_metrics(y, predicted);
}

// ---------------------------------------------------------------------------

namespace {

template <class Params>
CvResult grid_search_impl(const Matrix& x, std::span<const double> y, std::span<const Params> grid,
                          std::size_t k, std::uint64_t seed) {
  if (grid.empty()) fail(ErrorCode::invalid_argument, "grid is empty");
  if (x.rows() != y.size()) fail(ErrorCode::dimension_mismatch, "feature rows vs targets");
  if (k < 2) fail(ErrorCode::invalid_argument, "k must be at least 2");
  const std::size_t n = y.size();
  if (n < 2 * k) {
    fail(ErrorCode::too_few_rows, std::to_string(n) + " rows are too few for " + std::to_string(k) +
                                      "-fold cross-validation");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  struct Fold {
    Matrix x_train, x_valid;
    std::vector<double> y_train, y_valid;
  };
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, valid;
    for (std::size_t pos = 0; pos < n; ++pos) (pos % k == f ? valid : train).push_back(order[pos]);
    folds[f].x_train = x.select_rows(train);
    folds[f].x_valid = x.select_rows(valid);
    folds[f].y_train = select(y, std::span<const std::size_t>(train));
    folds[f].y_valid = select(y, std::span<const std::size_t>(valid));
  }

  CvResult result;
  result.candidate_rmse.reserve(grid.size());
  for (const auto& params : grid) {
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto& fold = folds[f];
      const auto model = fit_target(Target::yield, fold.x_train, fold.y_train, params, seed + f);
      std::vector<double> pred(fold.y_valid.size());
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = model.predict(fold.x_valid.row(i));
      total += rmse(fold.y_valid, pred);
    }
    result.candidate_rmse.push_back(total / static_cast<double>(k));
  }
  result.chosen = 0;
  for (std::size_t c = 1; c < result.candidate_rmse.size(); ++c) {
    if (result.candidate_rmse[c] < result.candidate_rmse[result.chosen]) result.chosen = c;
  }
  result.cv_rmse = result.candidate_rmse[result.chosen];
  return result;
}

// Runs job(i) for i in [0, count) on up to hardware_concurrency threads.
// Results are written by index, so the outcome does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t count, Job&& job) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1U, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

CvResult grid_search(const Matrix& x, std::span<const double> y, std::span<const TreeParams> grid,
                     std::size_t k, std::uint64_t seed) {
  return grid_search_impl(x, y, grid, k, seed);
}

CvResult grid_search(const Matrix& x, std::span<const double> y, std::span<const SvrParams> grid,
                     std::size_t k, std::uint64_t seed) {
  return grid_search_impl(x, y, grid, k, seed);
}

// ---------------------------------------------------------------------------

const TrainedTarget* EvaluationReport::find(ModelKind kind, Target target) const {
  for (const auto& m : models) {
    if (m.kind == kind && m.target == target) return &m;
  }
  return nullptr;
}

EvaluationReport train_all(const Dataset& dataset, const HyperGrid& grid, std::uint64_t seed,
                           ModelSelection selection, std::size_t k, double test_fraction) {
  grid.validate(selection);
  const SplitPlan plan = split(dataset.size(), test_fraction, k, seed);

  EvaluationReport report;
  report.seed = seed;
  report.n_rows = dataset.size();
  report.fingerprint = fingerprint(dataset);
  report.selection = selection;
  report.test_indices = plan.test_indices;
  std::sort(report.test_indices.begin(), report.test_indices.end());

  std::vector<ModelKind> kinds;
  if (selection != ModelSelection::svr) kinds.push_back(ModelKind::dtr);
  if (selection != ModelSelection::dtr) kinds.push_back(ModelKind::svr);

  struct Job {
    ModelKind kind;
    Target target;
    std::optional<TrainedTarget> result;
    std::string skip_reason;
  };
  std::vector<Job> jobs;
  for (ModelKind kind : kinds) {
    for (std::size_t t = 0; t < kTargetCount; ++t) jobs.push_back({kind, static_cast<Target>(t), {}, {}});
  }

  parallel_for(jobs.size(), [&](std::size_t j) {
    Job& job = jobs[j];
    try {
      std::vector<std::size_t> train, test;
      for (std::size_t i : plan.train_indices) {
        if (dataset.row(i).targets[job.target]) train.push_back(i);
      }
      for (std::size_t i : plan.test_indices) {
        if (dataset.row(i).targets[job.target]) test.push_back(i);
      }
      if (train.size() < 2 * k) {
        job.skip_reason = "insufficient training rows (" + std::to_string(train.size()) + ")";
        return;
      }
      if (test.size() < 2) {
        job.skip_reason = "insufficient test rows (" + std::to_string(test.size()) + ")";
        return;
      }
      const Matrix x_train = dataset.feature_matrix(train);
      const Matrix x_test = dataset.feature_matrix(test);
      const auto y_train = dataset.target_values(job.target, train);
      const auto y_test = dataset.target_values(job.target, test);
      const std::uint64_t job_seed = seed + 1000 * (index(job.target) + 1);

      std::variant<TreeParams, SvrParams> chosen;
      CvResult cv;
      if (job.kind == ModelKind::dtr) {
        cv = grid_search(x_train, y_train, std::span<const TreeParams>(grid.tree_grid), k, job_seed);
        chosen = grid.tree_grid[cv.chosen];
      } else {
        cv = grid_search(x_train, y_train, std::span<const SvrParams>(grid.svr_grid), k, job_seed);
        chosen = grid.svr_grid[cv.chosen];
      }
      TrainedTarget model = fit_target(job.target, x_train, y_train, chosen, job_seed);
      model.cv_rmse = cv.cv_rmse;
      model.train_metrics = evaluate(model, x_train, y_train);
      model.test_metrics = evaluate(model, x_test, y_test);
      model.n_test = test.size();
      job.result = std::move(model);
    } catch (const Error& e) {
      job.skip_reason = e.what();
    }
  });

  for (auto& job : jobs) {
    if (job.result) {
      report.models.push_back(std::move(*job.result));
    } else {
      report.skipped.push_back({job.kind, job.target, job.skip_reason});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json params_json(const std::variant<TreeParams, SvrParams>& p) {
  return std::visit([](const auto& v) { return to_json(v); }, p);
}

}  // namespace

nlohmann::ordered_json to_json(const TrainedTarget& t) {
  nlohmann::ordered_json j;
  j["target"] = name(t.target);
  j["model_kind"] = to_string(t.kind);
  j["chosen_params"] = params_json(t.chosen_params);
  j["cv_rmse"] = t.cv_rmse;
  j["train_metrics"] = to_json(t.train_metrics);
  j["test_metrics"] = to_json(t.test_metrics);
  j["n_train"] = t.n_train;
  j["n_test"] = t.n_test;
  j["target_stats"] = {{"mean", t.target_stats.mean}, {"std", t.target_stats.std}};
  j["scaler_in"] = {{"means", t.scaler_in.means()}, {"stds", t.scaler_in.stds()}};
  if (t.scaler_out) {
    j["scaler_out"] = {{"mean", t.scaler_out->means()[0]}, {"std", t.scaler_out->stds()[0]}};
  } else {
    j["scaler_out"] = nullptr;
  }
  j["model"] = std::visit([](const auto& m) { return to_json(m); }, t.model);
  return j;
}

TrainedTarget trained_target_from_json(const nlohmann::ordered_json& j) {
  TrainedTarget t;
  const auto target_name = j.at("target").get<std::string>();
  const auto target = target_from_name(target_name);
  if (!target) fail(ErrorCode::invalid_argument, "unknown target '" + target_name + "'");
  t.target = *target;
  t.kind = model_kind_from_string(j.at("model_kind").get<std::string>());
  t.cv_rmse = j.at("cv_rmse").get<double>();
  t.train_metrics = metrics_from_json(j.at("train_metrics"));
  t.test_metrics = metrics_from_json(j.at("test_metrics"));
  t.n_train = j.at("n_train").get<std::size_t>();
  t.n_test = j.at("n_test").get<std::size_t>();
  t.target_stats = {j.at("target_stats").at("mean").get<double>(),
                    j.at("target_stats").at("std").get<double>()};
  t.scaler_in = Scaler(j.at("scaler_in").at("means").get<std::vector<double>>(),
                       j.at("scaler_in").at("stds").get<std::vector<double>>());
  if (!j.at("scaler_out").is_null()) {
    t.scaler_out = Scaler({j.at("scaler_out").at("mean").get<double>()},
                          {j.at("scaler_out").at("std").get<double>()});
  }
  if (t.kind == ModelKind::dtr) {
    t.chosen_params = tree_params_from_json(j.at("chosen_params"));
    t.model = tree_from_json(j.at("model"));
  } else {
    t.chosen_params = svr_params_from_json(j.at("chosen_params"));
    t.model = svr_from_json(j.at("model"));
  }
  return t;
}

nlohmann::ordered_json to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["seed"] = report.seed;
  j["n_rows"] = report.n_rows;
  j["dataset_fingerprint"] = report.fingerprint;
  for (ModelKind kind : {ModelKind::dtr, ModelKind::svr}) {
    if (kind == ModelKind::dtr && report.selection == ModelSelection::svr) continue;
    if (kind == ModelKind::svr && report.selection == ModelSelection::dtr) continue;
    nlohmann::ordered_json section = nlohmann::ordered_json::object();
    for (const auto& m : report.models) {
      if (m.kind != kind) continue;
      section[std::string(name(m.target))] = {{"train", to_json(m.train_metrics)},
                                              {"test", to_json(m.test_metrics)},
                                              {"params", params_json(m.chosen_params)},
                                              {"cv_rmse", m.cv_rmse}};
    }
    j[std::string(to_string(kind))] = std::move(section);
  }
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& s : report.skipped) {
    skipped.push_back({{"model", to_string(s.kind)}, {"target", name(s.target)}, {"reason", s.reason}});
  }
  j["skipped"] = std::move(skipped);
  return j;
}

}  // namespace htc
