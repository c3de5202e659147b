#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htc/matrix.hpp"

namespace htc {

using PredictFn = std::function<double(std::span<const double>)>;

// Exhaustive enumeration visits 2^d coalitions.
inline constexpr std::size_t kMaxExactFeatures = 20;
inline constexpr std::size_t kDefaultBackgroundSize = 64;

struct ShapExplanation {
  std::vector<double> feature_values;
  std::vector<double> phi;
  double base_value = 0.0;  // mean prediction over the background
  double prediction = 0.0;  // model at feature_values
};

// Exact interventional Shapley values. The value of a coalition S is the
// background mean of the model evaluated with features in S taken from x and
// the rest from the background row.
ShapExplanation explain(const PredictFn& model, std::span<const double> x, const Matrix& background);

struct GlobalImportance {
  std::vector<double> mean_abs_phi;
  std::vector<std::size_t> ranking;  // feature indices, most important first
};

GlobalImportance global_importance(std::span<const ShapExplanation> explanations);
GlobalImportance global_importance(const PredictFn& model, const Matrix& rows, const Matrix& background);

// Up to `count` rows drawn without replacement with a fixed seed; all rows
// when fewer are available.
Matrix sample_background(const Matrix& rows, std::size_t count = kDefaultBackgroundSize,
                         std::uint64_t seed = 0);

struct BeeswarmPoint {
  std::size_t row;
  std::size_t feature;
  double phi;
  double feature_value;
};

struct PlotTables {
  std::vector<BeeswarmPoint> beeswarm;  // row-major, n_rows x n_features
  std::vector<double> bar;              // mean |phi| per feature
  Matrix heatmap;                       // rows x features phi
  std::vector<double> heatmap_prediction;  // f(x) per row
  std::vector<double> heatmap_base;
};

PlotTables emit_plot_data(std::span<const ShapExplanation> explanations);

// `preamble` lines are written first, each prefixed with "# ".
void write_beeswarm_csv(const PlotTables& t, std::span<const std::string_view> feature_names,
                        std::ostream& out, std::span<const std::string> preamble = {});
void write_bar_csv(const PlotTables& t, std::span<const std::string_view> feature_names,
                   std::ostream& out, std::span<const std::string> preamble = {});
void write_heatmap_csv(const PlotTables& t, std::span<const std::string_view> feature_names,
                       std::ostream& out, std::span<const std::string> preamble = {});

// Horizontal bar chart of mean |phi|, 800x400 viewBox, bars sorted by importance.
void write_bar_svg(const PlotTables& t, std::span<const std::string_view> feature_names,
                   std::string_view title, std::ostream& out, std::span<const std::string> preamble = {});

}  // namespace htc
