#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htc/matrix.hpp"
#include "htc/schema.hpp"

namespace htc {

// Column count of the canonical CSV schema (features then targets).
inline constexpr std::size_t kColumnCount = kFeatureCount + kTargetCount;

std::string_view column_name(std::size_t column);

struct DataRow {
  FeatureVector features;
  TargetRecord targets;

  bool operator==(const DataRow&) const = default;
};

// Immutable table of HTC experiments. Always holds at least one row.
class Dataset {
 public:
  explicit Dataset(std::vector<DataRow> rows);

  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<DataRow>& rows() const noexcept { return rows_; }
  const DataRow& row(std::size_t i) const { return rows_[i]; }

  static std::span<const std::string_view> feature_names() { return kFeatureNames; }
  static std::span<const std::string_view> target_names() { return kTargetNames; }

  Matrix feature_matrix() const;
  Matrix feature_matrix(std::span<const std::size_t> indices) const;

  // Indices of rows reporting the target, ascending.
  std::vector<std::size_t> rows_with(Target t) const;
  // Target values for the given rows; every row must report the target.
  std::vector<double> target_values(Target t, std::span<const std::size_t> indices) const;

  // Value of schema column `column` (0..20) for one row; absent targets are nullopt.
  std::optional<double> cell(std::size_t row, std::size_t column) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<DataRow> rows_;
};

struct RangeWarning {
  std::size_t row;  // 1-based data line number (header excluded)
  std::string column;
  double value;
  std::string message;
};

struct LoadResult {
  Dataset dataset;
  std::vector<RangeWarning> warnings;
};

LoadResult load_csv(const std::filesystem::path& path);
LoadResult read_csv(std::istream& in);

// Shortest round-trip decimal representation; absent targets become empty cells.
void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

// FNV-1a 64-bit hash of the canonical CSV serialization, as 16 hex digits.
std::string fingerprint(const Dataset& dataset);

// Per-column standardization with population standard deviations.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> means, std::vector<double> stds);

  // Fits on every row of `x`. Throws ConstantColumn naming the offending
  // column (from `names` when given, else its index).
  static Scaler fit(const Matrix& x, std::span<const std::string_view> names = {});
  static Scaler fit(std::span<const double> column, std::string_view name = "target");

  std::size_t dimension() const noexcept { return means_.size(); }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stds() const noexcept { return stds_; }

  std::vector<double> transform(std::span<const double> x) const;
  std::vector<double> inverse_transform(std::span<const double> z) const;
  Matrix transform(const Matrix& x) const;

  // Single-column helpers for target scaling.
  double transform_value(double v, std::size_t column = 0) const {
    return (v - means_[column]) / stds_[column];
  }
  double inverse_value(double z, std::size_t column = 0) const {
    return z * stds_[column] + means_[column];
  }

  bool operator==(const Scaler&) const = default;

 private:
  std::vector<double> means_;
  std::vector<double> stds_;
};

// Fits an input scaler on the feature columns of the selected rows.
Scaler fit_feature_scaler(const Dataset& dataset, std::span<const std::size_t> rows);

struct SplitPlan {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  // fold_assignments[i] is the fold of train_indices[i], in 0..k-1.
  std::vector<std::size_t> fold_assignments;
  std::size_t folds = 0;
};

// Uniform shuffle, then the first round(test_fraction * n) rows form the test
// set and the remainder is dealt round-robin into k folds.
SplitPlan split(std::size_t n, double test_fraction, std::size_t k, std::uint64_t seed);

inline SplitPlan split(const Dataset& dataset, std::uint64_t seed, double test_fraction = 0.2,
                       std::size_t k = 5) {
  return split(dataset.size(), test_fraction, k, seed);
}

struct AtomicRatios {
  double h_over_c;
  double o_over_c;
};

inline constexpr double kCarbonMass = 12.011;
inline constexpr double kHydrogenMass = 1.008;
inline constexpr double kOxygenMass = 15.999;

// Van Krevelen H/C and O/C atomic ratios from elemental wt%.
AtomicRatios van_krevelen(double c_wt, double h_wt, double o_wt);

// Sampling envelope of the synthetic generator, per feature.
struct FeatureRange {
  double lo;
  double hi;
};
std::span<const FeatureRange> synthetic_feature_ranges();

// Noiseless responses of the synthetic generator. Each target is driven by one
// dominant input plus a weaker secondary one:
//   hc_yield  decreases with temperature, weakly with time
//   hc_hhv    increases with biomass carbon, weakly with temperature
//   hc_vm     decreases with temperature, weakly increases with biomass VM
//   hc_fc     increases with temperature and biomass FC
//   hc_ash    tracks biomass ash, weakly increases with temperature
//   hc_c      increases with biomass carbon and temperature
//   hc_h      tracks biomass hydrogen, weakly decreases with temperature
//   hc_n/s/o  track the matching biomass element
std::array<double, kTargetCount> synthetic_ground_truth(const FeatureVector& x);

// Features drawn uniformly inside synthetic_feature_ranges() subject to the
// composition sums; fixed carbon closes the proximate analysis to 100 wt%.
// Targets are the ground truth plus N(0, noise_sd) times the amplitude of the
// target's dominant term, clipped to the valid ranges.
Dataset generate_synthetic(std::size_t n, std::uint64_t seed, double noise_sd);

}  // namespace htc
