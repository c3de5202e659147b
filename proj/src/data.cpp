#include "htc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ios>
#include <sstream>

#include "htc/error.hpp"
#include "htc/rng.hpp"

namespace htc {

std::string_view column_name(std::size_t column) {
  return column < kFeatureCount ? kFeatureNames[column] : kTargetNames[column - kFeatureCount];
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<DataRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) fail(ErrorCode::empty_dataset, "dataset has no rows");
}

Matrix Dataset::feature_matrix() const {
  Matrix x(rows_.size(), kFeatureCount);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    std::copy(rows_[r].features.values.begin(), rows_[r].features.values.end(), x.row(r).begin());
  }
  return x;
}

Matrix Dataset::feature_matrix(std::span<const std::size_t> indices) const {
  Matrix x(indices.size(), kFeatureCount);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& values = rows_.at(indices[i]).features.values;
    std::copy(values.begin(), values.end(), x.row(i).begin());
  }
  return x;
}

std::vector<std::size_t> Dataset::rows_with(Target t) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].targets[t]) out.push_back(r);
  }
  return out;
}

std::vector<double> Dataset::target_values(Target t, std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto& v = rows_.at(i).targets[t];
    if (!v) {
      fail(ErrorCode::invalid_argument,
           "row " + std::to_string(i) + " does not report " + std::string(name(t)));
    }
    out.push_back(*v);
  }
  return out;
}

std::optional<double> Dataset::cell(std::size_t row, std::size_t column) const {
  const auto& r = rows_.at(row);
  if (column < kFeatureCount) return r.features.values[column];
  return r.targets.values.at(column - kFeatureCount);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void check_header(const std::vector<std::string_view>& header) {
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto expected = column_name(c);
    if (c < header.size() && header[c] == expected) continue;
    if (std::find(header.begin(), header.end(), expected) == header.end()) {
      fail(ErrorCode::missing_column, "column '" + std::string(expected) + "' not in header");
    }
    fail(ErrorCode::missing_column, "column '" + std::string(expected) + "' expected at position " +
                                        std::to_string(c + 1));
  }
  if (header.size() != kColumnCount) {
    fail(ErrorCode::unparseable_cell,
         "header has " + std::to_string(header.size()) + " columns, expected 21");
  }
}

void add_envelope_warnings(std::size_t line, const FeatureVector& x,
                           std::vector<RangeWarning>& warnings) {
  const double t = x[Feature::temperature];
  if (t < kTemperatureEnvelopeLo || t > kTemperatureEnvelopeHi) {
    warnings.push_back({line, "temperature_c", t, "temperature outside observed envelope [100, 375] C"});
  }
  const double m = x[Feature::time];
  if (m < kTimeEnvelopeLo || m > kTimeEnvelopeHi) {
    warnings.push_back({line, "time_min", m, "time outside observed envelope [5, 600] min"});
  }
}

}  // namespace

LoadResult read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::empty_dataset, "file is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  check_header(split_fields(line));

  std::vector<DataRow> rows;
  std::vector<RangeWarning> warnings;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++line_no;
    const auto fields = split_fields(line);
    auto cell_error = [&](std::size_t col, const std::string& why) {
      fail(ErrorCode::unparseable_cell, "row " + std::to_string(line_no) + ", column " +
                                            std::string(column_name(col)) + ": " + why);
    };
    if (fields.size() != kColumnCount) {
      cell_error(std::min(fields.size(), kColumnCount - 1),
                 "expected 21 fields, found " + std::to_string(fields.size()));
    }
    DataRow row;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      const auto field = fields[c];
      if (c >= kFeatureCount && field.empty()) continue;
      const auto value = parse_double(field);
      if (!value) cell_error(c, field.empty() ? "empty feature cell" : "'" + std::string(field) + "'");
      if (c < kFeatureCount) {
        row.features.values[c] = *value;
      } else {
        row.targets.values[c - kFeatureCount] = *value;
      }
    }
    if (auto why = check_features(row.features)) {
      fail(ErrorCode::constraint_violation, "row " + std::to_string(line_no) + ": " + *why);
    }
    if (auto why = check_targets(row.targets)) {
      fail(ErrorCode::constraint_violation, "row " + std::to_string(line_no) + ": " + *why);
    }
    add_envelope_warnings(line_no, row.features, warnings);
    rows.push_back(row);
  }
  if (rows.empty()) fail(ErrorCode::empty_dataset, "no data rows after header");
  return {Dataset(std::move(rows)), std::move(warnings)};
}

LoadResult load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  return read_csv(in);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    if (c) out << ',';
    out << column_name(c);
  }
  out << '\n';
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (c) out << ',';
      if (auto v = dataset.cell(r, c)) out << format_double(*v);
    }
    out << '\n';
  }
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  write_csv(dataset, out);
}

std::string fingerprint(const Dataset& dataset) {
  std::ostringstream text;
  write_csv(dataset, text);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text.str()) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << hash;
  return hex.str();
}

// ---------------------------------------------------------------------------
// Scaler

Scaler::Scaler(std::vector<double> means, std::vector<double> stds)
    : means_(std::move(means)), stds_(std::move(stds)) {
  if (means_.size() != stds_.size()) fail(ErrorCode::dimension_mismatch, "means/stds size differ");
  for (double s : stds_) {
    if (!(s > 0.0)) fail(ErrorCode::constant_column, "scaler std must be positive");
  }
}

namespace {

struct Moments {
  double mean;
  double std;
};

Moments population_moments(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

Scaler Scaler::fit(const Matrix& x, std::span<const std::string_view> names) {
  if (x.rows() == 0) fail(ErrorCode::empty_input, "cannot fit scaler on zero rows");
  std::vector<double> means(x.cols()), stds(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.column(c);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const auto m = population_moments(col);
    if (*lo == *hi || !(m.std > 0.0)) {
      fail(ErrorCode::constant_column,
           c < names.size() ? std::string(names[c]) : "column " + std::to_string(c));
    }
    means[c] = m.mean;
    stds[c] = m.std;
  }
  return Scaler(std::move(means), std::move(stds));
}

Scaler Scaler::fit(std::span<const double> column, std::string_view name) {
  if (column.empty()) fail(ErrorCode::empty_input, "cannot fit scaler on zero rows");
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  const auto m = population_moments(column);
  if (*lo == *hi || !(m.std > 0.0)) fail(ErrorCode::constant_column, std::string(name));
  return Scaler({m.mean}, {m.std});
}

std::vector<double> Scaler::transform(std::span<const double> x) const {
  if (x.size() != means_.size()) fail(ErrorCode::dimension_mismatch, "scaler dimension");
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - means_[i]) / stds_[i];
  return z;
}

std::vector<double> Scaler::inverse_transform(std::span<const double> z) const {
  if (z.size() != means_.size()) fail(ErrorCode::dimension_mismatch, "scaler dimension");
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * stds_[i] + means_[i];
  return x;
}

Matrix Scaler::transform(const Matrix& x) const {
  if (x.cols() != means_.size()) fail(ErrorCode::dimension_mismatch, "scaler dimension");
  Matrix z(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) z(r, c) = (x(r, c) - means_[c]) / stds_[c];
  }
  return z;
}

Scaler fit_feature_scaler(const Dataset& dataset, std::span<const std::size_t> rows) {
  return Scaler::fit(dataset.feature_matrix(rows), kFeatureNames);
}

// ---------------------------------------------------------------------------
// Splitting

SplitPlan split(std::size_t n, double test_fraction, std::size_t k, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::invalid_argument, "test_fraction must lie in (0, 1)");
  }
  if (k < 2) fail(ErrorCode::invalid_argument, "k must be at least 2");
  if (n < k + 1) {
    fail(ErrorCode::too_few_rows,
         std::to_string(n) + " rows cannot hold a test set and " + std::to_string(k) + " folds");
  }
  std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::max<std::size_t>(n_test, 1);
  if (n - std::min(n_test, n) < k) {
    fail(ErrorCode::too_few_rows, "training part smaller than the fold count");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  SplitPlan plan;
  plan.folds = k;
  plan.test_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  plan.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  plan.fold_assignments.resize(plan.train_indices.size());
  for (std::size_t i = 0; i < plan.train_indices.size(); ++i) plan.fold_assignments[i] = i % k;
  return plan;
}

// ---------------------------------------------------------------------------
// Van Krevelen

AtomicRatios van_krevelen(double c_wt, double h_wt, double o_wt) {
  if (!(c_wt > 0.0)) fail(ErrorCode::zero_carbon, "carbon content must be positive");
  const double carbon_mol = c_wt / kCarbonMass;
  return {(h_wt / kHydrogenMass) / carbon_mol, (o_wt / kOxygenMass) / carbon_mol};
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

// Biomass C, H, O, ash, VM and the processing envelope follow the ranges
// reported for the literature data; N, S and water content are assumed.
constexpr std::array<FeatureRange, kFeatureCount> kSyntheticRanges = {{
    {22.65, 63.82},  // biomass_c
    {2.9, 8.1},      // biomass_h
    {0.1, 6.0},      // biomass_n
    {0.0, 1.0},      // biomass_s
    {10.5, 60.5},    // biomass_o
    {47.38, 93.42},  // biomass_vm
    {0.0, 52.46},    // biomass_fc (closes the proximate analysis)
    {0.16, 49.85},   // biomass_ash
    {100.0, 375.0},  // temperature_c
    {5.0, 600.0},    // time_min
    {50.0, 95.0},    // water_wt
}};

struct ResponseTerm {
  Feature dominant;
  double base;
  double amplitude;
  double exponent;
  Feature secondary;
  double secondary_amplitude;
};

constexpr std::array<ResponseTerm, kTargetCount> kResponses = {{
    {Feature::temperature, 92.0, -45.0, 1.3, Feature::time, -5.0},           // hc_yield
    {Feature::biomass_c, 14.0, 18.0, 1.0, Feature::temperature, 2.5},         // hc_hhv
    {Feature::temperature, 85.0, -50.0, 0.8, Feature::biomass_vm, 6.0},       // hc_vm
    {Feature::temperature, 8.0, 35.0, 1.2, Feature::biomass_fc, 4.0},         // hc_fc
    {Feature::biomass_ash, 0.5, 60.0, 1.0, Feature::temperature, 3.0},        // hc_ash
    {Feature::biomass_c, 30.0, 35.0, 1.0, Feature::temperature, 5.0},         // hc_c
    {Feature::biomass_h, 3.0, 4.0, 1.0, Feature::temperature, -0.5},          // hc_h
    {Feature::biomass_n, 0.05, 5.4, 1.0, Feature::temperature, 0.1},          // hc_n
    {Feature::biomass_s, 0.01, 0.9, 1.0, Feature::time, 0.02},                // hc_s
    {Feature::biomass_o, 7.0, 35.0, 1.0, Feature::temperature, -4.0},         // hc_o
}};

double unit(const FeatureVector& x, Feature f) {
  const auto r = kSyntheticRanges[index(f)];
  return std::clamp((x[f] - r.lo) / (r.hi - r.lo), 0.0, 1.0);
}

double clip_target(Target t, double v) {
  switch (t) {
    case Target::yield: return std::clamp(v, 0.01, 100.0);
    case Target::hhv: return std::clamp(v, 0.01, 50.0);
    default: return std::clamp(v, 0.0, 100.0);
  }
}

}  // namespace

std::span<const FeatureRange> synthetic_feature_ranges() { return kSyntheticRanges; }

std::array<double, kTargetCount> synthetic_ground_truth(const FeatureVector& x) {
  std::array<double, kTargetCount> y{};
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    const auto& term = kResponses[t];
    y[t] = term.base + term.amplitude * std::pow(unit(x, term.dominant), term.exponent) +
           term.secondary_amplitude * unit(x, term.secondary);
  }
  return y;
}

Dataset generate_synthetic(std::size_t n, std::uint64_t seed, double noise_sd) {
  if (n < 1) fail(ErrorCode::invalid_argument, "synthetic row count must be at least 1");
  if (!(noise_sd >= 0.0)) fail(ErrorCode::invalid_argument, "noise_sd must be non-negative");

  Rng rng(seed);
  auto draw = [&](Feature f) {
    const auto r = kSyntheticRanges[index(f)];
    return rng.uniform(r.lo, r.hi);
  };

  std::vector<DataRow> rows;
  rows.reserve(n);
  while (rows.size() < n) {
    DataRow row;
    auto& x = row.features;
    for (Feature f : {Feature::biomass_c, Feature::biomass_h, Feature::biomass_n, Feature::biomass_s,
                      Feature::biomass_o, Feature::biomass_vm, Feature::biomass_ash}) {
      x[f] = draw(f);
    }
    const double ultimate = x[Feature::biomass_c] + x[Feature::biomass_h] + x[Feature::biomass_n] +
                            x[Feature::biomass_s] + x[Feature::biomass_o];
    if (ultimate > 100.0 || x[Feature::biomass_vm] + x[Feature::biomass_ash] > 100.0) continue;
    x[Feature::biomass_fc] = 100.0 - x[Feature::biomass_vm] - x[Feature::biomass_ash];
    x[Feature::temperature] = draw(Feature::temperature);
    x[Feature::time] = draw(Feature::time);
    x[Feature::water_content] = draw(Feature::water_content);

    const auto truth = synthetic_ground_truth(x);
    for (std::size_t t = 0; t < kTargetCount; ++t) {
      double v = truth[t];
      if (noise_sd > 0.0) v += noise_sd * std::abs(kResponses[t].amplitude) * rng.normal();
      row.targets.values[t] = clip_target(static_cast<Target>(t), v);
    }
    rows.push_back(row);
  }
  return Dataset(std::move(rows));
}

}  // namespace htc
