#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace htc {

inline constexpr std::size_t kFeatureCount = 11;
inline constexpr std::size_t kTargetCount = 10;

// Column order of the canonical CSV schema.
enum class Feature : std::size_t {
  biomass_c,
  biomass_h,
  biomass_n,
  biomass_s,
  biomass_o,
  biomass_vm,
  biomass_fc,
  biomass_ash,
  temperature,
  time,
  water_content,
};

enum class Target : std::size_t {
  yield,
  hhv,
  hc_vm,
  hc_fc,
  hc_ash,
  hc_c,
  hc_h,
  hc_n,
  hc_s,
  hc_o,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "biomass_c",  "biomass_h",  "biomass_n",   "biomass_s",     "biomass_o", "biomass_vm",
    "biomass_fc", "biomass_ash", "temperature_c", "time_min", "water_wt"};

inline constexpr std::array<std::string_view, kTargetCount> kTargetNames = {
    "hc_yield", "hc_hhv", "hc_vm", "hc_fc", "hc_ash", "hc_c", "hc_h", "hc_n", "hc_s", "hc_o"};

constexpr std::size_t index(Feature f) { return static_cast<std::size_t>(f); }
constexpr std::size_t index(Target t) { return static_cast<std::size_t>(t); }

constexpr std::string_view name(Feature f) { return kFeatureNames[index(f)]; }
constexpr std::string_view name(Target t) { return kTargetNames[index(t)]; }

std::optional<Feature> feature_from_name(std::string_view name);
std::optional<Target> target_from_name(std::string_view name);

// Slack allowed on the ultimate and proximate composition sums (wt%).
inline constexpr double kCompositionTolerance = 1.0;

// Processing-parameter envelope observed in the literature data; values
// outside it load with a warning.
inline constexpr double kTemperatureEnvelopeLo = 100.0;
inline constexpr double kTemperatureEnvelopeHi = 375.0;
inline constexpr double kTimeEnvelopeLo = 5.0;
inline constexpr double kTimeEnvelopeHi = 600.0;

// The 11 independent variables, in schema order.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[index(f)]; }
  double operator[](Feature f) const { return values[index(f)]; }

  bool operator==(const FeatureVector&) const = default;
};

// Hydrochar responses; any may be unreported.
struct TargetRecord {
  std::array<std::optional<double>, kTargetCount> values{};

  std::optional<double>& operator[](Target t) { return values[index(t)]; }
  const std::optional<double>& operator[](Target t) const { return values[index(t)]; }

  bool operator==(const TargetRecord&) const = default;
};

// First violated invariant, or nullopt. Messages name the rule.
std::optional<std::string> check_features(const FeatureVector& x);
std::optional<std::string> check_targets(const TargetRecord& y);

// Composition sums only (ultimate and proximate); used as the GA feasibility filter.
bool composition_feasible(const FeatureVector& x);

}  // namespace htc
