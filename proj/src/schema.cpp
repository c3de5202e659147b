#include "htc/schema.hpp"

#include <algorithm>
#include <cmath>

namespace htc {

std::optional<Feature> feature_from_name(std::string_view name) {
  auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
  if (it == kFeatureNames.end()) return std::nullopt;
  return static_cast<Feature>(it - kFeatureNames.begin());
}

std::optional<Target> target_from_name(std::string_view name) {
  auto it = std::find(kTargetNames.begin(), kTargetNames.end(), name);
  if (it == kTargetNames.end()) return std::nullopt;
  return static_cast<Target>(it - kTargetNames.begin());
}

namespace {

double ultimate_sum(const FeatureVector& x) {
  return x[Feature::biomass_c] + x[Feature::biomass_h] + x[Feature::biomass_n] +
         x[Feature::biomass_s] + x[Feature::biomass_o];
}

double proximate_sum(const FeatureVector& x) {
  return x[Feature::biomass_vm] + x[Feature::biomass_fc] + x[Feature::biomass_ash];
}

bool is_mass_fraction(Feature f) {
  return f != Feature::temperature && f != Feature::time;
}

}  // namespace

std::optional<std::string> check_features(const FeatureVector& x) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto f = static_cast<Feature>(i);
    const double v = x.values[i];
    if (!std::isfinite(v)) return std::string(name(f)) + " is not finite";
    if (is_mass_fraction(f) && (v < 0.0 || v > 100.0)) {
      return std::string(name(f)) + " outside [0, 100] wt%";
    }
  }
  if (!(x[Feature::temperature] > 0.0)) return "temperature_c must be > 0";
  if (!(x[Feature::time] > 0.0)) return "time_min must be > 0";
  if (ultimate_sum(x) > 100.0 + kCompositionTolerance) {
    return "ultimate analysis C+H+N+S+O exceeds 100 wt%";
  }
  if (proximate_sum(x) > 100.0 + kCompositionTolerance) {
    return "proximate analysis VM+FC+ash exceeds 100 wt%";
  }
  return std::nullopt;
}

std::optional<std::string> check_targets(const TargetRecord& y) {
  for (std::size_t i = 0; i < kTargetCount; ++i) {
    const auto t = static_cast<Target>(i);
    if (!y.values[i]) continue;
    const double v = *y.values[i];
    if (!std::isfinite(v)) return std::string(name(t)) + " is not finite";
    switch (t) {
      case Target::yield:
        if (!(v > 0.0 && v <= 100.0)) return "hc_yield outside (0, 100]";
        break;
      case Target::hhv:
        if (!(v > 0.0 && v <= 50.0)) return "hc_hhv outside (0, 50] MJ/kg";
        break;
      default:
        if (v < 0.0 || v > 100.0) return std::string(name(t)) + " outside [0, 100] wt%";
    }
  }
  return std::nullopt;
}

bool composition_feasible(const FeatureVector& x) {
  return ultimate_sum(x) <= 100.0 + kCompositionTolerance &&
         proximate_sum(x) <= 100.0 + kCompositionTolerance;
}

}  // namespace htc
