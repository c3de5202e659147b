#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htc/matrix.hpp"
#include "htc/pipeline.hpp"
#include "htc/schema.hpp"
#include "htc/shapley.hpp"
#include "json.hpp"

namespace htc {

enum class Direction { maximize, minimize, ignore };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct ObjectiveProfile {
  std::string application;
  std::array<Direction, kTargetCount> directions{};

  static ObjectiveProfile energy();
  static ObjectiveProfile soil();
  static ObjectiveProfile adsorption();
  // energy | soil | adsorption; InvalidArgument otherwise.
  static ObjectiveProfile by_name(std::string_view name);

  Direction operator[](Target t) const { return directions[index(t)]; }
  void validate() const;  // at least one non-ignore direction
};

// {"application": "...", "directions": {"hc_yield": "maximize", ...}}; targets
// left out are ignored. A bare direction map is accepted too.
ObjectiveProfile objective_profile_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const ObjectiveProfile& p);

struct GaConfig {
  std::size_t population = 1000;
  double crossover_prob = 0.5;
  double mutation_prob = 0.3;
  std::size_t generations = 200;
  std::size_t stagnation_limit = 50;  // 0 disables early stopping
  std::size_t elitism = 10;  // capped at population - 1
  double blend_alpha = 0.5;
  double mutation_scale = 0.1;  // per-gene sd as a fraction of the gene range
  // Roulette weights are f - (mean - sigma_truncation * sd), floored at 0.
  double sigma_truncation = 2.0;
  std::uint64_t seed = 42;
  std::vector<double> lower;
  std::vector<double> upper;

  void validate() const;
};

// Per-gene [min, max] of the training inputs. A constant column gets a small
// symmetric pad so that lo < hi.
void set_bounds_from_data(GaConfig& config, const Matrix& x);

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct GaRun {
  std::vector<double> best;
  double best_fitness = 0.0;
  std::vector<double> history;  // best-ever fitness; entry 0 is the initial population
  std::size_t evaluations = 0;
};

// Maximizes `objective` over the box in `config`. A non-finite objective
// marks an infeasible point, which gets zero selection weight.
GaRun run_ga(const ObjectiveFn& objective, const GaConfig& config);

// One response surface with the training statistics used to z-score it.
struct Surrogate {
  PredictFn predict;
  TargetStats stats;
};

using SurrogateSet = std::array<std::optional<Surrogate>, kTargetCount>;

SurrogateSet surrogates_from(std::span<const TrainedTarget> models, ModelKind kind);

// Sum over non-ignored targets of sign * (prediction - mean) / std.
double fitness(const SurrogateSet& models, const ObjectiveProfile& profile, std::span<const double> x);

struct GaResult {
  FeatureVector best_inputs;
  double best_fitness = 0.0;
  std::array<std::optional<double>, kTargetCount> predicted_outputs{};
  std::vector<double> history;
};

// Infeasible compositions score -inf.
GaResult optimize(const SurrogateSet& models, const ObjectiveProfile& profile, const GaConfig& config);

struct OptimizationReport {
  ObjectiveProfile profile;
  GaConfig config;
  GaResult result;
};

nlohmann::ordered_json to_json(const OptimizationReport& r);
OptimizationReport optimization_report_from_json(const nlohmann::ordered_json& j);
std::string format_table(const OptimizationReport& r);

}  // namespace htc
