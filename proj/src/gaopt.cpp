#include "htc/gaopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "htc/error.hpp"
#include "htc/rng.hpp"
#include "htc/version.hpp"

namespace htc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

ObjectiveProfile make_profile(std::string name, std::initializer_list<Target> maximize,
                              std::initializer_list<Target> minimize) {
  ObjectiveProfile p;
  p.application = std::move(name);
  p.directions.fill(Direction::ignore);
  for (Target t : maximize) p.directions[index(t)] = Direction::maximize;
  for (Target t : minimize) p.directions[index(t)] = Direction::minimize;
  return p;
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::maximize: return "maximize";
    case Direction::minimize: return "minimize";
    case Direction::ignore: return "ignore";
  }
  return "ignore";
}

Direction direction_from_string(std::string_view s) {
  if (s == "maximize") return Direction::maximize;
  if (s == "minimize") return Direction::minimize;
  if (s == "ignore") return Direction::ignore;
  fail(ErrorCode::invalid_argument, "unknown direction '" + std::string(s) + "'");
}

ObjectiveProfile ObjectiveProfile::energy() {
  using T = Target;
  return make_profile("energy", {T::hc_c, T::hc_h, T::hhv, T::yield},
                      {T::hc_n, T::hc_o, T::hc_s, T::hc_vm, T::hc_ash});
}

ObjectiveProfile ObjectiveProfile::soil() {
  using T = Target;
  return make_profile("soil", {T::hc_n, T::hc_s, T::hc_ash, T::yield}, {T::hhv});
}

ObjectiveProfile ObjectiveProfile::adsorption() {
  using T = Target;
  return make_profile("adsorption", {T::hc_n, T::hc_o, T::hc_s, T::hc_ash, T::yield}, {T::hhv});
}

ObjectiveProfile ObjectiveProfile::by_name(std::string_view name) {
  if (name == "energy") return energy();
  if (name == "soil") return soil();
  if (name == "adsorption") return adsorption();
  fail(ErrorCode::invalid_argument, "unknown application '" + std::string(name) + "'");
}

void ObjectiveProfile::validate() const {
  const bool any = std::any_of(directions.begin(), directions.end(),
                               [](Direction d) { return d != Direction::ignore; });
  require(any, ErrorCode::invalid_argument, "objective profile ignores every target");
}

ObjectiveProfile objective_profile_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) fail(ErrorCode::invalid_argument, "objective profile must be a JSON object");
  ObjectiveProfile p;
  p.application = "custom";
  p.directions.fill(Direction::ignore);
  const nlohmann::ordered_json* map = &j;
  if (j.contains("directions")) {
    map = &j.at("directions");
    if (j.contains("application")) p.application = j.at("application").get<std::string>();
  }
  for (const auto& [key, value] : map->items()) {
    auto t = target_from_name(key);
    if (!t) fail(ErrorCode::invalid_argument, "unknown target '" + key + "' in objective profile");
    p.directions[index(*t)] = direction_from_string(value.get<std::string>());
  }
  p.validate();
  return p;
}

nlohmann::ordered_json to_json(const ObjectiveProfile& p) {
  nlohmann::ordered_json dirs = nlohmann::ordered_json::object();
  for (std::size_t t = 0; t < kTargetCount; ++t) dirs[std::string(kTargetNames[t])] = to_string(p.directions[t]);
  return {{"application", p.application}, {"directions", dirs}};
}

void GaConfig::validate() const {
  require(population >= 2, ErrorCode::invalid_argument, "population must be at least 2");
  require(crossover_prob >= 0.0 && crossover_prob <= 1.0, ErrorCode::invalid_argument,
          "crossover probability must lie in [0, 1]");
  require(mutation_prob >= 0.0 && mutation_prob <= 1.0, ErrorCode::invalid_argument,
          "mutation probability must lie in [0, 1]");
  require(blend_alpha >= 0.0 && mutation_scale >= 0.0 && sigma_truncation >= 0.0, ErrorCode::invalid_argument,
          "blend alpha, mutation scale and sigma truncation must be non-negative");
  require(!lower.empty() && lower.size() == upper.size(), ErrorCode::invalid_argument,
          "bounds must be given for every gene");
  for (std::size_t g = 0; g < lower.size(); ++g) {
    if (!(std::isfinite(lower[g]) && std::isfinite(upper[g]) && lower[g] < upper[g])) {
      fail(ErrorCode::invalid_argument, "gene " + std::to_string(g) + " needs finite bounds with lo < hi");
    }
  }
}

void set_bounds_from_data(GaConfig& config, const Matrix& x) {
  if (x.rows() == 0) fail(ErrorCode::empty_input, "no training rows to take bounds from");
  config.lower.assign(x.cols(), 0.0);
  config.upper.assign(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double lo = x(0, c), hi = x(0, c);
    for (std::size_t r = 1; r < x.rows(); ++r) {
      lo = std::min(lo, x(r, c));
      hi = std::max(hi, x(r, c));
    }
    if (!(lo < hi)) {
      const double pad = 1e-6 * std::max(1.0, std::abs(lo));
      lo -= pad;
      hi += pad;
    }
    config.lower[c] = lo;
    config.upper[c] = hi;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Individual {
  std::vector<double> genes;
  double fitness = kNegInf;
};

class GeneticSearch {
 public:
  GeneticSearch(const ObjectiveFn& objective, const GaConfig& config)
      : objective_(objective), config_(config), rng_(config.seed), dims_(config.lower.size()) {}

  GaRun run() {
    initialize();
    GaRun out;
    track_best();
    out.history.push_back(best_.fitness);
    std::size_t stagnant = 0;
    for (std::size_t gen = 0; gen < config_.generations; ++gen) {
      step();
      const double before = best_.fitness;
      track_best();
      out.history.push_back(best_.fitness);
      stagnant = best_.fitness > before ? 0 : stagnant + 1;
      if (config_.stagnation_limit > 0 && stagnant >= config_.stagnation_limit) break;
    }
    out.best = best_.genes;
    out.best_fitness = best_.fitness;
    out.evaluations = evaluations_;
    return out;
  }

 private:
  double evaluate(std::span<const double> genes) {
    ++evaluations_;
    const double f = objective_(genes);
    return std::isfinite(f) ? f : kNegInf;
  }

  std::vector<double> random_genes() {
    std::vector<double> g(dims_);
    for (std::size_t i = 0; i < dims_; ++i) g[i] = rng_.uniform(config_.lower[i], config_.upper[i]);
    return g;
  }

  // Feasible draws fill the population first; infeasible ones only pad it
  // out if the draw budget runs dry.
  void initialize() {
    const std::size_t budget = 100 * config_.population;
    std::vector<Individual> infeasible;
    std::size_t draws = 0;
    while (pop_.size() < config_.population && draws < budget) {
      Individual ind{random_genes(), 0.0};
      ++draws;
      ind.fitness = evaluate(ind.genes);
      if (ind.fitness == kNegInf) {
        if (infeasible.size() < config_.population) infeasible.push_back(std::move(ind));
      } else {
        pop_.push_back(std::move(ind));
      }
    }
    if (pop_.empty()) {
      fail(ErrorCode::infeasible_bounds,
           "no feasible individual in " + std::to_string(budget) + " random draws within the bounds");
    }
    for (std::size_t i = 0; pop_.size() < config_.population; ++i) pop_.push_back(std::move(infeasible[i]));
  }

  void track_best() {
    for (const auto& ind : pop_) {
      if (best_.genes.empty() || ind.fitness > best_.fitness) best_ = ind;
    }
  }

  std::size_t roulette(std::span<const double> cumulative) {
    const double total = cumulative.back();
    if (total <= 0.0) return rng_.index(cumulative.size());
    const double r = rng_.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    std::size_t k = static_cast<std::size_t>(it - cumulative.begin());
    return std::min(k, cumulative.size() - 1);
  }

  void clip(std::vector<double>& g) const {
    for (std::size_t i = 0; i < dims_; ++i) g[i] = std::clamp(g[i], config_.lower[i], config_.upper[i]);
  }

  void blend(std::vector<double>& a, std::vector<double>& b) {
    for (std::size_t i = 0; i < dims_; ++i) {
      const double lo = std::min(a[i], b[i]);
      const double hi = std::max(a[i], b[i]);
      const double ext = config_.blend_alpha * (hi - lo);
      a[i] = rng_.uniform(lo - ext, hi + ext);
      b[i] = rng_.uniform(lo - ext, hi + ext);
    }
    clip(a);
    clip(b);
  }

  void mutate(std::vector<double>& g) {
    for (std::size_t i = 0; i < dims_; ++i) {
      g[i] += config_.mutation_scale * (config_.upper[i] - config_.lower[i]) * rng_.normal();
    }
    clip(g);
  }

  void step() {
    const std::size_t n = pop_.size();

    // Elites by fitness; ties keep population order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop_[a].fitness > pop_[b].fitness; });

    // Sigma truncation: weight = max(0, f - (mean - c * sd)) over feasible
    // individuals, so pressure tracks the spread rather than the worst outlier.
    double mean = 0.0, sq = 0.0;
    std::size_t feasible = 0;
    for (const auto& ind : pop_) {
      if (ind.fitness == kNegInf) continue;
      ++feasible;
      const double delta = ind.fitness - mean;
      mean += delta / static_cast<double>(feasible);
      sq += delta * (ind.fitness - mean);
    }
    const double sd = feasible ? std::sqrt(sq / static_cast<double>(feasible)) : 0.0;
    const double floor = mean - config_.sigma_truncation * sd;
    std::vector<double> cumulative(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pop_[i].fitness != kNegInf) acc += std::max(0.0, pop_[i].fitness - floor);
      cumulative[i] = acc;
    }
    // All feasible individuals tie: fall back to uniform over the feasible ones.
    if (acc <= 0.0) {
      acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (pop_[i].fitness != kNegInf) acc += 1.0;
        cumulative[i] = acc;
      }
    }

    std::vector<Individual> next;
    next.reserve(n);
    // Small populations keep at least one bred slot.
    const std::size_t elites = std::min(config_.elitism, n - 1);
    for (std::size_t e = 0; e < elites; ++e) next.push_back(pop_[order[e]]);

    const std::size_t n_children = n - elites;
    std::vector<std::vector<double>> children;
    children.reserve(n_children + 1);
    while (children.size() < n_children) {
      std::vector<double> a = pop_[roulette(cumulative)].genes;
      std::vector<double> b = pop_[roulette(cumulative)].genes;
      if (rng_.uniform() < config_.crossover_prob) blend(a, b);
      children.push_back(std::move(a));
      children.push_back(std::move(b));
    }
    children.resize(n_children);
    for (auto& c : children) {
      if (rng_.uniform() < config_.mutation_prob) mutate(c);
    }
    // Random stream is fully consumed before any evaluation.
    for (auto& c : children) {
      Individual ind;
      ind.fitness = evaluate(c);
      ind.genes = std::move(c);
      next.push_back(std::move(ind));
    }
    pop_ = std::move(next);
  }

  const ObjectiveFn& objective_;
  const GaConfig& config_;
  Rng rng_;
  std::size_t dims_;
  std::vector<Individual> pop_;
  Individual best_;
  std::size_t evaluations_ = 0;
};

}  // namespace

GaRun run_ga(const ObjectiveFn& objective, const GaConfig& config) {
  config.validate();
  return GeneticSearch(objective, config).run();
}

// ---------------------------------------------------------------------------

SurrogateSet surrogates_from(std::span<const TrainedTarget> models, ModelKind kind) {
  SurrogateSet set;
  for (const auto& m : models) {
    if (m.kind != kind) continue;
    const TrainedTarget* ptr = &m;
    set[index(m.target)] = Surrogate{[ptr](std::span<const double> x) { return ptr->predict(x); }, m.target_stats};
  }
  return set;
}

double fitness(const SurrogateSet& models, const ObjectiveProfile& profile, std::span<const double> x) {
  profile.validate();
  double total = 0.0;
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    const Direction d = profile.directions[t];
    if (d == Direction::ignore) continue;
    const auto& s = models[t];
    if (!s) fail(ErrorCode::missing_model, "no model for target " + std::string(kTargetNames[t]));
    const double sign = d == Direction::maximize ? 1.0 : -1.0;
    total += sign * (s->predict(x) - s->stats.mean) / s->stats.std;
  }
  return total;
}

GaResult optimize(const SurrogateSet& models, const ObjectiveProfile& profile, const GaConfig& config) {
  profile.validate();
  config.validate();
  require(config.lower.size() == kFeatureCount, ErrorCode::dimension_mismatch,
          "bounds must cover the 11 input features");
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    if (profile.directions[t] != Direction::ignore && !models[t]) {
      fail(ErrorCode::missing_model, "no model for target " + std::string(kTargetNames[t]));
    }
  }

  const ObjectiveFn objective = [&](std::span<const double> genes) {
    FeatureVector fv;
    std::copy(genes.begin(), genes.end(), fv.values.begin());
    if (!composition_feasible(fv)) return kNegInf;
    return fitness(models, profile, genes);
  };
  GaRun run = run_ga(objective, config);

  GaResult out;
  std::copy(run.best.begin(), run.best.end(), out.best_inputs.values.begin());
  out.best_fitness = run.best_fitness;
  out.history = std::move(run.history);
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    if (models[t]) out.predicted_outputs[t] = models[t]->predict(out.best_inputs.values);
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const OptimizationReport& r) {
  using json = nlohmann::ordered_json;
  const auto& c = r.config;
  json bounds = json::object();
  for (std::size_t f = 0; f < c.lower.size(); ++f) {
    const std::string key = f < kFeatureCount ? std::string(kFeatureNames[f]) : "x" + std::to_string(f);
    bounds[key] = {c.lower[f], c.upper[f]};
  }
  json config = {{"population", c.population},
                 {"crossover_prob", c.crossover_prob},
                 {"mutation_prob", c.mutation_prob},
                 {"generations", c.generations},
                 {"stagnation_limit", c.stagnation_limit},
                 {"elitism", c.elitism},
                 {"blend_alpha", c.blend_alpha},
                 {"mutation_scale", c.mutation_scale},
                 {"sigma_truncation", c.sigma_truncation},
                 {"bounds", bounds}};
  json inputs = json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) inputs[std::string(kFeatureNames[f])] = r.result.best_inputs.values[f];
  json outputs = json::object();
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    const auto& v = r.result.predicted_outputs[t];
    outputs[std::string(kTargetNames[t])] = v ? json(*v) : json(nullptr);
  }
  const json profile = to_json(r.profile);
  return {{"schema_version", kSchemaVersion},
          {"tool_version", kToolVersion},
          {"seed", c.seed},
          {"application", r.profile.application},
          {"directions", profile.at("directions")},
          {"config", config},
          {"best_fitness", r.result.best_fitness},
          {"optimum_inputs", inputs},
          {"predicted_outputs", outputs},
          {"history", r.result.history}};
}

OptimizationReport optimization_report_from_json(const nlohmann::ordered_json& j) {
  try {
    OptimizationReport r;
    r.profile = objective_profile_from_json(
        nlohmann::ordered_json{{"application", j.at("application")}, {"directions", j.at("directions")}});
    const auto& c = j.at("config");
    r.config.seed = j.at("seed").get<std::uint64_t>();
    r.config.population = c.at("population").get<std::size_t>();
    r.config.crossover_prob = c.at("crossover_prob").get<double>();
    r.config.mutation_prob = c.at("mutation_prob").get<double>();
    r.config.generations = c.at("generations").get<std::size_t>();
    r.config.stagnation_limit = c.at("stagnation_limit").get<std::size_t>();
    r.config.elitism = c.at("elitism").get<std::size_t>();
    r.config.blend_alpha = c.at("blend_alpha").get<double>();
    r.config.mutation_scale = c.at("mutation_scale").get<double>();
    r.config.sigma_truncation = c.at("sigma_truncation").get<double>();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto& b = c.at("bounds").at(std::string(kFeatureNames[f]));
      r.config.lower.push_back(b.at(0).get<double>());
      r.config.upper.push_back(b.at(1).get<double>());
    }
    r.result.best_fitness = j.at("best_fitness").get<double>();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      r.result.best_inputs.values[f] = j.at("optimum_inputs").at(std::string(kFeatureNames[f])).get<double>();
    }
    for (std::size_t t = 0; t < kTargetCount; ++t) {
      const auto& v = j.at("predicted_outputs").at(std::string(kTargetNames[t]));
      if (!v.is_null()) r.result.predicted_outputs[t] = v.get<double>();
    }
    r.result.history = j.at("history").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("malformed optimization report: ") + e.what());
  }
}

std::string format_table(const OptimizationReport& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "application: " << r.profile.application << "  seed: " << r.config.seed
      << "  fitness: " << r.result.best_fitness << "\n\n";
  out << "optimum inputs\n";
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    out << "  " << kFeatureNames[f];
    for (std::size_t pad = kFeatureNames[f].size(); pad < 16; ++pad) out << ' ';
    out << r.result.best_inputs.values[f] << '\n';
  }
  out << "\npredicted outputs\n";
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    out << "  " << kTargetNames[t];
    for (std::size_t pad = kTargetNames[t].size(); pad < 16; ++pad) out << ' ';
    const auto& v = r.result.predicted_outputs[t];
    if (v) {
      out << *v;
    } else {
      out << "n/a";
    }
    out << "  (" << to_string(r.profile.directions[t]) << ")\n";
  }
  return out.str();
}

}  // namespace htc
