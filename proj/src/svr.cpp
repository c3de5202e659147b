#include "htc/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <unordered_map>

#include "htc/error.hpp"
#include "htc/rng.hpp"

namespace htc {

void Kernel::validate() const {
  if (kind == Kind::rbf) require(gamma > 0.0, ErrorCode::invalid_argument, "rbf gamma must be > 0");
  if (kind == Kind::polynomial) {
    require(degree >= 1, ErrorCode::invalid_argument, "polynomial degree must be >= 1");
  }
}

std::string Kernel::describe() const {
  switch (kind) {
    case Kind::linear: return "linear";
    case Kind::polynomial:
      return "polynomial(degree=" + std::to_string(degree) + ", coef0=" + std::to_string(coef0) + ")";
    case Kind::rbf: return "rbf(gamma=" + std::to_string(gamma) + ")";
  }
  return "unknown";
}

double kernel_eval(const Kernel& kernel, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::dimension_mismatch, "kernel arguments differ in size");
  switch (kernel.kind) {
    case Kernel::Kind::linear:
      return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    case Kernel::Kind::polynomial: {
      const double base = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) + kernel.coef0;
      double out = 1.0;
      for (int i = 0; i < kernel.degree; ++i) out *= base;
      return out;
    }
    case Kernel::Kind::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      return std::exp(-kernel.gamma * d2);
    }
  }
  return 0.0;
}

void SvrParams::validate() const {
  require(c > 0.0, ErrorCode::invalid_argument, "C must be > 0");
  require(epsilon >= 0.0, ErrorCode::invalid_argument, "epsilon must be >= 0");
  require(tolerance > 0.0, ErrorCode::invalid_argument, "tolerance must be > 0");
  require(max_passes >= 1, ErrorCode::invalid_argument, "max_passes must be >= 1");
  kernel.validate();
}

nlohmann::ordered_json to_json(const Kernel& k) {
  switch (k.kind) {
    case Kernel::Kind::linear: return {{"type", "linear"}};
    case Kernel::Kind::polynomial:
      return {{"type", "polynomial"}, {"degree", k.degree}, {"coef0", k.coef0}};
    case Kernel::Kind::rbf: return {{"type", "rbf"}, {"gamma", k.gamma}};
  }
  return {};
}

Kernel kernel_from_json(const nlohmann::ordered_json& j) {
  const auto type = j.at("type").get<std::string>();
  Kernel k;
  if (type == "linear") {
    k = Kernel::linear();
  } else if (type == "polynomial") {
    k = Kernel::polynomial(j.value("degree", 2), j.value("coef0", 1.0));
  } else if (type == "rbf") {
    k = Kernel::rbf(j.at("gamma").get<double>());
  } else {
    fail(ErrorCode::invalid_argument, "unknown kernel type '" + type + "'");
  }
  k.validate();
  return k;
}

nlohmann::ordered_json to_json(const SvrParams& p) {
  return {{"c", p.c},
          {"epsilon", p.epsilon},
          {"kernel", to_json(p.kernel)},
          {"tolerance", p.tolerance},
          {"max_passes", p.max_passes}};
}

SvrParams svr_params_from_json(const nlohmann::ordered_json& j) {
  SvrParams p;
  p.c = j.value("c", p.c);
  p.epsilon = j.value("epsilon", p.epsilon);
  if (j.contains("kernel")) p.kernel = kernel_from_json(j.at("kernel"));
  p.tolerance = j.value("tolerance", p.tolerance);
  p.max_passes = j.value("max_passes", p.max_passes);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

SvrModel::SvrModel(Matrix support_vectors, std::vector<double> dual_coeffs, double bias,
                   SvrParams params, std::size_t n_features, bool converged)
    : support_vectors_(std::move(support_vectors)),
      dual_coeffs_(std::move(dual_coeffs)),
      bias_(bias),
      params_(params),
      n_features_(n_features),
      converged_(converged) {
  if (support_vectors_.rows() != dual_coeffs_.size()) {
    fail(ErrorCode::dimension_mismatch, "support vector / coefficient count differ");
  }
  if (support_vectors_.rows() > 0 && support_vectors_.cols() != n_features_) {
    fail(ErrorCode::dimension_mismatch, "support vector width differs from n_features");
  }
}

double SvrModel::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    fail(ErrorCode::dimension_mismatch,
         "expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  }
  double f = 0.0;
  for (std::size_t i = 0; i < dual_coeffs_.size(); ++i) {
    f += dual_coeffs_[i] * kernel_eval(params_.kernel, support_vectors_.row(i), x);
  }
  return f + bias_;
}

// ---------------------------------------------------------------------------

namespace {

// Gram-matrix rows. Holds the whole matrix up to kFullCacheRows samples and
// falls back to an LRU of rows with the same memory budget beyond that.
class KernelCache {
 public:
  static constexpr std::size_t kFullCacheRows = 2048;

  KernelCache(const Matrix& x, const Kernel& kernel) : x_(x), kernel_(kernel), n_(x.rows()) {
    if (n_ <= kFullCacheRows) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) {
          const double k = kernel_eval(kernel_, x_.row(i), x_.row(j));
          full_[i * n_ + j] = k;
          full_[j * n_ + i] = k;
        }
      }
    } else {
      capacity_ = std::max<std::size_t>(2, kFullCacheRows * kFullCacheRows / n_);
      diagonal_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) diagonal_[i] = kernel_eval(kernel_, x_.row(i), x_.row(i));
    }
  }

  double diag(std::size_t i) const { return full_.empty() ? diagonal_[i] : full_[i * n_ + i]; }

  // The span stays valid until the next call to row().
  std::span<const double> row(std::size_t i) {
    if (!full_.empty()) return {full_.data() + i * n_, n_};
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->values;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().sample);
      lru_.pop_back();
    }
    Entry e{i, std::vector<double>(n_)};
    for (std::size_t j = 0; j < n_; ++j) e.values[j] = kernel_eval(kernel_, x_.row(i), x_.row(j));
    lru_.push_front(std::move(e));
    index_[i] = lru_.begin();
    return lru_.front().values;
  }

 private:
  struct Entry {
    std::size_t sample;
    std::vector<double> values;
  };

  const Matrix& x_;
  const Kernel& kernel_;
  std::size_t n_;
  std::vector<double> full_;
  std::vector<double> diagonal_;
  std::size_t capacity_ = 0;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

// Dual over 2n variables: t < n holds alpha_t (sign +1), t >= n holds
// alpha*_{t-n} (sign -1). Q_ts = s_t s_u K(row(t), row(u)).
class SmoSolver {
 public:
  SmoSolver(const Matrix& x, std::span<const double> y, const SvrParams& params, std::uint64_t seed)
      : n_(x.rows()), params_(params), cache_(x, params.kernel), alpha_(2 * n_, 0.0), grad_(2 * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      grad_[i] = params.epsilon - y[i];
      grad_[i + n_] = params.epsilon + y[i];
    }
    order_.resize(2 * n_);
    std::iota(order_.begin(), order_.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order_));
  }

  void solve() {
    const std::size_t budget = params_.max_passes * 2 * n_;
    while (true) {
      std::size_t i = 0, j = 0;
      gap_ = select_pair(i, j);
      if (gap_ < params_.tolerance) {
        converged_ = true;
        return;
      }
      if (iterations_ >= budget) return;
      ++iterations_;
      update_pair(i, j);
    }
  }

  std::vector<double> coefficients() const {
    std::vector<double> beta(n_);
    for (std::size_t i = 0; i < n_; ++i) beta[i] = alpha_[i] - alpha_[i + n_];
    return beta;
  }

  // Average of -s_t G_t over free variables; midpoint of the feasible
  // interval when none is free.
  double bias() const {
    double sum = 0.0;
    std::size_t free = 0;
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const double v = -sign(t) * grad_[t];
      if (alpha_[t] > 0.0 && alpha_[t] < params_.c) {
        sum += v;
        ++free;
      }
      if (in_up(t)) up = std::max(up, v);
      if (in_low(t)) low = std::min(low, v);
    }
    if (free > 0) return sum / static_cast<double>(free);
    if (!std::isfinite(up)) return low;
    if (!std::isfinite(low)) return up;
    return 0.5 * (up + low);
  }

  bool converged() const { return converged_; }
  std::size_t iterations() const { return iterations_; }
  double gap() const { return gap_; }

 private:
  double sign(std::size_t t) const { return t < n_ ? 1.0 : -1.0; }
  std::size_t sample(std::size_t t) const { return t < n_ ? t : t - n_; }

  bool in_up(std::size_t t) const {
    return t < n_ ? alpha_[t] < params_.c : alpha_[t] > 0.0;
  }
  bool in_low(std::size_t t) const {
    return t < n_ ? alpha_[t] > 0.0 : alpha_[t] < params_.c;
  }

  // i maximizes -s_t G_t over I_up. j is drawn from the I_low rows violating
  // against i and maximizes the second-order decrease b^2 / a of the dual.
  // Returns the gap m - M.
  double select_pair(std::size_t& i, std::size_t& j) {
    constexpr double kTau = 1e-12;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t t : order_) {
      const double v = -sign(t) * grad_[t];
      if (in_up(t) && v > m) {
        m = v;
        i = t;
      }
    }
    if (!std::isfinite(m)) return 0.0;
    const std::size_t si = sample(i);
    row_i_.assign(cache_.row(si).begin(), cache_.row(si).end());
    const double kii = cache_.diag(si);
    double big_m = std::numeric_limits<double>::infinity();
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t t : order_) {
      if (!in_low(t)) continue;
      const double v = -sign(t) * grad_[t];
      big_m = std::min(big_m, v);
      const double b = m - v;
      if (b <= 0.0) continue;
      const std::size_t st = sample(t);
      double a = kii + cache_.diag(st) - 2.0 * row_i_[st];
      if (a <= 0.0) a = kTau;
      const double gain = b * b / a;
      if (gain > best) {
        best = gain;
        j = t;
        found = true;
      }
    }
    if (!std::isfinite(big_m) || !found) return std::isfinite(big_m) ? m - big_m : 0.0;
    return m - big_m;
  }

  void update_pair(std::size_t i, std::size_t j) {
    constexpr double kTau = 1e-12;
    const double c = params_.c;
    const std::size_t si = sample(i), sj = sample(j);
    const double yi = sign(i), yj = sign(j);
    const double kii = cache_.diag(si), kjj = cache_.diag(sj);
    const double kij = cache_.row(si)[sj];
    const double old_ai = alpha_[i], old_aj = alpha_[j];
    double ai = old_ai, aj = old_aj;

    double quad = kii + kjj - 2.0 * kij;
    if (quad <= 0.0) quad = kTau;
    if (yi != yj) {
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    alpha_[i] = ai;
    alpha_[j] = aj;

    const double di = (ai - old_ai) * yi;
    const double dj = (aj - old_aj) * yj;
    // Copy row i before fetching row j: the LRU may evict it.
    row_i_.assign(cache_.row(si).begin(), cache_.row(si).end());
    const auto row_j = cache_.row(sj);
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const std::size_t s = sample(t);
      grad_[t] += sign(t) * (di * row_i_[s] + dj * row_j[s]);
    }
  }

  std::size_t n_;
  const SvrParams& params_;
  KernelCache cache_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::vector<std::size_t> order_;
  std::vector<double> row_i_;
  std::size_t iterations_ = 0;
  double gap_ = 0.0;
  bool converged_ = false;
};

}  // namespace

SvrFit fit_svr_detailed(const Matrix& x, std::span<const double> y, const SvrParams& params,
                        std::uint64_t seed) {
  params.validate();
  if (x.rows() == 0 || y.empty()) fail(ErrorCode::empty_input, "cannot fit SVR on zero rows");
  if (x.rows() != y.size()) {
    fail(ErrorCode::dimension_mismatch,
         std::to_string(x.rows()) + " feature rows vs " + std::to_string(y.size()) + " targets");
  }
  if (x.rows() < 2) fail(ErrorCode::empty_input, "SVR needs at least two rows");

  SmoSolver solver(x, y, params, seed);
  solver.solve();

  SvrFit fit;
  fit.coefficients = solver.coefficients();
  fit.iterations = solver.iterations();
  fit.gap = solver.gap();

  Matrix svs;
  std::vector<double> coeffs;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (std::abs(fit.coefficients[i]) > kSupportVectorThreshold) {
      svs.append_row(x.row(i));
      coeffs.push_back(fit.coefficients[i]);
    }
  }
  fit.model = SvrModel(std::move(svs), std::move(coeffs), solver.bias(), params, x.cols(),
                       solver.converged());
  return fit;
}

nlohmann::ordered_json to_json(const SvrModel& model) {
  nlohmann::ordered_json svs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < model.support_vectors().rows(); ++i) {
    auto r = model.support_vectors().row(i);
    svs.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"n_features", model.n_features()},
          {"params", to_json(model.params())},
          {"support_vectors", std::move(svs)},
          {"dual_coeffs", model.dual_coeffs()},
          {"bias", model.bias()},
          {"converged", model.converged()}};
}

SvrModel svr_from_json(const nlohmann::ordered_json& j) {
  const auto n_features = j.at("n_features").get<std::size_t>();
  Matrix svs;
  for (const auto& row : j.at("support_vectors")) svs.append_row(row.get<std::vector<double>>());
  return SvrModel(std::move(svs), j.at("dual_coeffs").get<std::vector<double>>(),
                  j.at("bias").get<double>(), svr_params_from_json(j.at("params")), n_features,
                  j.value("converged", true));
}

}  // namespace htc
