#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "htc/matrix.hpp"
#include "json.hpp"

namespace htc {

struct Kernel {
  enum class Kind { linear, polynomial, rbf };

  Kind kind = Kind::rbf;
  int degree = 3;
  double coef0 = 0.0;
  double gamma = 0.1;

  static Kernel linear() { return {Kind::linear, 1, 0.0, 1.0}; }
  static Kernel polynomial(int degree, double coef0) { return {Kind::polynomial, degree, coef0, 1.0}; }
  static Kernel rbf(double gamma) { return {Kind::rbf, 1, 0.0, gamma}; }

  void validate() const;
  std::string describe() const;
  bool operator==(const Kernel&) const = default;
};

double kernel_eval(const Kernel& kernel, std::span<const double> a, std::span<const double> b);

struct SvrParams {
  double c = 1.0;
  double epsilon = 0.1;
  Kernel kernel = Kernel::rbf(0.1);
  double tolerance = 1e-3;
  // Iteration budget, in epochs of 2n working-pair updates.
  std::size_t max_passes = 200;

  void validate() const;
  bool operator==(const SvrParams&) const = default;
};

nlohmann::ordered_json to_json(const Kernel& k);
Kernel kernel_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const SvrParams& p);
SvrParams svr_params_from_json(const nlohmann::ordered_json& j);

// Decision function sum_i dual_coeffs[i] * K(sv_i, x) + bias.
class SvrModel {
 public:
  SvrModel() = default;
  SvrModel(Matrix support_vectors, std::vector<double> dual_coeffs, double bias, SvrParams params,
           std::size_t n_features, bool converged = true);

  double predict(std::span<const double> x) const;

  const Matrix& support_vectors() const noexcept { return support_vectors_; }
  const std::vector<double>& dual_coeffs() const noexcept { return dual_coeffs_; }
  double bias() const noexcept { return bias_; }
  const SvrParams& params() const noexcept { return params_; }
  std::size_t n_features() const noexcept { return n_features_; }
  // False when the solver exhausted max_passes before meeting the tolerance.
  bool converged() const noexcept { return converged_; }

 private:
  Matrix support_vectors_;
  std::vector<double> dual_coeffs_;
  double bias_ = 0.0;
  SvrParams params_;
  std::size_t n_features_ = 0;
  bool converged_ = true;
};

inline constexpr double kSupportVectorThreshold = 1e-12;

struct SvrFit {
  SvrModel model;
  // beta_i = alpha_i - alpha_i* for every training row, before pruning.
  std::vector<double> coefficients;
  std::size_t iterations = 0;
  // Violation gap m - M at exit; below params.tolerance when converged.
  double gap = 0.0;
};

// Epsilon-SVR dual solved by SMO. The first working index is the maximal
// KKT violator; the second maximizes the second-order objective decrease.
// The seed only permutes the scan order, which settles ties between equally
// violating samples.
SvrFit fit_svr_detailed(const Matrix& x, std::span<const double> y, const SvrParams& params,
                        std::uint64_t seed = 0);

inline SvrModel fit_svr(const Matrix& x, std::span<const double> y, const SvrParams& params,
                        std::uint64_t seed = 0) {
  return fit_svr_detailed(x, y, params, seed).model;
}

inline double predict_svr(const SvrModel& model, std::span<const double> x) {
  return model.predict(x);
}

nlohmann::ordered_json to_json(const SvrModel& model);
SvrModel svr_from_json(const nlohmann::ordered_json& j);

}  // namespace htc
