#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "htc/data.hpp"
#include "htc/matrix.hpp"
#include "json.hpp"

namespace htc {

// ---------------------------------------------------------------------------
// Regression metrics

double r_squared(std::span<const double> actual, std::span<const double> predicted);
double rmse(std::span<const double> actual, std::span<const double> predicted);

enum class MaeScale {
  plain,    // mean |residual|
  percent,  // literal "x 100" variant, for comparison only
};
double mae(std::span<const double> actual, std::span<const double> predicted,
           MaeScale scale = MaeScale::plain);

struct MetricsReport {
  double r2 = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
};

MetricsReport compute_metrics(std::span<const double> actual, std::span<const double> predicted);

nlohmann::ordered_json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::ordered_json& j);

// ---------------------------------------------------------------------------
// Rank correlation

// Fractional ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Rank-Pearson Spearman coefficient, valid with ties.
double spearman(std::span<const double> x, std::span<const double> y);

// 1 - 6 sum(d^2) / (n (n^2 - 1)); only defined for tie-free inputs.
double spearman_closed_form(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  // values[i][j]; nullopt when fewer than three joint observations exist or
  // either variable is constant over them.
  std::vector<std::vector<std::optional<double>>> values;
};

inline constexpr std::size_t kMinJointObservations = 3;

// Pairwise-complete Spearman matrix over all 21 schema columns.
CorrelationMatrix correlation_matrix(const Dataset& dataset);

nlohmann::ordered_json to_json(const CorrelationMatrix& m);
void write_csv(const CorrelationMatrix& m, std::ostream& out);

// ---------------------------------------------------------------------------
// Eigen-decomposition and factor analysis

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  std::size_t sweeps = 0;
  bool converged = false;
};

// Cyclic Jacobi rotations; stops when the off-diagonal Frobenius norm drops
// below 1e-12 (relative to the input norm when that exceeds 1) or after 100 sweeps.
SymmetricEigen symmetric_eigen(const Matrix& a);

struct FactorResult {
  std::vector<std::string> labels;
  std::vector<double> eigenvalues;          // descending, >= 0
  std::vector<double> variance_fraction;
  std::vector<double> cumulative_fraction;
  Matrix loadings;                          // variables x factors
  Matrix correlation;                       // Pearson correlation of the selection
  std::size_t n_rows = 0;
};

// Unrotated principal-factor extraction from the Pearson correlation matrix
// of the given columns. Each eigenvector is signed so its largest-magnitude
// entry is positive.
FactorResult factor_analysis(const Matrix& x, std::vector<std::string> labels);

// Uses rows complete on the selected schema columns (0..20).
FactorResult factor_analysis(const Dataset& dataset, std::span<const std::size_t> columns);

nlohmann::ordered_json to_json(const FactorResult& f);
void write_csv(const FactorResult& f, std::ostream& out);

}  // namespace htc
