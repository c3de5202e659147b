#include "htc/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "htc/error.hpp"

namespace htc {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size()) {
    fail(ErrorCode::length_mismatch,
         std::to_string(a.size()) + " actual vs " + std::to_string(b.size()) + " predicted");
  }
  if (a.size() < min_n) {
    fail(ErrorCode::length_mismatch, "need at least " + std::to_string(min_n) + " values");
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 2);
  const double ybar = mean(actual);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    ss_tot += (actual[i] - ybar) * (actual[i] - ybar);
  }
  if (!(ss_tot > 0.0)) fail(ErrorCode::degenerate_actual, "actual values are all identical");
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 1);
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
  }
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted, MaeScale scale) {
  check_lengths(actual, predicted, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  const double m = s / static_cast<double>(actual.size());
  return scale == MaeScale::percent ? m * 100.0 : m;
}

MetricsReport compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
  return {r_squared(actual, predicted), rmse(actual, predicted), mae(actual, predicted),
          actual.size()};
}

nlohmann::ordered_json to_json(const MetricsReport& m) {
  return {{"r2", m.r2}, {"rmse", m.rmse}, {"mae", m.mae}, {"n", m.n}};
}

MetricsReport metrics_from_json(const nlohmann::ordered_json& j) {
  return {j.at("r2").get<double>(), j.at("rmse").get<double>(), j.at("mae").get<double>(),
          j.at("n").get<std::size_t>()};
}

// ---------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::degenerate_input, "constant input vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 3);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double spearman_closed_form(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 3);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  auto has_ties = [](std::span<const double> r) {
    return std::any_of(r.begin(), r.end(), [](double v) { return v != std::floor(v); }) ||
           [&] {
             std::vector<double> s(r.begin(), r.end());
             std::sort(s.begin(), s.end());
             return std::adjacent_find(s.begin(), s.end()) != s.end();
           }();
  };
  if (has_ties(rx) || has_ties(ry)) {
    fail(ErrorCode::degenerate_input, "closed-form Spearman requires tie-free inputs");
  }
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

CorrelationMatrix correlation_matrix(const Dataset& dataset) {
  if (dataset.size() < kMinJointObservations) {
    fail(ErrorCode::too_few_rows, "correlation matrix needs at least 3 rows");
  }
  CorrelationMatrix m;
  for (std::size_t c = 0; c < kColumnCount; ++c) m.labels.emplace_back(column_name(c));
  m.values.assign(kColumnCount, std::vector<std::optional<double>>(kColumnCount));

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    for (std::size_t j = i; j < kColumnCount; ++j) {
      xs.clear();
      ys.clear();
      for (std::size_t r = 0; r < dataset.size(); ++r) {
        const auto a = dataset.cell(r, i);
        const auto b = dataset.cell(r, j);
        if (a && b) {
          xs.push_back(*a);
          ys.push_back(*b);
        }
      }
      if (xs.size() < kMinJointObservations) continue;
      std::optional<double> rho;
      try {
        rho = (i == j) ? spearman(xs, xs) : spearman(xs, ys);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::degenerate_input) throw;
      }
      if (rho && i == j) rho = 1.0;
      m.values[i][j] = rho;
      m.values[j][i] = rho;
    }
  }
  return m;
}

nlohmann::ordered_json to_json(const CorrelationMatrix& m) {
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  for (const auto& row : m.values) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& v : row) {
      if (v) {
        r.push_back(*v);
      } else {
        r.push_back(nullptr);
      }
    }
    values.push_back(std::move(r));
  }
  return {{"labels", m.labels}, {"values", std::move(values)}};
}

namespace {

void write_number(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

void write_csv(const CorrelationMatrix& m, std::ostream& out) {
  out << "variable";
  for (const auto& l : m.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out << m.labels[i];
    for (const auto& v : m.values[i]) {
      out << ',';
      if (v) write_number(out, *v);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

SymmetricEigen symmetric_eigen(const Matrix& input) {
  const std::size_t n = input.rows();
  if (n == 0 || input.cols() != n) fail(ErrorCode::dimension_mismatch, "matrix must be square");
  Matrix a = input;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double frob = 0.0;
  for (double x : a.data()) frob += x * x;
  const double tol = 1e-12 * std::max(1.0, std::sqrt(frob));

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  SymmetricEigen out;
  constexpr std::size_t kMaxSweeps = 100;
  while (out.sweeps < kMaxSweeps) {
    if (off_norm() < tol) {
      out.converged = true;
      break;
    }
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!out.converged && off_norm() < tol) out.converged = true;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

FactorResult factor_analysis(const Matrix& x, std::vector<std::string> labels) {
  const std::size_t p = x.cols();
  const std::size_t n = x.rows();
  if (p < 2) fail(ErrorCode::invalid_argument, "factor analysis needs at least two columns");
  if (n < 3) fail(ErrorCode::too_few_rows, "factor analysis needs at least three complete rows");
  if (labels.size() != p) fail(ErrorCode::dimension_mismatch, "label count differs from columns");

  Scaler scaler;
  try {
    scaler = Scaler::fit(x);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::constant_column) throw;
    fail(ErrorCode::singular_input, std::string("constant column in selection (") + e.what() + ")");
  }
  const Matrix z = scaler.transform(x);

  FactorResult out;
  out.labels = std::move(labels);
  out.n_rows = n;
  out.correlation = Matrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += z(r, i) * z(r, j);
      const double c = (i == j) ? 1.0 : std::clamp(s / static_cast<double>(n), -1.0, 1.0);
      out.correlation(i, j) = out.correlation(j, i) = c;
    }
  }

  const auto eig = symmetric_eigen(out.correlation);
  out.eigenvalues = eig.values;
  for (double& e : out.eigenvalues) {
    if (e < 0.0 && e >= -1e-10) e = 0.0;
  }
  const double total = std::accumulate(out.eigenvalues.begin(), out.eigenvalues.end(), 0.0);
  double running = 0.0;
  for (double e : out.eigenvalues) {
    out.variance_fraction.push_back(e / total);
    running += e / total;
    out.cumulative_fraction.push_back(running);
  }

  out.loadings = Matrix(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    std::size_t pivot = 0;
    for (std::size_t i = 1; i < p; ++i) {
      if (std::abs(eig.vectors(i, j)) > std::abs(eig.vectors(pivot, j))) pivot = i;
    }
    const double sign = eig.vectors(pivot, j) < 0.0 ? -1.0 : 1.0;
    const double scale = std::sqrt(std::max(out.eigenvalues[j], 0.0));
    for (std::size_t i = 0; i < p; ++i) out.loadings(i, j) = sign * scale * eig.vectors(i, j);
  }
  return out;
}

FactorResult factor_analysis(const Dataset& dataset, std::span<const std::size_t> columns) {
  std::vector<std::string> labels;
  for (std::size_t c : columns) {
    if (c >= kColumnCount) fail(ErrorCode::invalid_argument, "column index out of range");
    labels.emplace_back(column_name(c));
  }
  Matrix x;
  std::vector<double> values(columns.size());
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    bool complete = true;
    for (std::size_t k = 0; k < columns.size() && complete; ++k) {
      const auto v = dataset.cell(r, columns[k]);
      if (v) {
        values[k] = *v;
      } else {
        complete = false;
      }
    }
    if (complete) x.append_row(values);
  }
  if (x.rows() < 3) fail(ErrorCode::too_few_rows, "fewer than three rows complete on the selection");
  return factor_analysis(x, std::move(labels));
}

nlohmann::ordered_json to_json(const FactorResult& f) {
  nlohmann::ordered_json loadings = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < f.loadings.rows(); ++i) {
    auto row = f.loadings.row(i);
    loadings.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"labels", f.labels},
          {"n_rows", f.n_rows},
          {"eigenvalues", f.eigenvalues},
          {"variance_fraction", f.variance_fraction},
          {"cumulative_fraction", f.cumulative_fraction},
          {"loadings", std::move(loadings)}};
}

void write_csv(const FactorResult& f, std::ostream& out) {
  out << "variable";
  for (std::size_t j = 0; j < f.eigenvalues.size(); ++j) out << ",factor_" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < f.labels.size(); ++i) {
    out << f.labels[i];
    for (std::size_t j = 0; j < f.eigenvalues.size(); ++j) {
      out << ',';
      write_number(out, f.loadings(i, j));
    }
    out << '\n';
  }
}

}  // namespace htc
