#include "htc/shapley.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "htc/error.hpp"
#include "htc/rng.hpp"

namespace htc {

ShapExplanation explain(const PredictFn& model, std::span<const double> x, const Matrix& background) {
  const std::size_t d = x.size();
  if (d > kMaxExactFeatures) {
    fail(ErrorCode::too_many_features,
         std::to_string(d) + " features exceed the exact-enumeration limit of 20");
  }
  if (background.rows() == 0) fail(ErrorCode::empty_background, "background set is empty");
  if (background.cols() != d) fail(ErrorCode::dimension_mismatch, "background width differs from x");

  const std::size_t n_coalitions = std::size_t{1} << d;
  std::vector<double> value(n_coalitions);
  std::vector<double> z(d);
  for (std::size_t mask = 0; mask < n_coalitions; ++mask) {
    double sum = 0.0;
    for (std::size_t b = 0; b < background.rows(); ++b) {
      const auto row = background.row(b);
      for (std::size_t i = 0; i < d; ++i) z[i] = (mask >> i) & 1U ? x[i] : row[i];
      sum += model(z);
    }
    value[mask] = sum / static_cast<double>(background.rows());
  }

  // weight(s) = s! (d-s-1)! / d! = 1 / (d * C(d-1, s))
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s) {
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) binom = binom * static_cast<double>(d - 1 - s + k) / static_cast<double>(k);
    weight[s] = 1.0 / (static_cast<double>(d) * binom);
  }

  ShapExplanation out;
  out.feature_values.assign(x.begin(), x.end());
  out.phi.assign(d, 0.0);
  out.base_value = value[0];
  out.prediction = value[n_coalitions - 1];
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < n_coalitions; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[size] * (value[mask | bit] - value[mask]);
    }
    out.phi[i] = phi;
  }
  return out;
}

GlobalImportance global_importance(std::span<const ShapExplanation> explanations) {
  if (explanations.empty()) fail(ErrorCode::empty_input, "no explanations to aggregate");
  const std::size_t d = explanations.front().phi.size();
  GlobalImportance g;
  g.mean_abs_phi.assign(d, 0.0);
  for (const auto& e : explanations) {
    if (e.phi.size() != d) fail(ErrorCode::dimension_mismatch, "explanations differ in feature count");
    for (std::size_t i = 0; i < d; ++i) g.mean_abs_phi[i] += std::abs(e.phi[i]);
  }
  for (double& v : g.mean_abs_phi) v /= static_cast<double>(explanations.size());
  g.ranking.resize(d);
  std::iota(g.ranking.begin(), g.ranking.end(), 0);
  std::stable_sort(g.ranking.begin(), g.ranking.end(), [&](std::size_t a, std::size_t b) {
    return g.mean_abs_phi[a] > g.mean_abs_phi[b];
  });
  return g;
}

GlobalImportance global_importance(const PredictFn& model, const Matrix& rows, const Matrix& background) {
  if (rows.rows() == 0) fail(ErrorCode::empty_input, "no rows to explain");
  std::vector<ShapExplanation> explanations;
  explanations.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) explanations.push_back(explain(model, rows.row(r), background));
  return global_importance(explanations);
}

Matrix sample_background(const Matrix& rows, std::size_t count, std::uint64_t seed) {
  if (rows.rows() == 0) fail(ErrorCode::empty_background, "no rows to sample a background from");
  if (rows.rows() <= count) return rows;
  std::vector<std::size_t> idx(rows.rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return rows.select_rows(idx);
}

PlotTables emit_plot_data(std::span<const ShapExplanation> explanations) {
  if (explanations.empty()) fail(ErrorCode::empty_input, "no explanations to tabulate");
  const std::size_t d = explanations.front().phi.size();
  PlotTables t;
  t.heatmap = Matrix(explanations.size(), d);
  for (std::size_t r = 0; r < explanations.size(); ++r) {
    const auto& e = explanations[r];
    if (e.phi.size() != d || e.feature_values.size() != d) {
      fail(ErrorCode::dimension_mismatch, "explanations differ in feature count");
    }
    for (std::size_t i = 0; i < d; ++i) {
      t.beeswarm.push_back({r, i, e.phi[i], e.feature_values[i]});
      t.heatmap(r, i) = e.phi[i];
    }
    t.heatmap_prediction.push_back(e.prediction);
    t.heatmap_base.push_back(e.base_value);
  }
  t.bar = global_importance(explanations).mean_abs_phi;
  return t;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Fixed two-decimal formatting for SVG coordinates.
std::string coord(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, ptr);
}

std::string_view feature_label(std::span<const std::string_view> names, std::size_t i,
                               std::string& scratch) {
  if (i < names.size()) return names[i];
  scratch = "x" + std::to_string(i);
  return scratch;
}

void write_preamble(std::ostream& out, std::span<const std::string> preamble, std::string_view prefix) {
  for (const auto& line : preamble) out << prefix << line << '\n';
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_beeswarm_csv(const PlotTables& t, std::span<const std::string_view> names, std::ostream& out,
                        std::span<const std::string> preamble) {
  write_preamble(out, preamble, "# ");
  out << "row,feature,phi,feature_value\n";
  std::string scratch;
  for (const auto& p : t.beeswarm) {
    out << p.row << ',' << feature_label(names, p.feature, scratch) << ',' << num(p.phi) << ','
        << num(p.feature_value) << '\n';
  }
}

void write_bar_csv(const PlotTables& t, std::span<const std::string_view> names, std::ostream& out,
                   std::span<const std::string> preamble) {
  write_preamble(out, preamble, "# ");
  out << "feature,mean_abs_phi\n";
  std::string scratch;
  for (std::size_t i = 0; i < t.bar.size(); ++i) {
    out << feature_label(names, i, scratch) << ',' << num(t.bar[i]) << '\n';
  }
}

void write_heatmap_csv(const PlotTables& t, std::span<const std::string_view> names, std::ostream& out,
                       std::span<const std::string> preamble) {
  write_preamble(out, preamble, "# ");
  std::string scratch;
  out << "row";
  for (std::size_t i = 0; i < t.heatmap.cols(); ++i) out << ',' << feature_label(names, i, scratch);
  out << ",base_value,prediction\n";
  for (std::size_t r = 0; r < t.heatmap.rows(); ++r) {
    out << r;
    for (std::size_t i = 0; i < t.heatmap.cols(); ++i) out << ',' << num(t.heatmap(r, i));
    out << ',' << num(t.heatmap_base[r]) << ',' << num(t.heatmap_prediction[r]) << '\n';
  }
}

void write_bar_svg(const PlotTables& t, std::span<const std::string_view> names, std::string_view title,
                   std::ostream& out, std::span<const std::string> preamble) {
  constexpr double kWidth = 800.0, kHeight = 400.0;
  constexpr double kLeft = 160.0, kRight = 100.0, kTop = 40.0, kBottom = 20.0;
  const std::size_t d = t.bar.size();

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t.bar[a] > t.bar[b]; });
  const double max_value = d ? *std::max_element(t.bar.begin(), t.bar.end()) : 0.0;
  const double slot = d ? (kHeight - kTop - kBottom) / static_cast<double>(d) : 0.0;
  const double plot_width = kWidth - kLeft - kRight;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 400\" width=\"800\" height=\"400\">\n";
  for (const auto& line : preamble) out << "<!-- " << xml_escape(line) << " -->\n";
  out << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" fill=\"white\"/>\n";
  out << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";
  std::string scratch;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t f = order[k];
    const double w = max_value > 0.0 ? plot_width * t.bar[f] / max_value : 0.0;
    const double y = kTop + slot * static_cast<double>(k);
    const double h = slot * 0.8;
    out << "<text x=\"" << coord(kLeft - 6.0) << "\" y=\"" << coord(y + h * 0.75)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(feature_label(names, f, scratch)) << "</text>\n";
    out << "<rect x=\"" << coord(kLeft) << "\" y=\"" << coord(y) << "\" width=\"" << coord(w)
        << "\" height=\"" << coord(h) << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << coord(kLeft + w + 4.0) << "\" y=\"" << coord(y + h * 0.75)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << coord(t.bar[f]) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace htc
