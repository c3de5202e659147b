#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "htc/cart.hpp"
#include "htc/shapley.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace htc;
using V = std::vector<double>;

namespace {

RegressionTree random_tree(std::mt19937_64& gen, std::size_t d, std::size_t rows) {
  const Matrix x = oracle::gaussian_matrix(rows, d, gen);
  std::normal_distribution<double> nd;
  V y(rows);
  for (auto& v : y) v = nd(gen);
  TreeParams p;
  p.max_depth = 5;
  return fit_tree(x, y, p);
}

}  // namespace

TEST_CASE("additive model with centred background") {
  const Matrix bg = Matrix::from_rows({{-1, 2}, {1, -2}});
  const PredictFn f = [](std::span<const double> v) { return v[0] + v[1]; };
  const auto e = explain(f, V{3, -4}, bg);
  CHECK(e.phi[0] == doctest::Approx(3.0));
  CHECK(e.phi[1] == doctest::Approx(-4.0));
  CHECK(e.base_value == 0.0);
  CHECK(e.prediction == -1.0);
}

TEST_CASE("constant model") {
  const Matrix bg = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const PredictFn f = [](std::span<const double>) { return 2.5; };
  const auto e = explain(f, V{9, 9, 9}, bg);
  for (double p : e.phi) CHECK(p == 0.0);
  CHECK(e.base_value == 2.5);
}

TEST_CASE("input errors") {
  const PredictFn f = [](std::span<const double>) { return 0.0; };
  CHECK(testutil::error_code_of([&] { explain(f, V{1}, Matrix(0, 1)); }) == ErrorCode::empty_background);
  CHECK(testutil::error_code_of([&] { explain(f, V{1, 2}, Matrix(1, 3)); }) == ErrorCode::dimension_mismatch);
  CHECK(testutil::error_code_of([&] { explain(f, V(21, 0.0), Matrix(1, 21)); }) == ErrorCode::too_many_features);
}

TEST_CASE("efficiency and dummy on random trees") {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 3 + t % 6;
    const auto tree = random_tree(gen, d, 30);
    const PredictFn f = [&](std::span<const double> v) { return tree.predict(v); };
    const Matrix bg = oracle::gaussian_matrix(8, d, gen);
    const Matrix x = oracle::gaussian_matrix(1, d, gen);
    const auto e = explain(f, x.row(0), bg);
    double total = e.base_value;
    for (double p : e.phi) total += p;
    CHECK(std::fabs(total - e.prediction) <= 1e-9);

    std::vector<bool> used(d, false);
    for (const auto& n : tree.nodes())
      if (const auto* s = std::get_if<RegressionTree::Split>(&n)) used[s->feature] = true;
    for (std::size_t i = 0; i < d; ++i)
      if (!used[i]) CHECK(e.phi[i] == 0.0);
  }
}

TEST_CASE("symmetric model and background swap attributions") {
  std::mt19937_64 gen(13);
  const PredictFn f = [](std::span<const double> v) { return v[0] * v[1] + std::sin(v[0]) + std::sin(v[1]) + v[2]; };
  for (int t = 0; t < 20; ++t) {
    Matrix bg = oracle::gaussian_matrix(6, 3, gen);
    // Close the background under the 0 <-> 1 swap.
    for (std::size_t r = 0; r < 6; ++r) {
      V swapped{bg(r, 1), bg(r, 0), bg(r, 2)};
      bg.append_row(swapped);
    }
    const Matrix x = oracle::gaussian_matrix(1, 3, gen);
    const V xs{x(0, 1), x(0, 0), x(0, 2)};
    const auto a = explain(f, x.row(0), bg), b = explain(f, xs, bg);
    CHECK(a.phi[0] == doctest::Approx(b.phi[1]).epsilon(1e-12));
    CHECK(a.phi[1] == doctest::Approx(b.phi[0]).epsilon(1e-12));
  }
}

TEST_CASE("linearity over two trees") {
  std::mt19937_64 gen(14);
  for (int t = 0; t < 20; ++t) {
    const auto t1 = random_tree(gen, 5, 25), t2 = random_tree(gen, 5, 25);
    const PredictFn f = [&](std::span<const double> v) { return t1.predict(v); };
    const PredictFn g = [&](std::span<const double> v) { return t2.predict(v); };
    const PredictFn fg = [&](std::span<const double> v) { return t1.predict(v) + t2.predict(v); };
    const Matrix bg = oracle::gaussian_matrix(10, 5, gen);
    const Matrix x = oracle::gaussian_matrix(1, 5, gen);
    const auto a = explain(f, x.row(0), bg), b = explain(g, x.row(0), bg), c = explain(fg, x.row(0), bg);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::fabs(c.phi[i] - a.phi[i] - b.phi[i]) <= 1e-9);
  }
}

TEST_CASE("global importance") {
  const PredictFn f = [](std::span<const double> v) { return 2 * v[1]; };
  const Matrix bg = Matrix::from_rows({{0, 0, 0}});
  SUBCASE("single row equals |phi|") {
    const Matrix rows = Matrix::from_rows({{1, -3, 2}});
    const auto g = global_importance(f, rows, bg);
    CHECK(g.mean_abs_phi == V{0, 6, 0});
    CHECK(g.ranking == std::vector<std::size_t>{1, 0, 2});
  }
  SUBCASE("opposite signs average in absolute value") {
    const Matrix rows = Matrix::from_rows({{0, 1, 0}, {0, -1, 0}});
    std::vector<ShapExplanation> ex{explain(f, rows.row(0), bg), explain(f, rows.row(1), bg)};
    const auto t = emit_plot_data(ex);
    CHECK(t.bar == V{0, 2, 0});
    CHECK(t.beeswarm.size() == 6);
    CHECK(t.heatmap.rows() == 2);
    CHECK(t.heatmap(1, 1) == -2.0);
  }
}

TEST_CASE("background sampling") {
  std::mt19937_64 gen(15);
  const Matrix rows = oracle::gaussian_matrix(100, 2, gen);
  const Matrix a = sample_background(rows, 10, 4), b = sample_background(rows, 10, 4);
  CHECK(a == b);
  CHECK(a.rows() == 10);
  CHECK(sample_background(rows, 200, 4).rows() == 100);
}

TEST_CASE("csv and svg writers") {
  const PredictFn f = [](std::span<const double> v) { return v[0] - v[1]; };
  const Matrix bg = Matrix::from_rows({{0, 0}});
  std::vector<ShapExplanation> ex{explain(f, V{1, 2}, bg), explain(f, V{3, 1}, bg)};
  const auto t = emit_plot_data(ex);
  const std::vector<std::string_view> names{"a", "b"};
  const std::vector<std::string> pre{"seed=1"};

  std::ostringstream bar, bees, heat, svg;
  write_bar_csv(t, names, bar, pre);
  CHECK(bar.str() == "# seed=1\nfeature,mean_abs_phi\na,2\nb,1.5\n");
  write_beeswarm_csv(t, names, bees);
  CHECK(bees.str().rfind("row,feature,phi,feature_value\n", 0) == 0);
  write_heatmap_csv(t, names, heat);
  CHECK(heat.str().rfind("row,a,b,base_value,prediction\n", 0) == 0);
  write_bar_svg(t, names, "mean |SHAP| for y", svg, pre);
  CHECK(svg.str().find("viewBox=\"0 0 800 400\"") != std::string::npos);
  CHECK(svg.str().find("<!-- seed=1 -->") != std::string::npos);
}
