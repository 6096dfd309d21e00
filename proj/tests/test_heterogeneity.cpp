#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>
#include <vector>

#include "blockspec/heterogeneity.hpp"
#include "blockspec/quadlab.hpp"
#include "blockspec/slq.hpp"
#include "doctest.h"

using namespace blockspec;

namespace {

SpectralDensity bump(double center, double sigma, const std::vector<double>& grid) {
  const std::vector<double> c{center};
  return smooth_eigenvalues(c, grid, sigma);
}

double normal_pdf(double x, double mu, double s) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / (s * s)) / (s * std::sqrt(2 * M_PI));
}

}  // namespace

TEST_CASE("normalization scales") {
  std::vector<double> ten(10);
  std::iota(ten.rbegin(), ten.rend(), 1.0);  // 10, 9, ..., 1
  const auto n = normalize_spectrum(ten, NormalizationMode::tenth_largest);
  CHECK(n.scale.scale == 1.0);
  CHECK(n.eigenvalues == ten);

  const std::vector<double> fours(6, 4.0);
  for (double v : normalize_spectrum(fours, NormalizationMode::max_abs).eigenvalues) CHECK(v == 1.0);

  const std::vector<double> block3{4998, 4999, 5000};
  const auto b = normalize_spectrum(block3, NormalizationMode::max_abs).eigenvalues;
  CHECK(b[0] == doctest::Approx(0.99960).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.99980).epsilon(1e-12));
  CHECK(b[2] == 1.0);

  const auto fb = spectrum_scale(block3, NormalizationMode::tenth_largest);
  CHECK(fb.mode_used == NormalizationMode::max_abs);
  CHECK_FALSE(fb.warning.empty());

  std::vector<double> indefinite(12, -1.0);
  indefinite[0] = 3.0;
  const auto neg = spectrum_scale(indefinite, NormalizationMode::tenth_largest);
  CHECK(neg.mode_used == NormalizationMode::max_abs);
  CHECK(neg.scale == 3.0);

  const std::vector<double> zeros(5, 0.0);
  CHECK_THROWS_AS(spectrum_scale(zeros, NormalizationMode::max_abs), std::domain_error);
  CHECK(spectrum_scale(zeros, NormalizationMode::none).scale == 1.0);
  CHECK(parse_normalization("max_abs") == NormalizationMode::max_abs);
  CHECK_THROWS(parse_normalization("tenth"));
}

TEST_CASE("density normalization rescales the grid and keeps unit mass") {
  const auto g = uniform_grid(0, 20, 801);
  const auto d = bump(10, 1, g);
  const auto n = normalize_spectrum(d, 10.0);
  CHECK(n.grid.back() == doctest::Approx(2.0));
  CHECK(n.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("js basics") {
  const auto g = uniform_grid(-10, 10, 2001);
  const auto p = bump(-5, 0.3, g), q = bump(5, 0.3, g), r = bump(-4, 0.7, g);
  CHECK(js_distance(p, p) == 0.0);
  CHECK(js_distance(p, q) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(js_distance(p, r) == js_distance(r, p));
  CHECK(js_distance(p, r) > 0.0);
  CHECK(js_distance(p, r) < 1.0);
  CHECK(js_metric(p, r) == doctest::Approx(std::sqrt(js_distance(p, r))));

  SpectralDensity bad = p;
  bad.values[3] = -1e-3;
  CHECK_THROWS(js_distance(bad, q));
}

TEST_CASE("js of two Gaussians one sigma apart against a fine-grid integral") {
  const double s = 0.5;
  const auto g = uniform_grid(-5, 6, 2048);
  const auto p = bump(0, s, g), q = bump(s, s, g);
  const double ours = js_distance(p, q);

  // independent oracle: analytic densities on a 16x finer grid, trapezoid rule
  const std::size_t n = 16 * 2048;
  const double lo = -5, hi = 6, h = (hi - lo) / double(n - 1);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + h * double(i);
    const double a = normal_pdf(x, 0, s), b = normal_pdf(x, s, s), m = 0.5 * (a + b);
    double t = 0;
    if (a > 0) t += 0.5 * a * std::log2(a / m);
    if (b > 0) t += 0.5 * b * std::log2(b / m);
    acc += (i == 0 || i + 1 == n ? 0.5 : 1.0) * t * h;
  }
  CHECK(std::abs(ours - acc) <= 1e-3);
}

TEST_CASE("different grids are resampled onto their union") {
  const auto p = bump(0, 0.4, uniform_grid(-4, 4, 900));
  const auto q = bump(0, 0.4, uniform_grid(-4.1, 4.2, 1100));
  CHECK(js_distance(p, q) < 1e-4);
}

TEST_CASE("pairwise heatmap invariants") {
  const auto g = uniform_grid(-8, 14, 1500);
  std::vector<SpectralDensity> ds{bump(0, 0.5, g), bump(1, 0.5, g), bump(8, 1.0, g), bump(0.5, 2.0, g)};
  const auto r = pairwise_heatmap(ds, NormalizationMode::none, {}, 3);
  REQUIRE(r.blocks() == 4);
  double sum = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(r.at(i, j) == r.at(j, i));
      CHECK(r.at(i, j) >= 0.0);
      CHECK(r.at(i, j) <= 1.0);
      if (i == j) CHECK(r.at(i, j) == 0.0);
      if (i < j) sum += r.at(i, j);
    }
  CHECK(r.js0 == sum / 6);

  // relabeling permutes rows and columns, js0 unchanged
  std::vector<SpectralDensity> perm{ds[2], ds[0], ds[3], ds[1]};
  const auto rp = pairwise_heatmap(perm, NormalizationMode::none);
  CHECK(rp.at(0, 1) == r.at(2, 0));
  CHECK(rp.at(2, 3) == r.at(3, 1));
  CHECK(rp.js0 == doctest::Approx(r.js0).epsilon(1e-15));

  const auto same = pairwise_heatmap({ds[1], ds[1], ds[1]}, NormalizationMode::none);
  CHECK(same.js0 == 0.0);
  const auto two = pairwise_heatmap({ds[0], ds[2]}, NormalizationMode::none);
  CHECK(two.js0 == two.at(0, 1));
  CHECK_THROWS(pairwise_heatmap({ds[0]}, NormalizationMode::none));
}

TEST_CASE("case 3 is far more heterogeneous than case 4") {
  auto js0_of = [](int id) {
    const auto p = make_case(id, 21);
    auto op = std::make_shared<BlockDiagonalOperator>(p.hessian());
    auto spectra = blockwise_densities(op, op->partition(), SlqParams{}, NormalizationMode::tenth_largest);
    return pairwise_heatmap(spectra.densities, NormalizationMode::tenth_largest).js0;
  };
  CHECK(js0_of(3) >= 10 * js0_of(4));
}

TEST_CASE("grid policy") {
  const auto gp = default_grid(1.0, 3.0, 0.01, 2048);
  CHECK(gp.grid.size() == 2048);
  CHECK(gp.sigma == doctest::Approx(0.01 * (gp.grid.back() - gp.grid.front())).epsilon(1e-12));
  CHECK(gp.grid.front() <= 1.0 - 0.1 - 3 * gp.sigma + 1e-12);
  CHECK(gp.grid.back() >= 3.0 + 0.1 + 3 * gp.sigma - 1e-12);
}

TEST_CASE("heatmap CSV round trip and summary line") {
  const auto g = uniform_grid(0, 10, 500);
  const auto r = pairwise_heatmap({bump(2, 0.5, g), bump(3, 0.5, g), bump(7, 0.5, g)}, NormalizationMode::max_abs,
                                  {"a", "b", "c"});
  const auto path = (std::filesystem::temp_directory_path() / "blockspec_test_heatmap.csv").string();
  write_heatmap_csv(path, r);
  const auto back = read_heatmap_csv(path);
  CHECK(back.labels == r.labels);
  CHECK(back.pairwise == r.pairwise);
  CHECK(back.js0 == doctest::Approx(r.js0).epsilon(1e-15));
  CHECK(js0_summary_line(r).find("normalization=max_abs") != std::string::npos);
  std::filesystem::remove(path);
}
