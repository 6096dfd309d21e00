#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>
#include <vector>

#include "blockspec/operator.hpp"
#include "blockspec/rng.hpp"
#include "doctest.h"

using namespace blockspec;

namespace {

// Cyclic Jacobi rotations on a full matrix: an eigensolver that shares no code
// with the Householder + QL path.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i * n + i];
  std::sort(d.rbegin(), d.rend());
  return d;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("blockspec_test_" + name)).string();
}

}  // namespace

TEST_CASE("partition layout") {
  BlockPartition p({2, 3, 1});
  CHECK(p.dim() == 6);
  CHECK(p.blocks() == 3);
  CHECK(p.range(1) == IndexRange{2, 5});
  CHECK(p.block_of(0) == 0);
  CHECK(p.block_of(4) == 1);
  CHECK(p.block_of(5) == 2);
  CHECK(BlockPartition::uniform(4, 5).dim() == 20);
  CHECK_THROWS(BlockPartition({2, 0}));
  CHECK_THROWS(BlockPartition(std::vector<std::size_t>{}));
  CHECK_THROWS(p.block_of(6));
}

TEST_CASE("packed storage and apply") {
  auto rng = make_rng(4, 0);
  const std::size_t n = 13;
  auto g = gaussian_vector(rng, n * n);
  auto m = DenseSymmetric::from_full(n, g, true);
  auto full = m.to_full();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(full[i * n + j] == full[j * n + i]);
      CHECK(full[i * n + j] == doctest::Approx(0.5 * (g[i * n + j] + g[j * n + i])));
    }
  auto x = gaussian_vector(rng, n);
  auto y = m(x);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += full[i * n + j] * x[j];
    CHECK(y[i] == doctest::Approx(s).epsilon(1e-13));
  }
  CHECK(symmetry_defect(m, rng) < 1e-14);
}

TEST_CASE("exact eigenvalues agree with an independent Jacobi solver") {
  for (std::size_t n : {1u, 2u, 3u, 10u, 40u}) {
    auto rng = make_rng(5, n);
    auto m = DenseSymmetric::random_gaussian(n, rng);
    const auto ours = exact_eigenvalues(m);
    const auto ref = jacobi_eigenvalues(m.to_full(), n);
    REQUIRE(ours.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(ours[i] == doctest::Approx(ref[i]).epsilon(1e-10).scale(1.0));
    CHECK(std::is_sorted(ours.rbegin(), ours.rend()));
  }
}

TEST_CASE("random rotation keeps the prescribed spectrum") {
  auto rng = make_rng(6, 0);
  const std::vector<double> eigs{7.0, 3.0, 3.0, -2.0, 0.5};
  auto m = DenseSymmetric::random_rotation(eigs, rng);
  auto got = exact_eigenvalues(m);
  auto want = eigs;
  std::sort(want.rbegin(), want.rend());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(m.trace() == doctest::Approx(11.5));
}

TEST_CASE("tridiagonal eigenvectors diagonalize T") {
  const std::vector<double> d{2, -1, 4, 0.5, 3}, e{1, 0.3, -2, 0.7};
  const auto te = tridiagonal_eigen(d, e, true);
  const std::size_t n = d.size();
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      double tv = d[r] * te.vectors[r * n + c];
      if (r > 0) tv += e[r - 1] * te.vectors[(r - 1) * n + c];
      if (r + 1 < n) tv += e[r] * te.vectors[(r + 1) * n + c];
      CHECK(tv == doctest::Approx(te.values[c] * te.vectors[r * n + c]).epsilon(1e-12).scale(1.0));
    }
    for (std::size_t c2 = 0; c2 < n; ++c2) {
      double s = 0;
      for (std::size_t r = 0; r < n; ++r) s += te.vectors[r * n + c] * te.vectors[r * n + c2];
      CHECK(s == doctest::Approx(c == c2 ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
    }
  }
  CHECK(std::is_sorted(te.values.begin(), te.values.end()));
}

TEST_CASE("block diagonal and principal sub-operators") {
  auto rng = make_rng(7, 0);
  std::vector<DenseSymmetric> blocks{DenseSymmetric::random_gaussian(3, rng), DenseSymmetric::random_gaussian(4, rng)};
  auto bd = std::make_shared<BlockDiagonalOperator>(blocks);
  const auto dense = bd->to_dense();
  auto x = gaussian_vector(rng, 7);
  auto y1 = (*bd)(x), y2 = dense(x);
  for (std::size_t i = 0; i < 7; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
  CHECK(dense(0, 5) == 0.0);

  PrincipalSubOperator sub(bd, {3, 7});
  auto xs = gaussian_vector(rng, 4);
  auto ys = sub(xs), yb = blocks[1](xs);
  for (std::size_t i = 0; i < 4; ++i) CHECK(ys[i] == doctest::Approx(yb[i]).epsilon(1e-14));
  CHECK_THROWS(BlockDiagonalOperator(std::vector<DenseSymmetric>{}));
}

TEST_CASE("condition number") {
  const std::vector<double> e{5000, 3, 1};
  CHECK(condition_number(e) == 5000.0);
  const std::vector<double> bad{1, 0};
  CHECK_THROWS_AS(condition_number(bad), std::domain_error);
}

TEST_CASE("non-finite matrices are rejected by the oracle") {
  DenseSymmetric m(2);
  m.set(0, 1, NAN);
  CHECK_FALSE(m.all_finite());
  CHECK_THROWS(exact_eigenvalues(m));
}

TEST_CASE("matrix and spectrum CSV round trips") {
  auto rng = make_rng(8, 0);
  auto m = DenseSymmetric::random_gaussian(6, rng);
  const auto path = temp_path("matrix.csv");
  write_matrix_csv(path, m);
  const auto back = read_matrix_csv(path);
  REQUIRE(back.dim() == 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(back(i, j) == m(i, j));

  const std::vector<double> eigs{3.5, -1e-300, 2.0 / 3.0};
  const auto sp = temp_path("spectrum.csv");
  write_spectrum_csv(sp, eigs);
  CHECK(read_spectrum_csv(sp) == eigs);
  std::filesystem::remove(path);
  std::filesystem::remove(sp);
}

TEST_CASE("exact eigenvalues of already-reduced matrices") {
  for (const std::vector<double>& d : {std::vector<double>{2, 2, 2}, std::vector<double>{2, 3, 2, 7}, std::vector<double>{5}}) {
    auto got = exact_eigenvalues(DenseSymmetric::diagonal(d));
    auto want = d;
    std::sort(want.rbegin(), want.rend());
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
  }
  // zero column below the diagonal in the middle of the reduction
  DenseSymmetric m(4);
  m.set(0, 0, 1.0);
  m.set(1, 1, 4.0);
  m.set(2, 2, 2.0);
  m.set(3, 3, 3.0);
  m.set(2, 3, 1.0);
  auto got = exact_eigenvalues(m);
  CHECK(got[0] == doctest::Approx(4.0));
  CHECK(got[1] == doctest::Approx(2.5 + std::sqrt(1.25)));
  CHECK(got[2] == doctest::Approx(2.5 - std::sqrt(1.25)));
  CHECK(got[3] == doctest::Approx(1.0));
}
