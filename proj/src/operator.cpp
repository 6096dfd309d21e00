#include "blockspec/operator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"
#include "blockspec/kernels.hpp"

namespace blockspec {

std::vector<double> SymmetricOperator::operator()(std::span<const double> x) const {
  std::vector<double> out(dim());
  apply(x, out);
  return out;
}

// ---- BlockPartition ---------------------------------------------------------

BlockPartition::BlockPartition(std::vector<std::size_t> block_sizes) : sizes_(std::move(block_sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("BlockPartition: no blocks");
  offsets_.reserve(sizes_.size() + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] == 0) throw std::invalid_argument("BlockPartition: block " + std::to_string(i) + " has size 0");
    offsets_.push_back(offsets_.back() + sizes_[i]);
  }
}

BlockPartition BlockPartition::uniform(std::size_t blocks, std::size_t block_size) {
  return BlockPartition(std::vector<std::size_t>(blocks, block_size));
}

std::size_t BlockPartition::block_of(std::size_t i) const {
  if (i >= dim()) throw std::out_of_range("BlockPartition::block_of");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

// ---- DenseSymmetric ---------------------------------------------------------

DenseSymmetric::DenseSymmetric(std::size_t n) : n_(n), packed_(n * (n + 1) / 2, 0.0) {}

DenseSymmetric DenseSymmetric::from_full(std::size_t n, std::span<const double> full, bool symmetrize) {
  if (full.size() != n * n) throw std::invalid_argument("DenseSymmetric::from_full: size mismatch");
  DenseSymmetric m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      m.set(i, j, symmetrize ? 0.5 * (full[i * n + j] + full[j * n + i]) : full[i * n + j]);
  return m;
}

DenseSymmetric DenseSymmetric::diagonal(std::span<const double> d) {
  DenseSymmetric m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
  return m;
}

DenseSymmetric DenseSymmetric::identity(std::size_t n, double scale) {
  std::vector<double> d(n, scale);
  return diagonal(d);
}

DenseSymmetric DenseSymmetric::random_rotation(std::span<const double> eigenvalues, Rng& rng) {
  const std::size_t n = eigenvalues.size();
  // Columns of a Gaussian matrix, orthonormalized by Gram-Schmidt applied
  // twice; this is the Q factor of its QR decomposition with positive diag(R).
  auto g = gaussian_vector(rng, n * n);
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) q[c][r] = g[r * n + c];
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < c; ++k) {
        const double proj = kernels::dot(q[k], q[c]);
        kernels::axpy(-proj, q[k], q[c]);
      }
    }
    const double norm = std::sqrt(kernels::dot(q[c], q[c]));
    if (norm == 0.0) throw std::runtime_error("random_rotation: rank-deficient Gaussian draw");
    for (auto& x : q[c]) x /= norm;
  }
  DenseSymmetric m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q[k][i] * eigenvalues[k] * q[k][j];
      m.set(i, j, s);
    }
  return m;
}

DenseSymmetric DenseSymmetric::random_gaussian(std::size_t n, Rng& rng) {
  auto g = gaussian_vector(rng, n * n);
  const double s = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
  DenseSymmetric m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, (g[i * n + j] + g[j * n + i]) * s);
  return m;
}

void DenseSymmetric::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_ || out.size() != n_) throw std::invalid_argument("DenseSymmetric::apply: size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::span<const double> row(packed_.data() + offset(i), n_ - i);
    out[i] += kernels::dot(row, x.subspan(i));
    if (i + 1 < n_) kernels::axpy(x[i], row.subspan(1), out.subspan(i + 1));
  }
}

double DenseSymmetric::operator()(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return packed_[offset(i) + (j - i)];
}

void DenseSymmetric::set(std::size_t i, std::size_t j, double value) {
  if (i > j) std::swap(i, j);
  packed_[offset(i) + (j - i)] = value;
}

std::vector<double> DenseSymmetric::to_full() const {
  std::vector<double> full(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) full[i * n_ + j] = full[j * n_ + i] = (*this)(i, j);
  return full;
}

DenseSymmetric DenseSymmetric::principal_block(IndexRange r) const {
  if (r.end > n_ || r.begin >= r.end) throw std::invalid_argument("principal_block: bad range");
  DenseSymmetric b(r.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i; j < r.size(); ++j) b.set(i, j, (*this)(r.begin + i, r.begin + j));
  return b;
}

double DenseSymmetric::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

bool DenseSymmetric::all_finite() const {
  return std::all_of(packed_.begin(), packed_.end(), [](double v) { return std::isfinite(v); });
}

// ---- other operators ----------------------------------------------------------

void DiagonalOperator::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < diag_.size(); ++i) out[i] = diag_[i] * x[i];
}

namespace {
std::vector<std::size_t> sizes_of(const std::vector<DenseSymmetric>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("block_diagonal: empty block list");
  std::vector<std::size_t> s;
  for (const auto& b : blocks) s.push_back(b.dim());
  return s;
}
}  // namespace

BlockDiagonalOperator::BlockDiagonalOperator(std::vector<DenseSymmetric> blocks)
    : blocks_(std::move(blocks)), partition_(sizes_of(blocks_)) {}

void BlockDiagonalOperator::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim() || out.size() != dim()) throw std::invalid_argument("BlockDiagonalOperator::apply: size mismatch");
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const auto r = partition_.range(l);
    blocks_[l].apply(x.subspan(r.begin, r.size()), out.subspan(r.begin, r.size()));
  }
}

DenseSymmetric BlockDiagonalOperator::to_dense() const {
  DenseSymmetric m(dim());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const auto r = partition_.range(l);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = i; j < r.size(); ++j) m.set(r.begin + i, r.begin + j, blocks_[l](i, j));
  }
  return m;
}

BlockDiagonalOperator block_diagonal(std::vector<DenseSymmetric> blocks) {
  return BlockDiagonalOperator(std::move(blocks));
}

PrincipalSubOperator::PrincipalSubOperator(OperatorPtr parent, IndexRange r)
    : parent_(std::move(parent)), range_(r) {
  if (!parent_) throw std::invalid_argument("PrincipalSubOperator: null parent");
  if (r.begin >= r.end || r.end > parent_->dim()) throw std::invalid_argument("PrincipalSubOperator: bad range");
}

void PrincipalSubOperator::apply(std::span<const double> x, std::span<double> out) const {
  std::vector<double> full_in(parent_->dim(), 0.0), full_out(parent_->dim());
  std::copy(x.begin(), x.end(), full_in.begin() + static_cast<std::ptrdiff_t>(range_.begin));
  parent_->apply(full_in, full_out);
  std::copy_n(full_out.begin() + static_cast<std::ptrdiff_t>(range_.begin), range_.size(), out.begin());
}

double symmetry_defect(const SymmetricOperator& op, Rng& rng, int trials) {
  const std::size_t n = op.dim();
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto u = gaussian_vector(rng, n);
    auto v = gaussian_vector(rng, n);
    const double nu = std::sqrt(kernels::dot(u, u)), nv = std::sqrt(kernels::dot(v, v));
    for (auto& x : u) x /= nu;
    for (auto& x : v) x /= nv;
    const auto au = op(u), av = op(v);
    const double scale = std::sqrt(kernels::dot(au, au));  // ||v|| = 1
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(kernels::dot(u, av) - kernels::dot(v, au)) / scale);
  }
  return worst;
}

// ---- CSV ------------------------------------------------------------------

namespace {
bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end != s.c_str();
}
}  // namespace

void write_matrix_csv(const std::string& path, const DenseSymmetric& m) {
  std::ostringstream out;
  for (std::size_t j = 0; j < m.dim(); ++j) out << (j ? "," : "") << "c" << j;
  out << "\n";
  for (std::size_t i = 0; i < m.dim(); ++i) {
    for (std::size_t j = 0; j < m.dim(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

DenseSymmetric read_matrix_csv(const std::string& path) {
  auto t = read_csv(path, false);
  if (!t.rows.empty() && !looks_numeric(t.rows.front().front())) t.rows.erase(t.rows.begin());
  const std::size_t n = t.rows.size();
  if (n == 0) throw std::runtime_error(path + ": empty matrix");
  std::vector<double> full(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (t.rows[i].size() != n) throw std::runtime_error(path + ": matrix is not square");
    for (std::size_t j = 0; j < n; ++j) full[i * n + j] = parse_double(t.rows[i][j]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(full[i * n + j] - full[j * n + i]) > 1e-12 * (std::abs(full[i * n + j]) + 1.0))
        throw std::runtime_error(path + ": matrix is not symmetric");
  return DenseSymmetric::from_full(n, full);
}

void write_spectrum_csv(const std::string& path, std::span<const double> eigenvalues) {
  std::ostringstream out;
  out << "eigenvalue\n";
  for (double v : eigenvalues) out << format_double(v) << "\n";
  write_file_atomic(path, out.str());
}

std::vector<double> read_spectrum_csv(const std::string& path) {
  auto t = read_csv(path, false);
  std::vector<double> v;
  for (const auto& r : t.rows) {
    if (!looks_numeric(r.front())) continue;
    v.push_back(parse_double(r.front()));
  }
  return v;
}

}  // namespace blockspec
