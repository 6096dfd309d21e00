#pragma once

// Symmetric linear operators and the exact eigensolver used as a testing
// oracle. Operators are immutable after construction and `apply` is const and
// reentrant, so one instance can serve many threads.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blockspec/rng.hpp"

namespace blockspec {

class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;
  virtual std::size_t dim() const = 0;
  /// out = A x. `x` and `out` must not alias.
  virtual void apply(std::span<const double> x, std::span<double> out) const = 0;

  std::vector<double> operator()(std::span<const double> x) const;
};

using OperatorPtr = std::shared_ptr<const SymmetricOperator>;

/// Half-open coordinate range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

/// Contiguous, ordered, disjoint blocks covering [0, dim).
class BlockPartition {
 public:
  BlockPartition() = default;
  explicit BlockPartition(std::vector<std::size_t> block_sizes);

  static BlockPartition uniform(std::size_t blocks, std::size_t block_size);
  static BlockPartition single(std::size_t dim) { return BlockPartition({dim}); }

  std::size_t dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t blocks() const { return sizes_.size(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  IndexRange range(std::size_t block) const { return {offsets_[block], offsets_[block + 1]}; }
  /// Block that owns coordinate i.
  std::size_t block_of(std::size_t i) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

/// Dense symmetric matrix in packed upper-triangular row storage: row i holds
/// a(i,i), a(i,i+1), ..., a(i,n-1).
class DenseSymmetric final : public SymmetricOperator {
 public:
  DenseSymmetric() = default;
  explicit DenseSymmetric(std::size_t n);

  /// From a full row-major n*n matrix. Only the upper triangle is read unless
  /// `symmetrize` is set, in which case (A + A^T)/2 is stored.
  static DenseSymmetric from_full(std::size_t n, std::span<const double> full, bool symmetrize = false);
  static DenseSymmetric diagonal(std::span<const double> d);
  static DenseSymmetric identity(std::size_t n, double scale = 1.0);
  /// Q diag(eigenvalues) Q^T with Q the orthogonal QR factor of a Gaussian matrix.
  static DenseSymmetric random_rotation(std::span<const double> eigenvalues, Rng& rng);
  /// (G + G^T)/sqrt(2n) with G standard Gaussian.
  static DenseSymmetric random_gaussian(std::size_t n, Rng& rng);

  std::size_t dim() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> out) const override;

  using SymmetricOperator::operator();
  double operator()(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double value);
  std::vector<double> to_full() const;
  DenseSymmetric principal_block(IndexRange r) const;
  double trace() const;
  bool all_finite() const;

 private:
  std::size_t offset(std::size_t i) const { return i * n_ - i * (i - 1) / 2; }
  std::size_t n_ = 0;
  std::vector<double> packed_;
};

class DiagonalOperator final : public SymmetricOperator {
 public:
  explicit DiagonalOperator(std::vector<double> diag) : diag_(std::move(diag)) {}
  std::size_t dim() const override { return diag_.size(); }
  void apply(std::span<const double> x, std::span<double> out) const override;

 private:
  std::vector<double> diag_;
};

/// diag(B_1, ..., B_L). Each sub-vector is routed through its own block.
class BlockDiagonalOperator final : public SymmetricOperator {
 public:
  explicit BlockDiagonalOperator(std::vector<DenseSymmetric> blocks);

  std::size_t dim() const override { return partition_.dim(); }
  void apply(std::span<const double> x, std::span<double> out) const override;

  const std::vector<DenseSymmetric>& blocks() const { return blocks_; }
  const BlockPartition& partition() const { return partition_; }
  DenseSymmetric to_dense() const;

 private:
  std::vector<DenseSymmetric> blocks_;
  BlockPartition partition_;
};

/// Principal sub-operator [A]_r: x -> P_r A P_r^T x, evaluated by embedding.
class PrincipalSubOperator final : public SymmetricOperator {
 public:
  PrincipalSubOperator(OperatorPtr parent, IndexRange r);
  std::size_t dim() const override { return range_.size(); }
  void apply(std::span<const double> x, std::span<double> out) const override;

 private:
  OperatorPtr parent_;
  IndexRange range_;
};

/// Wraps a callable; the caller guarantees symmetry.
class FunctionOperator final : public SymmetricOperator {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionOperator(std::size_t n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  std::size_t dim() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> out) const override { fn_(x, out); }

 private:
  std::size_t n_;
  Fn fn_;
};

BlockDiagonalOperator block_diagonal(std::vector<DenseSymmetric> blocks);

/// Largest normalized defect |<u,Av> - <v,Au>| / (||Au|| ||v||) over `trials`
/// random unit pairs.
double symmetry_defect(const SymmetricOperator& op, Rng& rng, int trials = 8);

// ---- exact eigensolver ----------------------------------------------------

/// Eigenvalues (and optionally eigenvectors) of a symmetric tridiagonal matrix
/// by implicit-shift QL iteration. `offdiag` has size n-1.
struct TridiagonalEigen {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // vectors[r * n + c] is component r of the eigenvector for values[c]
};
TridiagonalEigen tridiagonal_eigen(std::span<const double> diag, std::span<const double> offdiag,
                                   bool want_vectors);

/// Eigenvalues of a dense symmetric matrix, sorted descending. Householder
/// reduction to tridiagonal form followed by implicit QL.
std::vector<double> exact_eigenvalues(const DenseSymmetric& m);

constexpr std::size_t kMaxOracleDim = 2000;

/// lambda_max / lambda_min of a descending list.
double condition_number(std::span<const double> eigenvalues_desc);

// ---- CSV ------------------------------------------------------------------

void write_matrix_csv(const std::string& path, const DenseSymmetric& m);
DenseSymmetric read_matrix_csv(const std::string& path);
void write_spectrum_csv(const std::string& path, std::span<const double> eigenvalues);
std::vector<double> read_spectrum_csv(const std::string& path);

}  // namespace blockspec
