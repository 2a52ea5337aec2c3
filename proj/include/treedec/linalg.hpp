#pragma once

// Small dense real linear algebra used by the preprocessing and search
// stages. Matrices are row-major and sized at runtime; the problems handled
// here are at most a few hundred dimensions, so no blocking or BLAS.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace treedec {

using Vector = std::vector<double>;
using IntVector = std::vector<std::int64_t>;
using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Reconstruction tolerance (relative) for factorizations.
inline constexpr double kReconstructionTol = 1e-9;
/// Relative threshold below which a triangular diagonal counts as zero.
inline constexpr double kRankTol = 1e-10;

template <typename T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::initializer_list<std::initializer_list<T>> rows);

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<T> column(std::size_t j) const {
    std::vector<T> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
DenseMatrix<T>::DenseMatrix(std::initializer_list<std::initializer_list<T>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    std::size_t n = 0;
    for (const auto& v : r) {
      data_.push_back(v);
      ++n;
    }
    data_.resize(data_.size() + (cols_ - n));  // ragged rows are zero-padded
  }
}

using Matrix = DenseMatrix<double>;
using IntMatrix = DenseMatrix<std::int64_t>;
using ComplexMatrix = DenseMatrix<Complex>;

// Arithmetic. Dimension mismatches throw Error(DimensionMismatch).
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector operator*(const ComplexMatrix& a, std::span<const Complex> x);

Vector operator-(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// Largest absolute entry.
double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);

Matrix to_real(const IntMatrix& a);
Vector to_real(std::span<const std::int64_t> x);
/// Integer vector as a real column multiplied on the left by `a`.
Vector multiply(const Matrix& a, std::span<const std::int64_t> x);

/// Overflow-checked integer products; throw Error(Overflow).
IntMatrix multiply_checked(const IntMatrix& a, const IntMatrix& b);
IntVector multiply_checked(const IntMatrix& a, std::span<const std::int64_t> x);

struct QrFactors {
  Matrix q;  ///< rows x cols, orthonormal columns
  Matrix r;  ///< cols x cols, upper triangular, strictly positive diagonal
};

/// Thin Householder QR of a tall matrix. The sign of each reflection is
/// chosen so that R has a positive diagonal, which makes the factorization
/// unique. Throws RankDeficient when |r_ii| < kRankTol * max column norm,
/// DimensionMismatch when rows < cols.
QrFactors qr_decompose(const Matrix& a);

/// Block embedding [[Re, -Im], [Im, Re]].
Matrix complex_to_real(const ComplexMatrix& m);
/// Stacked embedding [Re(u); Im(u)].
Vector complex_to_real(std::span<const Complex> u);

/// Solves R x = y for square upper-triangular R. Throws SingularDiagonal
/// on an exactly zero diagonal entry.
Vector back_substitute(const Matrix& r, std::span<const double> y);

}  // namespace treedec
