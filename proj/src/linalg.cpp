#include "treedec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "treedec/error.hpp"

namespace treedec {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorCode::Overflow, "integer product");
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorCode::Overflow, "integer sum");
  return out;
}

}  // namespace

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matrix product");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "matrix-vector product");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix sum");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix difference");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (auto& v : c.data()) v *= s;
  return c;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  require(a.cols() == b.rows(), "complex matrix product");
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "complex matrix sum");
  ComplexMatrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

ComplexVector operator*(const ComplexMatrix& a, std::span<const Complex> x) {
  require(a.cols() == x.size(), "complex matrix-vector product");
  ComplexVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

Vector operator-(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "vector difference");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(squared_norm(a.data())); }

Matrix to_real(const IntMatrix& a) {
  Matrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.data().size(); ++i) r.data()[i] = static_cast<double>(a.data()[i]);
  return r;
}

Vector to_real(std::span<const std::int64_t> x) {
  Vector r(x.size());
  std::transform(x.begin(), x.end(), r.begin(), [](std::int64_t v) { return static_cast<double>(v); });
  return r;
}

Vector multiply(const Matrix& a, std::span<const std::int64_t> x) {
  require(a.cols() == x.size(), "matrix-label product");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * static_cast<double>(x[j]);
    y[i] = s;
  }
  return y;
}

IntMatrix multiply_checked(const IntMatrix& a, const IntMatrix& b) {
  require(a.cols() == b.rows(), "integer matrix product");
  IntMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j)
        c(i, j) = checked_add(c(i, j), checked_mul(a(i, k), b(k, j)));
    }
  return c;
}

IntVector multiply_checked(const IntMatrix& a, std::span<const std::int64_t> x) {
  require(a.cols() == x.size(), "integer matrix-vector product");
  IntVector y(a.rows(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] = checked_add(y[i], checked_mul(a(i, j), x[j]));
  return y;
}

QrFactors qr_decompose(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  if (n < m) throw Error(ErrorCode::DimensionMismatch, "qr_decompose needs rows >= cols");

  double max_col_norm = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a(i, j) * a(i, j);
    max_col_norm = std::max(max_col_norm, std::sqrt(s));
  }

  Matrix work = a;
  // Householder vectors stored column by column, v_k has support k..n-1.
  std::vector<Vector> reflectors;
  reflectors.reserve(m);

  for (std::size_t k = 0; k < m; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k; i < n; ++i) alpha += work(i, k) * work(i, k);
    alpha = std::sqrt(alpha);

    Vector v(n - k, 0.0);
    for (std::size_t i = k; i < n; ++i) v[i - k] = work(i, k);
    // Reflect onto -sign(x0)*alpha*e1 for stability; the diagonal sign is
    // fixed afterwards.
    const double x0 = v[0];
    const double target = (x0 >= 0.0) ? -alpha : alpha;
    v[0] -= target;
    const double vnorm2 = squared_norm(v);
    if (vnorm2 > 0.0 && alpha > 0.0) {
      for (std::size_t j = k; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < n; ++i) s += v[i - k] * work(i, j);
        const double f = 2.0 * s / vnorm2;
        for (std::size_t i = k; i < n; ++i) work(i, j) -= f * v[i - k];
      }
    } else {
      v.assign(n - k, 0.0);
    }
    reflectors.push_back(std::move(v));
  }

  Matrix r(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) r(i, j) = work(i, j);

  // Q = H_0 H_1 ... H_{m-1} applied to the first m columns of I.
  Matrix q(n, m);
  for (std::size_t j = 0; j < m; ++j) q(j, j) = 1.0;
  for (std::size_t kk = m; kk-- > 0;) {
    const Vector& v = reflectors[kk];
    const double vnorm2 = squared_norm(v);
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = kk; i < n; ++i) s += v[i - kk] * q(i, j);
      const double f = 2.0 * s / vnorm2;
      for (std::size_t i = kk; i < n; ++i) q(i, j) -= f * v[i - kk];
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(r(i, i)) < kRankTol * max_col_norm || max_col_norm == 0.0) {
      throw Error(ErrorCode::RankDeficient,
                  "diagonal entry " + std::to_string(i) + " of R below rank tolerance");
    }
    if (r(i, i) < 0.0) {
      for (std::size_t j = i; j < m; ++j) r(i, j) = -r(i, j);
      for (std::size_t row = 0; row < n; ++row) q(row, i) = -q(row, i);
    }
  }
  return {std::move(q), std::move(r)};
}

Matrix complex_to_real(const ComplexMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  Matrix out(2 * n, 2 * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const Complex z = m(i, j);
      out(i, j) = z.real();
      out(i, j + k) = -z.imag();
      out(i + n, j) = z.imag();
      out(i + n, j + k) = z.real();
    }
  }
  return out;
}

Vector complex_to_real(std::span<const Complex> u) {
  Vector out(2 * u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = u[i].real();
    out[i + u.size()] = u[i].imag();
  }
  return out;
}

Vector back_substitute(const Matrix& r, std::span<const double> y) {
  if (!r.square() || r.rows() != y.size())
    throw Error(ErrorCode::DimensionMismatch, "back_substitute");
  const std::size_t n = r.rows();
  Vector x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    if (r(ii, ii) == 0.0)
      throw Error(ErrorCode::SingularDiagonal, "zero diagonal at " + std::to_string(ii));
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= r(ii, j) * x[j];
    x[ii] = s / r(ii, ii);
  }
  return x;
}

}  // namespace treedec
