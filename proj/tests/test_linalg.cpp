#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "treedec/error.hpp"
#include "treedec/linalg.hpp"

using namespace treedec;
using treedec::testing::gaussian;
using treedec::testing::throws_code;

namespace {

ComplexMatrix random_complex(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return treedec::testing::complex_gaussian(r, c, rng);
}

}  // namespace

TEST_CASE("qr of the identity is trivial") {
  const auto f = qr_decompose(Matrix::identity(3));
  CHECK(max_abs(f.q - Matrix::identity(3)) == 0.0);
  CHECK(max_abs(f.r - Matrix::identity(3)) == 0.0);
}

TEST_CASE("qr of a single column 3,4") {
  const auto f = qr_decompose(Matrix{{3.0}, {4.0}});
  CHECK(f.q(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(f.q(1, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(f.r(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("qr of a tall 3x2 matrix reconstructs") {
  const Matrix a{{1, 1}, {0, 1}, {0, 0}};
  const auto f = qr_decompose(a);
  CHECK(f.r.rows() == 2);
  CHECK(f.r(1, 0) == 0.0);
  CHECK(max_abs(f.q * f.r - a) < 1e-9);
  CHECK(f.r(0, 0) > 0.0);
  CHECK(f.r(1, 1) > 0.0);
}

TEST_CASE("qr rejects wide and rank deficient input") {
  CHECK(throws_code(ErrorCode::DimensionMismatch, [] { qr_decompose(Matrix(2, 3, 1.0)); }));
  CHECK(throws_code(ErrorCode::RankDeficient, [] { qr_decompose(Matrix{{1, 2}, {2, 4}, {3, 6}}); }));
}

TEST_CASE("qr property over random tall matrices") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 9);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t cols = static_cast<std::size_t>(dim(rng));
    const std::size_t rows = cols + static_cast<std::size_t>(dim(rng)) - 1;
    const Matrix a = gaussian(rows, cols, rng);
    const auto f = qr_decompose(a);
    const Matrix qtq = f.q.transpose() * f.q;
    REQUIRE(max_abs(qtq - Matrix::identity(cols)) < 1e-9);
    REQUIRE(max_abs(f.q * f.r - a) / max_abs(a) < 1e-9);
    for (std::size_t i = 0; i < cols; ++i) {
      REQUIRE(f.r(i, i) > 0.0);
      for (std::size_t j = 0; j < i; ++j) REQUIRE(f.r(i, j) == 0.0);
    }
  }
}

TEST_CASE("complex embedding of scalars") {
  CHECK(complex_to_real(ComplexMatrix{{Complex(0, 1)}}) == Matrix{{0, -1}, {1, 0}});
  CHECK(complex_to_real(ComplexMatrix{{Complex(1, 0)}}) == Matrix{{1, 0}, {0, 1}});
  CHECK(complex_to_real(ComplexMatrix{{Complex(1, 2)}}) == Matrix{{1, -2}, {2, 1}});
}

TEST_CASE("complex vector embedding stacks real then imaginary parts") {
  const ComplexVector a{Complex(0, 1)};
  CHECK(complex_to_real(std::span<const Complex>(a)) == Vector{0, 1});
  const ComplexVector b{Complex(1, 2), Complex(3, 0)};
  CHECK(complex_to_real(std::span<const Complex>(b)) == Vector{1, 3, 2, 0});
  CHECK(complex_to_real(std::span<const Complex>()).empty());
}

TEST_CASE("complex embedding is a ring homomorphism") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_complex(3, 3, rng);
    const auto b = random_complex(3, 3, rng);
    CHECK(max_abs(complex_to_real(a * b) - complex_to_real(a) * complex_to_real(b)) < 1e-9);
    CHECK(max_abs(complex_to_real(a + b) - (complex_to_real(a) + complex_to_real(b))) < 1e-9);
    const auto u = random_complex(3, 1, rng).column(0);
    const Vector lhs = complex_to_real(a) * std::span<const double>(complex_to_real(std::span<const Complex>(u)));
    const ComplexVector au = a * std::span<const Complex>(u);
    const Vector rhs = complex_to_real(std::span<const Complex>(au));
    CHECK(squared_norm(lhs - rhs) < 1e-18);
  }
}

TEST_CASE("back substitution") {
  const Vector y1{1, 2};
  CHECK(back_substitute(Matrix::identity(2), y1) == Vector{1, 2});
  const Vector y2{3, 1};
  const Vector x = back_substitute(Matrix{{2, 1}, {0, 1}}, y2);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));
  CHECK(throws_code(ErrorCode::SingularDiagonal, [] {
    const Vector y{1, 1};
    back_substitute(Matrix{{1, 0}, {0, 0}}, y);
  }));
}

TEST_CASE("back substitution solves random triangular systems") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = qr_decompose(gaussian(6, 6, rng));
    const Vector y = treedec::testing::gaussian_vector(6, rng);
    const Vector x = back_substitute(f.r, y);
    CHECK(squared_norm((f.r * std::span<const double>(x)) - y) < 1e-18);
  }
}

TEST_CASE("checked integer products detect overflow") {
  const IntMatrix big{{std::int64_t{1} << 62, std::int64_t{1} << 62}};
  const IntMatrix col{{4}, {4}};
  CHECK(throws_code(ErrorCode::Overflow, [&] { multiply_checked(big, col); }));
  const IntMatrix a{{1, 2}, {3, 4}};
  CHECK(multiply_checked(a, a) == IntMatrix{{7, 10}, {15, 22}});
}

TEST_CASE("dimension mismatches throw") {
  CHECK(throws_code(ErrorCode::DimensionMismatch, [] { (void)(Matrix(2, 3) * Matrix(2, 3)); }));
  CHECK(throws_code(ErrorCode::DimensionMismatch, [] { (void)(Matrix(2, 3) + Matrix(3, 2)); }));
}
