#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "treedec/lattice.hpp"

using namespace treedec;
using treedec::testing::gaussian;
using treedec::testing::throws_code;

namespace {

// Gram-Schmidt of the columns of B: returns mu and squared norms.
void gram_schmidt(const Matrix& b, Matrix& mu, Vector& norms) {
  const std::size_t n = b.cols();
  std::vector<Vector> star(n);
  mu = Matrix(n, n);
  norms.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    star[i] = b.column(i);
    for (std::size_t j = 0; j < i; ++j) {
      mu(i, j) = dot(b.column(i), star[j]) / norms[j];
      for (std::size_t r = 0; r < star[i].size(); ++r) star[i][r] -= mu(i, j) * star[j][r];
    }
    norms[i] = squared_norm(star[i]);
  }
}

bool lll_reduced(const Matrix& b, double delta) {
  Matrix mu;
  Vector norms;
  gram_schmidt(b, mu, norms);
  for (std::size_t i = 0; i < b.cols(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(mu(i, j)) > 0.5 + 1e-9) return false;
  for (std::size_t i = 1; i < b.cols(); ++i)
    if (norms[i] < (delta - mu(i, i - 1) * mu(i, i - 1)) * norms[i - 1] * (1.0 - 1e-9)) return false;
  return true;
}

}  // namespace

TEST_CASE("construction A generator blocks") {
  CHECK(construction_a(IntMatrix{{1}}, 2) == IntMatrix{{1, 0}, {1, 2}});
  CHECK(construction_a(IntMatrix(0, 3), 5) == IntMatrix::identity(3));
  CHECK(construction_a(IntMatrix{{1, 1}}, 3) == IntMatrix{{1, 0, 0}, {0, 1, 0}, {1, 1, 3}});
  CHECK(throws_code(ErrorCode::DimensionMismatch, [] { construction_a(IntMatrix{{2}}, 2); }));
}

TEST_CASE("construction A lattice contains every lifted codeword") {
  std::mt19937_64 rng(7);
  for (int q : {2, 3}) {
    for (std::size_t m = 2; m <= 6; ++m) {
      for (std::size_t k = 1; k < m; ++k) {
        IntMatrix p(m - k, k);
        std::uniform_int_distribution<int> d(0, q - 1);
        for (auto& v : p.data()) v = d(rng);
        const IntMatrix g = construction_a(p, q);
        const InfoSet info = InfoSet::construction_a(p, q);
        const auto count = static_cast<std::uint64_t>(std::llround(std::pow(q, static_cast<double>(k))));
        for (std::uint64_t idx = 0; idx < count; ++idx) {
          IntVector u(k);
          std::uint64_t rest = idx;
          for (auto& v : u) {
            v = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(q));
            rest /= static_cast<std::uint64_t>(q);
          }
          // Codeword c = [u; P u mod q] plus a random multiple of q.
          IntVector c(u);
          for (std::size_t r = 0; r < m - k; ++r) {
            std::int64_t s = 0;
            for (std::size_t j = 0; j < k; ++j) s += p(r, j) * u[j];
            c.push_back(s % q);
          }
          std::uniform_int_distribution<int> shift(-2, 2);
          for (auto& v : c) v += q * shift(rng);
          // Solve G x = c over the integers: x_top = c_top, q x_bot = c_bot - P c_top.
          IntVector x(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k));
          for (std::size_t r = 0; r < m - k; ++r) {
            std::int64_t s = c[k + r];
            for (std::size_t j = 0; j < k; ++j) s -= p(r, j) * c[j];
            REQUIRE(s % q == 0);
            x.push_back(s / q);
          }
          REQUIRE(multiply_checked(g, x) == c);
          // The information set label of u maps to the reduced codeword.
          const IntVector label = info.label_at(idx, m);
          REQUIRE(info.contains(label));
          const IntVector cw = multiply_checked(g, label);
          for (auto v : cw) REQUIRE((v >= 0 && v < q));
        }
      }
    }
  }
}

TEST_CASE("lll leaves a reduced basis alone") {
  const auto res = lll_reduce(Matrix::identity(4));
  CHECK(res.basis == Matrix::identity(4));
  CHECK(res.record.t == IntMatrix::identity(4));
}

TEST_CASE("lll of a skewed 2x2 basis finds the shortest vector") {
  const Matrix b{{1, 100}, {0, 1}};
  const auto res = lll_reduce(b);
  CHECK(is_unimodular(res.record.t));
  CHECK(multiply_checked(res.record.t, res.record.t_inv) == IntMatrix::identity(2));
  CHECK(max_abs(b * to_real(res.record.t_inv) - res.basis) < 1e-9);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(squared_norm(res.basis.column(j)) <= squared_norm(b.column(j)) + 1e-9);
  double shortest = std::numeric_limits<double>::infinity();
  for (int z0 = -200; z0 <= 200; ++z0)
    for (int z1 = -200; z1 <= 200; ++z1) {
      if (z0 == 0 && z1 == 0) continue;
      const double a = z0 + 100.0 * z1, c = z1;
      shortest = std::min(shortest, a * a + c * c);
    }
  CHECK(squared_norm(res.basis.column(0)) == doctest::Approx(shortest));
}

TEST_CASE("lll preserves the determinant of integer bases") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> d(-9, 9);
  for (int trial = 0; trial < 100; ++trial) {
    IntMatrix b(6, 6);
    for (auto& v : b.data()) v = d(rng);
    const std::int64_t det = determinant(b);
    if (det == 0) continue;
    for (bool deep : {false, true}) {
      const auto res = lll_reduce(to_real(b), LllOptions{0.99, deep});
      IntMatrix reduced(6, 6);
      for (std::size_t i = 0; i < 36; ++i) reduced.data()[i] = std::llround(res.basis.data()[i]);
      CHECK(std::abs(determinant(reduced)) == std::abs(det));
    }
  }
}

TEST_CASE("lll output satisfies the Lovasz condition") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const Matrix b = gaussian(n, n, rng);
    for (double delta : {0.75, 0.99}) {
      for (bool deep : {false, true}) {
        const auto res = lll_reduce(b, LllOptions{delta, deep});
        REQUIRE(is_unimodular(res.record.t));
        REQUIRE(multiply_checked(res.record.t, res.record.t_inv) == IntMatrix::identity(n));
        REQUIRE(max_abs(b * to_real(res.record.t_inv) - res.basis) < 1e-9 * std::max(1.0, max_abs(b)));
        REQUIRE(lll_reduced(res.basis, delta));
      }
    }
  }
}

TEST_CASE("lll rejects rank deficient bases") {
  CHECK(throws_code(ErrorCode::RankDeficient, [] { lll_reduce(Matrix{{1, 2}, {2, 4}}); }));
}

TEST_CASE("sparsity index") {
  CHECK(sparsity_index(Matrix{{2, 0}, {0, 5}}) == 0.0);
  CHECK(sparsity_index(Matrix{{1, 2}, {0, 1}}) == doctest::Approx(4.0));
  const Matrix r{{1, 3}, {0, 2}};
  CHECK(sparsity_index(10.0 * r) == doctest::Approx(sparsity_index(r)));
  CHECK(throws_code(ErrorCode::SingularDiagonal, [] { sparsity_index(Matrix{{0, 1}, {0, 1}}); }));
}

TEST_CASE("unimodularity") {
  CHECK(is_unimodular(IntMatrix::identity(3)));
  CHECK_FALSE(is_unimodular(IntMatrix{{2, 0}, {0, 1}}));
  CHECK(is_unimodular(IntMatrix{{1, 5}, {0, 1}}));
  CHECK(determinant(IntMatrix{{4, 2}, {2, 3}}) == 8);
}

TEST_CASE("hermite normal form") {
  {
    const auto res = hnf_transform(IntMatrix::identity(3));
    CHECK(res.r == IntMatrix::identity(3));
    CHECK(res.record.t == IntMatrix::identity(3));
  }
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> d(-6, 6);
  std::vector<IntMatrix> cases{IntMatrix{{2, 1}, {0, 1}}, IntMatrix{{4, 2}, {2, 3}}};
  for (int i = 0; i < 100; ++i) {
    IntMatrix a(4, 4);
    for (auto& v : a.data()) v = d(rng);
    if (determinant(a) != 0) cases.push_back(a);
  }
  for (const auto& a : cases) {
    const auto res = hnf_transform(a);
    CHECK(multiply_checked(res.r, res.record.t) == a);
    CHECK(is_unimodular(res.record.t));
    CHECK(multiply_checked(res.record.t, res.record.t_inv) == IntMatrix::identity(a.rows()));
    CHECK(std::abs(determinant(res.r)) == std::abs(determinant(a)));
    for (std::size_t i = 0; i < a.rows(); ++i) {
      CHECK(res.r(i, i) > 0);
      for (std::size_t j = 0; j < i; ++j) CHECK(res.r(i, j) == 0);
      for (std::size_t j = i + 1; j < a.cols(); ++j) {
        CHECK(res.r(i, j) >= 0);
        CHECK(res.r(i, j) < res.r(i, i));
      }
    }
  }
  CHECK(throws_code(ErrorCode::RankDeficient, [] { hnf_transform(IntMatrix{{1, 2}, {2, 4}}); }));
}

TEST_CASE("information set enumeration order and membership") {
  const InfoSet cube = InfoSet::hypercube(3);
  CHECK(cube.label_at(0, 2) == IntVector{0, 0});
  CHECK(cube.label_at(1, 2) == IntVector{0, 1});
  CHECK(cube.label_at(8, 2) == IntVector{2, 2});
  CHECK(cube.contains(IntVector{2, 0}));
  CHECK_FALSE(cube.contains(IntVector{3, 0}));
  CHECK(cube.log2_size(4) == doctest::Approx(4 * std::log2(3.0)));
  CHECK(InfoSet::unconstrained().contains(IntVector{-7, 100}));
  CHECK(std::isinf(InfoSet::unconstrained().log2_size(3)));
  const InfoSet list = InfoSet::explicit_list({{1, 2}, {3, 4}});
  CHECK(list.contains(IntVector{3, 4}));
  CHECK_FALSE(list.contains(IntVector{1, 4}));
}
