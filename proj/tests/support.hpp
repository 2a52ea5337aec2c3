#pragma once

// Random inputs shared by the unit tests.

#include <random>

#include "treedec/error.hpp"
#include "treedec/linalg.hpp"
#include "treedec/preprocess.hpp"

namespace treedec::testing {

inline Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix a(rows, cols);
  for (auto& v : a.data()) v = n(rng);
  return a;
}

inline Vector gaussian_vector(std::size_t len, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  Vector v(len);
  for (auto& x : v) x = n(rng);
  return v;
}

inline ComplexMatrix complex_gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ComplexMatrix a(rows, cols);
  for (auto& v : a.data()) v = {n(rng), n(rng)};
  return a;
}

inline IntVector random_label(std::size_t m, std::int64_t lo, std::int64_t hi, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  IntVector x(m);
  for (auto& v : x) v = d(rng);
  return x;
}

/// Level-ordered problem from the QR of a Gaussian (m+1) x m matrix, with
/// target R x0 + noise.
inline TreeProblem random_problem(std::size_t m, std::mt19937_64& rng, double noise = 0.6,
                                  InfoSet boundary = InfoSet::unconstrained(), IntVector* sent = nullptr) {
  TreeProblem p;
  const Matrix upper = qr_decompose(gaussian(m + 1, m, rng)).r;
  p.r = Matrix(m, m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j <= k; ++j) p.r(k, j) = upper(m - 1 - k, m - 1 - j);
  std::normal_distribution<double> n;
  const std::int64_t hi = boundary.kind == InfoSet::Kind::Hypercube ? boundary.q - 1 : 3;
  const std::int64_t lo = boundary.kind == InfoSet::Kind::Hypercube ? 0 : -3;
  const IntVector x0 = random_label(m, lo, hi, rng);
  if (sent) *sent = x0;
  p.y = multiply(p.r, x0);
  for (auto& v : p.y) v += noise * n(rng);
  p.boundary = boundary;
  p.back_map.unimodular = UnimodularRecord::identity(m);
  for (std::size_t k = 0; k < m; ++k) p.back_map.level_index.push_back(m - 1 - k);
  p.back_map.translate = Vector(m, 0.0);
  p.back_map.code_generator = Matrix::identity(m);
  p.back_map.info_set = boundary;
  return p;
}

/// True when fn throws treedec::Error with the given code.
template <typename Fn>
bool throws_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return max_abs(a - b); }

}  // namespace treedec::testing
