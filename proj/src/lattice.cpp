#include "treedec/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "treedec/error.hpp"

namespace treedec {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t add_checked(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorCode::Overflow, "unimodular bookkeeping");
  return out;
}

std::int64_t mul_checked(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorCode::Overflow, "unimodular bookkeeping");
  return out;
}

// col_j += f * col_i  on an integer matrix.
void add_column_multiple(IntMatrix& m, std::size_t j, std::size_t i, std::int64_t f) {
  for (std::size_t r = 0; r < m.rows(); ++r) m(r, j) = add_checked(m(r, j), mul_checked(f, m(r, i)));
}

// row_i += f * row_j  on an integer matrix.
void add_row_multiple(IntMatrix& m, std::size_t i, std::size_t j, std::int64_t f) {
  for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = add_checked(m(i, c), mul_checked(f, m(j, c)));
}

void swap_columns(IntMatrix& m, std::size_t a, std::size_t b) {
  for (std::size_t r = 0; r < m.rows(); ++r) std::swap(m(r, a), m(r, b));
}

void swap_rows(IntMatrix& m, std::size_t a, std::size_t b) {
  for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m(a, c), m(b, c));
}

// Bookkeeping for column operations B <- B E applied to the basis: T_inv
// follows the same column operation and T the inverse row operation.
struct Tracker {
  IntMatrix t;
  IntMatrix t_inv;

  explicit Tracker(std::size_t n) : t(IntMatrix::identity(n)), t_inv(IntMatrix::identity(n)) {}

  void column_axpy(std::size_t j, std::size_t i, std::int64_t q) {  // col_j -= q col_i
    add_column_multiple(t_inv, j, i, -q);
    add_row_multiple(t, i, j, q);
  }
  void swap(std::size_t a, std::size_t b) {
    swap_columns(t_inv, a, b);
    swap_rows(t, a, b);
  }
  // Moves column `from` to position `to` (< from), shifting the others right.
  void rotate(std::size_t to, std::size_t from) {
    for (std::size_t p = from; p > to; --p) swap(p - 1, p);
  }
};

}  // namespace

// --- InfoSet -----------------------------------------------------------------

InfoSet InfoSet::hypercube(int q) {
  if (q < 2) throw Error(ErrorCode::DimensionMismatch, "hypercube alphabet needs q >= 2");
  InfoSet s;
  s.kind = Kind::Hypercube;
  s.q = q;
  return s;
}

InfoSet InfoSet::unconstrained() { return InfoSet{}; }

InfoSet InfoSet::construction_a(IntMatrix parity, int q) {
  if (q < 2) throw Error(ErrorCode::DimensionMismatch, "Construction A needs q >= 2");
  InfoSet s;
  s.kind = Kind::ConstructionA;
  s.q = q;
  s.parity = std::move(parity);
  return s;
}

InfoSet InfoSet::explicit_list(std::vector<IntVector> labels) {
  InfoSet s;
  s.kind = Kind::ExplicitList;
  s.labels = std::move(labels);
  return s;
}

bool InfoSet::contains(std::span<const std::int64_t> x) const {
  switch (kind) {
    case Kind::Unconstrained:
      return true;
    case Kind::Hypercube:
      return std::all_of(x.begin(), x.end(), [this](std::int64_t v) { return v >= 0 && v < q; });
    case Kind::ConstructionA: {
      const std::size_t k = parity.cols();
      if (x.size() != k + parity.rows()) return false;
      for (std::size_t i = 0; i < k; ++i)
        if (x[i] < 0 || x[i] >= q) return false;
      for (std::size_t r = 0; r < parity.rows(); ++r) {
        std::int64_t s = 0;
        for (std::size_t c = 0; c < k; ++c) s += parity(r, c) * x[c];
        if (x[k + r] != -floor_div(s, q)) return false;
      }
      return true;
    }
    case Kind::ExplicitList:
      return std::any_of(labels.begin(), labels.end(), [&](const IntVector& l) {
        return std::equal(l.begin(), l.end(), x.begin(), x.end());
      });
  }
  return false;
}

std::size_t InfoSet::information_symbols(std::size_t m) const {
  return kind == Kind::ConstructionA ? parity.cols() : m;
}

double InfoSet::log2_size(std::size_t m) const {
  switch (kind) {
    case Kind::Unconstrained: return std::numeric_limits<double>::infinity();
    case Kind::Hypercube: return static_cast<double>(m) * std::log2(q);
    case Kind::ConstructionA: return static_cast<double>(parity.cols()) * std::log2(q);
    case Kind::ExplicitList: return labels.empty() ? -std::numeric_limits<double>::infinity()
                                                   : std::log2(static_cast<double>(labels.size()));
  }
  return 0.0;
}

IntVector InfoSet::label_at(std::uint64_t index, std::size_t m) const {
  switch (kind) {
    case Kind::Hypercube: {
      IntVector x(m);
      for (std::size_t i = m; i-- > 0;) {  // last coordinate varies fastest
        x[i] = static_cast<std::int64_t>(index % static_cast<std::uint64_t>(q));
        index /= static_cast<std::uint64_t>(q);
      }
      return x;
    }
    case Kind::ConstructionA: {
      const std::size_t k = parity.cols();
      IntVector x(k + parity.rows());
      for (std::size_t i = k; i-- > 0;) {
        x[i] = static_cast<std::int64_t>(index % static_cast<std::uint64_t>(q));
        index /= static_cast<std::uint64_t>(q);
      }
      for (std::size_t r = 0; r < parity.rows(); ++r) {
        std::int64_t s = 0;
        for (std::size_t c = 0; c < k; ++c) s += parity(r, c) * x[c];
        x[k + r] = -floor_div(s, q);
      }
      return x;
    }
    case Kind::ExplicitList:
      return labels.at(index);
    case Kind::Unconstrained:
      break;
  }
  throw Error(ErrorCode::TooLarge, "cannot enumerate an unconstrained information set");
}

IntVector InfoSet::information(std::span<const std::int64_t> x) const {
  if (kind == Kind::ConstructionA) {
    const std::size_t k = std::min(parity.cols(), x.size());
    return IntVector(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return IntVector(x.begin(), x.end());
}

// --- LatticeCode ---------------------------------------------------------------

Vector LatticeCode::codeword(std::span<const std::int64_t> x) const {
  Vector c = multiply(generator, x);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += translate[i];
  return c;
}

void LatticeCode::validate() const {
  if (!generator.square()) throw Error(ErrorCode::DimensionMismatch, "generator must be square");
  if (translate.size() != generator.rows())
    throw Error(ErrorCode::DimensionMismatch, "translate length must equal the lattice dimension");
  if (info_set.kind == InfoSet::Kind::ConstructionA &&
      info_set.parity.rows() + info_set.parity.cols() != generator.cols())
    throw Error(ErrorCode::DimensionMismatch, "Construction A parity block does not match dimension");
}

UnimodularRecord UnimodularRecord::identity(std::size_t n) {
  return {IntMatrix::identity(n), IntMatrix::identity(n)};
}

// --- Construction A ------------------------------------------------------------

IntMatrix construction_a(const IntMatrix& parity, int q) {
  if (q < 2) throw Error(ErrorCode::DimensionMismatch, "Construction A needs q >= 2");
  const std::size_t k = parity.cols();
  const std::size_t m = k + parity.rows();
  for (std::int64_t v : parity.data())
    if (v < 0 || v >= q) throw Error(ErrorCode::DimensionMismatch, "parity entries must lie in Z_q");
  IntMatrix g(m, m);
  for (std::size_t i = 0; i < k; ++i) g(i, i) = 1;
  for (std::size_t r = 0; r < parity.rows(); ++r) {
    for (std::size_t c = 0; c < k; ++c) g(k + r, c) = parity(r, c);
    g(k + r, k + r) = q;
  }
  return g;
}

// --- LLL -------------------------------------------------------------------------

LllResult lll_reduce(const Matrix& basis, const LllOptions& options) {
  if (!(options.delta > 0.25 && options.delta <= 1.0))
    throw Error(ErrorCode::DimensionMismatch, "LLL delta must lie in (0.25, 1]");
  const std::size_t m = basis.cols();
  Matrix r = qr_decompose(basis).r;
  Tracker tracker(m);

  auto size_reduce = [&](std::size_t k) {
    for (std::size_t i = k; i-- > 0;) {
      const double mu = r(i, k) / r(i, i);
      const double rounded = std::nearbyint(mu);
      if (rounded == 0.0) continue;
      if (std::abs(rounded) > 9.0e15) throw Error(ErrorCode::Overflow, "LLL size reduction coefficient");
      const auto q = static_cast<std::int64_t>(rounded);
      for (std::size_t l = 0; l <= i; ++l) r(l, k) -= rounded * r(l, i);
      tracker.column_axpy(k, i, q);
    }
  };

  // Restores upper-triangular form after columns k-1 and k were swapped.
  auto givens_swap = [&](std::size_t k) {
    for (std::size_t l = 0; l < m; ++l) std::swap(r(l, k - 1), r(l, k));
    const double a = r(k - 1, k - 1);
    const double b = r(k, k - 1);
    const double h = std::hypot(a, b);
    const double c = a / h;
    const double s = b / h;
    for (std::size_t j = k - 1; j < m; ++j) {
      const double x = r(k - 1, j);
      const double y = r(k, j);
      r(k - 1, j) = c * x + s * y;
      r(k, j) = -s * x + c * y;
    }
    r(k, k - 1) = 0.0;
    if (r(k, k) < 0.0)
      for (std::size_t j = k; j < m; ++j) r(k, j) = -r(k, j);
  };

  const std::size_t max_steps = 200000 + 1000 * m * m;
  std::size_t steps = 0;
  std::size_t k = 1;
  while (k < m && steps++ < max_steps) {
    size_reduce(k);
    if (options.deep_insertion) {
      double projected = 0.0;
      for (std::size_t l = 0; l <= k; ++l) projected += r(l, k) * r(l, k);
      std::size_t insert_at = k;
      for (std::size_t i = 0; i < k; ++i) {
        if (projected < options.delta * r(i, i) * r(i, i)) {
          insert_at = i;
          break;
        }
        projected -= r(i, k) * r(i, k);
      }
      if (insert_at == k) {
        ++k;
        continue;
      }
      Matrix permuted(m, m);
      for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t j = 0; j < m; ++j) {
          std::size_t src = j;
          if (j == insert_at) src = k;
          else if (j > insert_at && j <= k) src = j - 1;
          permuted(l, j) = r(l, src);
        }
      }
      r = qr_decompose(permuted).r;
      tracker.rotate(insert_at, k);
      k = std::max<std::size_t>(insert_at, 1);
    } else {
      const double lhs = options.delta * r(k - 1, k - 1) * r(k - 1, k - 1);
      const double rhs = r(k - 1, k) * r(k - 1, k) + r(k, k) * r(k, k);
      if (lhs > rhs) {
        givens_swap(k);
        tracker.swap(k - 1, k);
        k = std::max<std::size_t>(k - 1, 1);
      } else {
        ++k;
      }
    }
  }

  Matrix reduced = basis * to_real(tracker.t_inv);
  return {std::move(reduced), {std::move(tracker.t), std::move(tracker.t_inv)}};
}

// --- Sparsity, determinants, HNF -------------------------------------------------

double sparsity_index(const Matrix& r) {
  if (!r.square()) throw Error(ErrorCode::DimensionMismatch, "sparsity_index needs a square matrix");
  double worst = 0.0;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double d = r(i, i);
    if (d == 0.0) throw Error(ErrorCode::SingularDiagonal, "zero diagonal at " + std::to_string(i));
    double off = 0.0;
    for (std::size_t j = i + 1; j < r.cols(); ++j) off += r(i, j) * r(i, j);
    worst = std::max(worst, off / (d * d));
  }
  return worst;
}

std::int64_t determinant(const IntMatrix& a) {
  if (!a.square()) throw Error(ErrorCode::DimensionMismatch, "determinant needs a square matrix");
  const std::size_t n = a.rows();
  if (n == 0) return 1;
  std::vector<__int128> m(a.data().begin(), a.data().end());
  auto at = [&](std::size_t i, std::size_t j) -> __int128& { return m[i * n + j]; };
  __int128 prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (at(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n && at(p, k) == 0) ++p;
      if (p == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        const __int128 num = at(i, j) * at(k, k) - at(i, k) * at(k, j);
        at(i, j) = num / prev;  // exact by Sylvester's identity
      }
      at(i, k) = 0;
    }
    prev = at(k, k);
  }
  const __int128 det = sign * at(n - 1, n - 1);
  if (det > std::numeric_limits<std::int64_t>::max() || det < std::numeric_limits<std::int64_t>::min())
    throw Error(ErrorCode::Overflow, "determinant exceeds 64 bits");
  return static_cast<std::int64_t>(det);
}

bool is_unimodular(const IntMatrix& t) {
  if (!t.square()) return false;
  const std::int64_t d = determinant(t);
  return d == 1 || d == -1;
}

HnfResult hnf_transform(const IntMatrix& a) {
  if (!a.square()) throw Error(ErrorCode::DimensionMismatch, "hnf_transform needs a square matrix");
  const std::size_t m = a.rows();
  IntMatrix r = a;
  IntMatrix t = IntMatrix::identity(m);
  IntMatrix t_inv = IntMatrix::identity(m);

  // Bottom row first: clear row i left of the diagonal using columns 0..i.
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t j = 0; j < i; ++j) {
      const std::int64_t b = r(i, j);
      if (b == 0) continue;
      const std::int64_t aa = r(i, i);
      // Extended Euclid: s*aa + u*b = g.
      std::int64_t old_r = aa, cur_r = b, old_s = 1, cur_s = 0, old_u = 0, cur_u = 1;
      while (cur_r != 0) {
        const std::int64_t qq = old_r / cur_r;
        old_r = add_checked(old_r, -mul_checked(qq, cur_r)); std::swap(old_r, cur_r);
        old_s = add_checked(old_s, -mul_checked(qq, cur_s)); std::swap(old_s, cur_s);
        old_u = add_checked(old_u, -mul_checked(qq, cur_u)); std::swap(old_u, cur_u);
      }
      const std::int64_t g = old_r, s = old_s, u = old_u;
      const std::int64_t ag = aa / g, bg = b / g;
      // [col_i col_j] <- [col_i col_j] [[s, -bg], [u, ag]]
      auto mix = [&](IntMatrix& mat) {
        for (std::size_t row = 0; row < mat.rows(); ++row) {
          const std::int64_t ci = mat(row, i), cj = mat(row, j);
          mat(row, i) = add_checked(mul_checked(s, ci), mul_checked(u, cj));
          mat(row, j) = add_checked(mul_checked(-bg, ci), mul_checked(ag, cj));
        }
      };
      mix(r);
      mix(t_inv);
      // Inverse acts on rows i, j of T: [[ag, bg], [-u, s]].
      for (std::size_t col = 0; col < m; ++col) {
        const std::int64_t ri = t(i, col), rj = t(j, col);
        t(i, col) = add_checked(mul_checked(ag, ri), mul_checked(bg, rj));
        t(j, col) = add_checked(mul_checked(-u, ri), mul_checked(s, rj));
      }
    }
    if (r(i, i) == 0) throw Error(ErrorCode::RankDeficient, "matrix is singular");
    if (r(i, i) < 0) {
      for (std::size_t row = 0; row < m; ++row) {
        r(row, i) = -r(row, i);
        t_inv(row, i) = -t_inv(row, i);
      }
      for (std::size_t col = 0; col < m; ++col) t(i, col) = -t(i, col);
    }
  }

  // Reduce entries right of each diagonal into [0, r_ii).
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const std::int64_t q = floor_div(r(i, j), r(i, i));
      if (q == 0) continue;
      add_column_multiple(r, j, i, -q);
      add_column_multiple(t_inv, j, i, -q);
      add_row_multiple(t, i, j, q);
    }
  }
  return {std::move(r), {std::move(t), std::move(t_inv)}};
}

}  // namespace treedec
