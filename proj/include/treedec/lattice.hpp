#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treedec/linalg.hpp"

namespace treedec {

/// Describes the information set U of a lattice code, i.e. the integer labels
/// x whose images G x (+ v) form the codebook.
struct InfoSet {
  enum class Kind {
    Hypercube,       ///< U = {0, ..., q-1}^m
    ConstructionA,   ///< systematic labels of a linear code over Z_q lifted by Construction A
    Unconstrained,   ///< U = Z^m (lattice decoding)
    ExplicitList,    ///< finite enumerated label set (oracles and tests)
  };

  Kind kind = Kind::Unconstrained;
  int q = 0;
  /// ConstructionA: the (m-k) x k parity block P; labels are [u; -floor(P u / q)].
  IntMatrix parity;
  std::vector<IntVector> labels;

  static InfoSet hypercube(int q);
  static InfoSet unconstrained();
  static InfoSet construction_a(IntMatrix parity, int q);
  static InfoSet explicit_list(std::vector<IntVector> labels);

  bool bounded() const noexcept { return kind != Kind::Unconstrained; }
  bool contains(std::span<const std::int64_t> x) const;

  /// Number of free information symbols for a code of dimension m.
  std::size_t information_symbols(std::size_t m) const;
  /// log2 of |U| for dimension m, or +inf when unconstrained.
  double log2_size(std::size_t m) const;
  /// The `index`-th label in a fixed enumeration order (Hypercube,
  /// ConstructionA, ExplicitList only).
  IntVector label_at(std::uint64_t index, std::size_t m) const;
  /// Information symbols carried by a label (the systematic part for
  /// ConstructionA, the whole label otherwise).
  IntVector information(std::span<const std::int64_t> x) const;
};

/// C(Lambda, v, R) with Lambda = {G x}. `signal_power` is the average
/// per-dimension energy of the transmitted points G x + v.
struct LatticeCode {
  Matrix generator;
  Vector translate;
  InfoSet info_set;
  double signal_power = 1.0;

  std::size_t dimension() const noexcept { return generator.cols(); }
  Vector codeword(std::span<const std::int64_t> x) const;  ///< G x + v
  void validate() const;
};

/// Pair (T, T^{-1}) of integer matrices with T * T_inv = I.
struct UnimodularRecord {
  IntMatrix t;
  IntMatrix t_inv;

  static UnimodularRecord identity(std::size_t n);
  std::size_t dimension() const noexcept { return t.rows(); }
};

/// Generator [[I, 0], [P, q I]] of the Construction A lattice of the
/// systematic code with parity block P ((m-k) x k, entries in Z_q).
IntMatrix construction_a(const IntMatrix& parity, int q);

struct LllOptions {
  double delta = 0.99;
  bool deep_insertion = false;
};

struct LllResult {
  Matrix basis;              ///< B * T_inv
  UnimodularRecord record;
};

/// LLL reduction of the columns of B (full column rank, rows >= cols).
/// With deep_insertion the Schnorr-Euchner deep insertion rule is used.
/// T and T_inv are tracked exactly in 64-bit integers; overflow throws.
LllResult lll_reduce(const Matrix& basis, const LllOptions& options = {});

/// max_i sum_{j>i} r_ij^2 / r_ii^2 for upper-triangular R.
double sparsity_index(const Matrix& r);

/// Exact determinant test |det T| == 1.
bool is_unimodular(const IntMatrix& t);

/// Exact determinant (fraction-free elimination, 128-bit intermediates).
std::int64_t determinant(const IntMatrix& a);

struct HnfResult {
  IntMatrix r;               ///< upper triangular, r_ii > r_ij >= 0 for j > i
  UnimodularRecord record;   ///< A = R * T
};

/// Column-style Hermite normal form of a nonsingular integer matrix.
HnfResult hnf_transform(const IntMatrix& a);

}  // namespace treedec
