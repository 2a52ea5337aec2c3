#pragma once

// Preprocessing stage: turns a channel observation r = H (G x + v) + z into
// an integer least-squares problem min |y - R u|^2 over a tree.
//
// Order of transformations:
//   1. left preprocessing   H -> (Q1, R1)          (ZF-DFE or MMSE-DFE)
//   2. right preprocessing  R1 G = Q R T           (none, LLL, ordering, both)
//   3. tree forming         levels numbered in reverse, so that the metric
//                           of level k only involves u_1 .. u_k.
//
// A TreeProblem stores R in level order: r(k, j) with j <= k is the
// coefficient of label component j in the row examined at level k + 1
// (zero-based storage of the one-based levels).

#include <cstdint>
#include <span>
#include <vector>

#include "treedec/lattice.hpp"
#include "treedec/linalg.hpp"

namespace treedec {

enum class LeftMode { ZeroForcing, Mmse };
enum class RightMode { None, Lll, Permute, LllPermute };
enum class BoundaryMode { Lattice, Constrained };

struct LeftPreprocResult {
  Matrix forward;   ///< Q1, n x m
  Matrix backward;  ///< R1, m x m upper triangular
  LeftMode mode = LeftMode::Mmse;
};

/// ZF: H = Q1 R1 (requires rank m). MMSE: [H; I] = [Q1; Q2] R1, so that
/// R1^T R1 = I + H^T H for any shape of H.
LeftPreprocResult left_preprocess(const Matrix& h, LeftMode mode);

struct RightPreprocResult {
  Matrix q;                 ///< orthogonal m x m
  Matrix r;                 ///< upper triangular, positive diagonal
  UnimodularRecord record;  ///< A = Q R T
};

RightPreprocResult right_preprocess(const Matrix& a, RightMode mode, const LllOptions& lll = {});

/// V-BLAST greedy ordering. Returns `order` with order[p] = index of the
/// column of A placed at position p. Positions are filled from the last
/// (detected first) to the first, each time taking the remaining column with
/// the largest norm after projection away from the other remaining columns.
/// Ties keep the original column order (the higher index goes later).
std::vector<std::size_t> vblast_greedy_order(const Matrix& a);

/// Maps search labels (level order) back to information labels and codewords.
struct BackMap {
  UnimodularRecord unimodular;            ///< A = Q R T; information x = T_inv u
  std::vector<std::size_t> level_index;   ///< level k (zero-based) -> coordinate of u
  Vector translate;                       ///< v of the original code
  Matrix code_generator;                  ///< G of the original code
  InfoSet info_set;                       ///< U of the original code
};

struct TreeProblem {
  Matrix r;          ///< level-ordered lower-triangular coefficients
  Vector y;          ///< level-ordered target
  InfoSet boundary;  ///< Hypercube in search coordinates, or Unconstrained
  BackMap back_map;

  std::size_t dimension() const noexcept { return y.size(); }
  bool constrained() const noexcept { return boundary.kind == InfoSet::Kind::Hypercube; }
};

struct PreprocessOptions {
  LeftMode left = LeftMode::Mmse;
  RightMode right = RightMode::LllPermute;
  LllOptions lll;
  BoundaryMode boundary = BoundaryMode::Lattice;
};

/// Everything that depends only on (H, code, options); reused across frames
/// when the channel is fixed.
class Preprocessor {
 public:
  Preprocessor(const Matrix& h, const LatticeCode& code, const PreprocessOptions& options);

  TreeProblem problem(std::span<const double> received) const;

  const LeftPreprocResult& left() const noexcept { return left_; }
  const RightPreprocResult& right() const noexcept { return right_; }
  std::size_t dimension() const noexcept { return right_.r.rows(); }

 private:
  LeftPreprocResult left_;
  RightPreprocResult right_;
  Matrix projection_;  ///< Q^T Q1^T  (m x n)
  Vector offset_;      ///< Q^T R1 v (with v in the normalized scale)
  Matrix level_r_;
  InfoSet boundary_;
  BackMap back_map_;
};

TreeProblem form_tree(std::span<const double> received, const Matrix& h, const LatticeCode& code,
                      const PreprocessOptions& options);

struct BackMapped {
  IntVector info;      ///< information label x
  Vector codeword;     ///< G x + v
  bool out_of_set = false;
};

BackMapped apply_back_map(std::span<const std::int64_t> label, const BackMap& back_map);

/// Inverse of apply_back_map on labels: search label of information label x.
IntVector forward_map(std::span<const std::int64_t> info, const BackMap& back_map);

}  // namespace treedec
