#pragma once

// Brute-force references for testing. Nothing here shares traversal code
// with the search module: metrics are evaluated from the full residual
// vector and enumeration is by explicit odometer or plain recursion.

#include <cstdint>
#include <set>
#include <span>

#include "treedec/channels.hpp"
#include "treedec/preprocess.hpp"

namespace treedec {

inline constexpr std::uint64_t kOracleLimit = std::uint64_t{1} << 20;

struct OracleResult {
  IntVector label;
  double distance = 0.0;
  bool tie = false;  ///< another label attains the same distance
};

/// arg min over U of |received - H (G x + v)|^2. Ties go to the
/// lexicographically smallest label.
OracleResult exhaustive_ml(const Matrix& h, const LatticeCode& code, std::span<const double> received,
                           std::uint64_t limit = kOracleLimit);
OracleResult exhaustive_ml(const ChannelInstance& instance, std::uint64_t limit = kOracleLimit);

/// |y - R x|^2 for a full level-ordered label.
double oracle_distance(const TreeProblem& problem, std::span<const std::int64_t> label);

struct OracleBox {
  IntVector center;
  IntVector radius;

  /// Box around the rounded unconstrained minimizer L^{-1} y containing
  /// every label within the successive-rounding distance.
  static OracleBox from_babai(const TreeProblem& problem);
  double log2_volume() const;
};

/// Exact minimizer of |y - R x|^2 over the box (and the hypercube when
/// the problem is constrained). `limit` bounds the box volume.
OracleResult box_clps(const TreeProblem& problem, const OracleBox& box, std::uint64_t limit = kOracleLimit);

struct NodeCondition {
  enum class Kind { PohstBudget, MaxCost };
  Kind kind = Kind::PohstBudget;
  double c0 = 0.0;     ///< PohstBudget: sum w <= c0
  double bias = 0.0;   ///< MaxCost: max_j (sum_{i<=j} w_i - b j) < delta
  double delta = 0.0;

  static NodeCondition pohst(double c0) { return {Kind::PohstBudget, c0, 0.0, 0.0}; }
  static NodeCondition max_cost(double b, double d) { return {Kind::MaxCost, 0.0, b, d}; }
};

/// Every node (including the root, as the empty label) whose prefixes all
/// satisfy the condition. Throws TooLarge past `limit` nodes.
std::set<IntVector> enumerate_node_set(const TreeProblem& problem, const NodeCondition& condition,
                                       std::uint64_t limit = std::uint64_t{1} << 22);

}  // namespace treedec
