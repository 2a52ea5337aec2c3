#pragma once

// Tree search over a TreeProblem. One generic branch-and-bound engine
// (gbb_run) parameterized by a SearchPolicy covers the sphere decoders
// (Pohst, VB, SE), the breadth-first heuristics (IR, EP, M, T), the stack
// decoder and Babai rounding. The Fano decoder keeps no node list and has
// its own loop.
//
// Node counting: the root counts as one generated node; every child
// generation adds one.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treedec/preprocess.hpp"

namespace treedec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::uint64_t kDefaultNodeBudget = 1'000'000;

/// w_k for a label of length k >= 1: |y_k - sum_{j<=k} r_{k,j} x_j|^2.
double node_metric(const TreeProblem& problem, std::span<const std::int64_t> label);
/// Sum of w_i over the prefixes of `label`.
double path_metric(const TreeProblem& problem, std::span<const std::int64_t> label);

struct ChildInterval {
  std::int64_t lo = 0;
  std::int64_t hi = -1;
  bool unbounded = false;

  bool empty() const noexcept { return !unbounded && lo > hi; }
};

/// Integers x_{k+1} with w_{k+1} <= budget - path_metric(parent), clipped
/// to the hypercube when the problem is constrained.
ChildInterval child_interval(const TreeProblem& problem, std::span<const std::int64_t> parent,
                             double budget);

/// Children of one node in nondecreasing w: round(c), round(c)+d, round(c)-d,
/// round(c)+2d, ... with d = sign(c - round(c)) and d = +1 when c is an
/// integer. Values outside [lo, hi] are skipped.
class ZigzagEnumerator {
 public:
  ZigzagEnumerator() = default;
  ZigzagEnumerator(double center, std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                   std::int64_t hi = std::numeric_limits<std::int64_t>::max());

  std::optional<std::int64_t> next();

 private:
  std::int64_t base_ = 0;
  std::int64_t step_ = 1;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
  std::uint64_t n_ = 0;
  bool done_ = true;
};

/// Center of the children of `parent` (the unconstrained minimizer of w).
double child_center(const TreeProblem& problem, std::span<const std::int64_t> parent);
ZigzagEnumerator se_child_order(const TreeProblem& problem, std::span<const std::int64_t> parent);

enum class SortRule { Lifo, AscendingCost, LevelThenCost };
enum class GenRule { Zigzag, LowestFirst };
enum class CostRule {
  PathMetric,       ///< f = sum w_i
  Scaled,           ///< f = sum w_i / e_k
  StackLookahead,   ///< f = h(best ungenerated child), h = sum w_i - b k; leaves -inf
};
enum class LeafRule { Keep, TightenMin };
enum class PruneRule { None, MAlgorithm, TAlgorithm };
enum class Termination { Exhaust, FirstLeaf };

struct SearchPolicy {
  std::string name = "custom";
  CostRule cost = CostRule::PathMetric;
  /// t_k for levels 1..m. Empty means +inf everywhere; one entry is used for
  /// every level.
  Vector bound;
  Vector scale;  ///< e_k (Scaled cost); one entry is used for every level
  double bias = 0.0;
  SortRule sort = SortRule::Lifo;
  GenRule gen = GenRule::Zigzag;
  LeafRule leaf = LeafRule::TightenMin;
  PruneRule prune = PruneRule::None;
  std::size_t keep = 0;         ///< M
  double threshold = 0.0;       ///< T
  Termination termination = Termination::Exhaust;
  std::uint64_t node_budget = kDefaultNodeBudget;
  /// Bounds are radii that restart_schedule may relax.
  bool radius_bound = false;
  bool record_trace = false;

  double bound_at(std::size_t level) const;  ///< level is 1-based
  double scale_at(std::size_t level) const;
};

SearchPolicy policy_pohst(double c0);
SearchPolicy policy_vb(double c0);
SearchPolicy policy_se();
SearchPolicy policy_ir(Vector t);
SearchPolicy policy_ep(Vector e);
/// `initial_bound` is required for lattice (unconstrained) problems.
SearchPolicy policy_m_algorithm(std::size_t m_keep, double initial_bound = kInf);
SearchPolicy policy_t_algorithm(double t_param, double initial_bound = kInf);
SearchPolicy policy_stack(double bias);
SearchPolicy policy_babai();

enum class SearchStatus {
  Complete,         ///< a leaf was reached under the policy
  Empty,            ///< no leaf satisfied the bounds
  BudgetExhausted,  ///< node budget hit; decoded label is the Babai point
};

std::string to_string(SearchStatus status);

struct TraceEntry {
  std::size_t level = 0;
  IntVector label;
  double path_metric = 0.0;
  double cost = 0.0;
  double bound = kInf;   ///< t_level for GBB, the threshold T for Fano
  bool accepted = true;  ///< Fano: look-forward passed the threshold test
};

struct SearchOutcome {
  std::optional<IntVector> decoded_label;  ///< level order
  double distance = kInf;
  std::uint64_t node_generations = 0;
  std::uint64_t unique_nodes = 0;
  std::uint32_t restarts = 0;
  SearchStatus status = SearchStatus::Complete;
  bool budget_hit = false;
  std::vector<TraceEntry> trace;
};

SearchOutcome gbb_run(const TreeProblem& problem, const SearchPolicy& policy);

/// The label chosen by successive rounding (first leaf of SE).
IntVector babai_label(const TreeProblem& problem);

struct RestartOptions {
  double factor = 2.0;
  std::uint32_t max_restarts = 64;
  /// Replaces non-positive radii before scaling.
  double floor = 1e-3;
};

/// Runs gbb_run and, while the search space is empty, relaxes radius-type
/// bounds and starts afresh. Generations of failed rounds are accumulated.
SearchOutcome restart_schedule(const TreeProblem& problem, const SearchPolicy& policy,
                               const RestartOptions& options = {});

struct FanoOptions {
  double bias = 1.0;
  double step = 1.0;
  std::uint64_t node_budget = kDefaultNodeBudget;
  bool record_trace = false;
};

SearchOutcome fano_decode(const TreeProblem& problem, const FanoOptions& options);

/// Node-trace text format, one line per generated node:
///   <level> <label> <path_metric> <cost> <bound>
/// label is comma separated ("-" for the root), reals use %.17g, infinities
/// print as inf / -inf. Lines starting with '#' are comments.
void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace);
std::vector<TraceEntry> read_trace(std::istream& in);

}  // namespace treedec
