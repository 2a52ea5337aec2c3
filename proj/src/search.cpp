#include "treedec/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "treedec/error.hpp"

namespace treedec {
namespace {

using Int128 = __int128;

double residual(const TreeProblem& p, std::span<const std::int64_t> parent) {
  const std::size_t k = parent.size();
  double s = p.y[k];
  for (std::size_t j = 0; j < k; ++j) s -= p.r(k, j) * static_cast<double>(parent[j]);
  return s;
}

std::int64_t to_label_value(double c) {
  const double rounded = std::floor(c + 0.5);
  if (!(std::abs(rounded) < 4.0e18)) throw Error(ErrorCode::Overflow, "child center out of integer range");
  return static_cast<std::int64_t>(rounded);
}

void check_problem(const TreeProblem& p) {
  const std::size_t m = p.dimension();
  if (m == 0 || p.r.rows() != m || p.r.cols() != m)
    throw Error(ErrorCode::DimensionMismatch, "tree problem dimensions");
  for (std::size_t k = 0; k < m; ++k)
    if (p.r(k, k) == 0.0) throw Error(ErrorCode::SingularDiagonal, "zero diagonal in tree problem");
}

std::int64_t box_hi(const TreeProblem& p) { return static_cast<std::int64_t>(p.boundary.q) - 1; }

// Generic branch-and-bound engine.
class Engine {
 public:
  Engine(const TreeProblem& problem, const SearchPolicy& policy)
      : p_(problem), pol_(policy), m_(problem.dimension()), t_(m_ + 1, kInf) {
    for (std::size_t k = 1; k <= m_; ++k) t_[k] = pol_.bound_at(k);
  }

  SearchOutcome run();

 private:
  struct Node {
    std::int32_t parent = -1;
    std::uint32_t level = 0;
    std::int64_t value = 0;
    double path = 0.0;
    double cost = 0.0;
    bool expanded = false;
    double resid = 0.0;  // residual of the row examined by the children
    ZigzagEnumerator zig;
    bool has_pending = false;
    std::int64_t pending = 0;
    std::int64_t next_low = std::numeric_limits<std::int64_t>::min();
  };

  struct Item {
    std::uint32_t level;
    double cost;
    std::uint64_t seq;
    std::int32_t id;
  };

  struct ItemAfter {
    bool by_level;
    bool operator()(const Item& a, const Item& b) const {
      if (by_level && a.level != b.level) return a.level > b.level;
      if (a.cost != b.cost) return a.cost > b.cost;
      return a.seq > b.seq;
    }
  };

  IntVector label_of(std::int32_t id) const {
    IntVector label(nodes_[id].level);
    for (std::int32_t cur = id; cur >= 0 && nodes_[cur].level > 0; cur = nodes_[cur].parent)
      label[nodes_[cur].level - 1] = nodes_[cur].value;
    return label;
  }

  double child_w(const Node& n, std::int64_t v) const {
    const double d = n.resid - p_.r(n.level, n.level) * static_cast<double>(v);
    return d * d;
  }

  double cost_of(const Node& n) const {
    switch (pol_.cost) {
      case CostRule::PathMetric:
        return n.path;
      case CostRule::Scaled:
        return n.level == 0 ? 0.0 : n.path / pol_.scale_at(n.level);
      case CostRule::StackLookahead:
        if (n.level == m_) return -kInf;
        if (!n.has_pending) return kInf;
        return n.path + child_w(n, n.pending) - pol_.bias * static_cast<double>(n.level + 1);
    }
    return n.path;
  }

  void advance_pending(Node& n) {
    auto v = n.zig.next();
    n.has_pending = v.has_value();
    if (v) n.pending = *v;
  }

  void expand(std::int32_t id) {
    Node& n = nodes_[id];
    if (n.expanded || n.level == m_) return;
    const IntVector label = label_of(id);
    n.resid = residual(p_, label);
    n.expanded = true;
    if (pol_.gen == GenRule::Zigzag) {
      const double c = n.resid / p_.r(n.level, n.level);
      n.zig = p_.constrained() ? ZigzagEnumerator(c, 0, box_hi(p_)) : ZigzagEnumerator(c);
      advance_pending(n);
    }
  }

  bool valid(const Node& n) const {
    if (stopped_) return false;
    if (n.level == 0) return true;
    return n.cost < t_[n.level];
  }

  double child_budget(const Node& parent) const {
    const std::size_t k = parent.level + 1;
    if (pol_.cost == CostRule::Scaled) return t_[k] * pol_.scale_at(k);
    return t_[k];
  }

  // Returns the id of a newly generated valid child, or -1 when the parent
  // has no further valid child.
  std::int32_t generate_child(std::int32_t pid);

  void push(std::int32_t id) {
    if (pol_.sort == SortRule::Lifo) {
      stack_.push_back(id);
    } else {
      heap_.push(Item{nodes_[id].level, nodes_[id].cost, seq_++, id});
    }
  }
  bool active_empty() const { return pol_.sort == SortRule::Lifo ? stack_.empty() : heap_.empty(); }
  std::int32_t top() const { return pol_.sort == SortRule::Lifo ? stack_.back() : heap_.top().id; }
  void pop() {
    if (pol_.sort == SortRule::Lifo)
      stack_.pop_back();
    else
      heap_.pop();
  }

  void record(std::int32_t id) {
    if (!pol_.record_trace) return;
    const Node& n = nodes_[id];
    trace_.push_back(TraceEntry{n.level, label_of(id), n.path, n.cost, t_[n.level], true});
  }

  void apply_level_pruning(std::size_t new_level);

  const TreeProblem& p_;
  const SearchPolicy& pol_;
  std::size_t m_;
  Vector t_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> stack_;
  std::priority_queue<Item, std::vector<Item>, ItemAfter> heap_{
      ItemAfter{pol_.sort == SortRule::LevelThenCost}};
  std::uint64_t seq_ = 0;
  std::uint64_t nc_ = 0;
  bool stopped_ = false;
  bool budget_hit_ = false;
  std::vector<bool> level_seen_;
  std::vector<TraceEntry> trace_;
};

std::int32_t Engine::generate_child(std::int32_t pid) {
  expand(pid);
  const std::uint32_t k = nodes_[pid].level;
  const double rkk = p_.r(k, k);
  for (;;) {
    Node& parent = nodes_[pid];
    std::int64_t v = 0;
    if (pol_.gen == GenRule::Zigzag) {
      if (!parent.has_pending) return -1;
      v = parent.pending;
    } else {
      const double budget = child_budget(parent);
      const double remaining = budget - parent.path;
      if (!(remaining >= 0.0)) return -1;
      const double c = parent.resid / rkk;
      const double rad = std::sqrt(remaining) / std::abs(rkk);
      double lo_d = std::ceil(c - rad);
      double hi_d = std::floor(c + rad);
      if (p_.constrained()) {
        lo_d = std::max(lo_d, 0.0);
        hi_d = std::min(hi_d, static_cast<double>(box_hi(p_)));
      }
      if (!std::isfinite(lo_d) || !std::isfinite(hi_d))
        throw Error(ErrorCode::InvalidPolicy, "lowest-first generation needs a finite bound");
      const std::int64_t lo = std::max(static_cast<std::int64_t>(lo_d), parent.next_low);
      if (lo > static_cast<std::int64_t>(hi_d)) return -1;
      v = lo;
    }

    Node child;
    child.parent = pid;
    child.level = k + 1;
    child.value = v;
    child.path = parent.path + child_w(parent, v);

    if (pol_.gen == GenRule::Zigzag) {
      advance_pending(parent);
    } else {
      parent.next_low = v + 1;
    }

    if (pol_.cost != CostRule::StackLookahead) {
      child.cost = cost_of(child);
      if (!(child.cost < t_[child.level])) {
        // Zigzag order is nondecreasing in w, so later siblings fail too.
        if (pol_.gen == GenRule::Zigzag) return -1;
        continue;
      }
      nodes_.push_back(child);
      return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    nodes_.push_back(child);
    const auto cid = static_cast<std::int32_t>(nodes_.size() - 1);
    expand(cid);
    nodes_[cid].cost = cost_of(nodes_[cid]);
    if (!(nodes_[cid].cost < t_[child.level])) {
      nodes_.pop_back();
      return -1;
    }
    return cid;
  }
}

void Engine::apply_level_pruning(std::size_t new_level) {
  if (pol_.prune == PruneRule::None || new_level < 2) return;
  if (level_seen_[new_level]) return;
  level_seen_[new_level] = true;
  const std::size_t k = new_level - 1;
  if (pol_.prune == PruneRule::TAlgorithm) {
    // The best level-k node is the one currently generating (top of ACTIVE).
    const double best = nodes_[top()].cost;
    t_[k] = std::min(t_[k], std::nextafter(best + pol_.threshold, kInf));
    return;
  }
  std::vector<double> costs;
  if (pol_.sort == SortRule::Lifo) {
    for (auto id : stack_)
      if (nodes_[id].level == k) costs.push_back(nodes_[id].cost);
  } else {
    auto copy = heap_;
    while (!copy.empty()) {
      if (copy.top().level == k) costs.push_back(copy.top().cost);
      copy.pop();
    }
  }
  if (costs.size() <= pol_.keep) return;
  std::nth_element(costs.begin(), costs.begin() + static_cast<std::ptrdiff_t>(pol_.keep - 1), costs.end());
  const double mth = costs[pol_.keep - 1];
  t_[k] = std::min(t_[k], std::nextafter(mth, kInf));
}

SearchOutcome Engine::run() {
  level_seen_.assign(m_ + 1, false);
  nodes_.reserve(1024);
  nodes_.push_back(Node{});
  nc_ = 1;
  if (pol_.cost == CostRule::StackLookahead) expand(0);
  nodes_[0].cost = cost_of(nodes_[0]);
  record(0);
  push(0);

  std::int32_t incumbent = -1;
  while (!active_empty() && !stopped_) {
    const std::int32_t id = top();
    if (nodes_[id].level == m_) {
      const double f = nodes_[id].cost;
      if (pol_.leaf == LeafRule::TightenMin) {
        bool all_minus_inf = true;
        for (std::size_t k = 1; k <= m_; ++k) {
          t_[k] = std::min(t_[k], f);
          all_minus_inf = all_minus_inf && t_[k] == -kInf;
        }
        if (all_minus_inf) stopped_ = true;
      }
      if (incumbent < 0 || nodes_[id].path < nodes_[incumbent].path) incumbent = id;
      pop();
      if (pol_.termination == Termination::FirstLeaf) stopped_ = true;
      continue;
    }
    if (!valid(nodes_[id])) {
      pop();
      continue;
    }
    const std::int32_t cid = generate_child(id);
    if (cid < 0) {
      pop();
      continue;
    }
    ++nc_;
    record(cid);
    apply_level_pruning(nodes_[cid].level);
    if (pol_.cost == CostRule::StackLookahead) {
      pop();
      nodes_[id].cost = cost_of(nodes_[id]);
      push(id);
    }
    push(cid);
    if (nc_ > pol_.node_budget) {
      budget_hit_ = true;
      stopped_ = true;
    }
  }

  SearchOutcome out;
  out.node_generations = nc_;
  out.unique_nodes = nc_;
  out.trace = std::move(trace_);
  if (budget_hit_) {
    out.budget_hit = true;
    out.status = SearchStatus::BudgetExhausted;
    out.decoded_label = babai_label(p_);
    out.distance = path_metric(p_, *out.decoded_label);
  } else if (incumbent >= 0) {
    out.status = SearchStatus::Complete;
    out.decoded_label = label_of(incumbent);
    out.distance = nodes_[incumbent].path;
  } else {
    out.status = SearchStatus::Empty;
  }
  return out;
}

void validate_policy(const TreeProblem& p, const SearchPolicy& pol) {
  const std::size_t m = p.dimension();
  if (!(pol.bound.size() <= 1 || pol.bound.size() == m))
    throw Error(ErrorCode::InvalidPolicy, "bound vector must have 0, 1 or m entries");
  for (double t : pol.bound)
    if (std::isnan(t)) throw Error(ErrorCode::InvalidPolicy, "bound entry is NaN");
  if (pol.cost == CostRule::Scaled) {
    if (!(pol.scale.size() == 1 || pol.scale.size() == m))
      throw Error(ErrorCode::InvalidPolicy, "scale vector must have 1 or m entries");
    for (double e : pol.scale)
      if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidPolicy, "scale entries must be positive");
  }
  if (pol.cost == CostRule::StackLookahead && pol.gen != GenRule::Zigzag)
    throw Error(ErrorCode::InvalidPolicy, "stack cost needs zigzag generation");
  if (pol.prune == PruneRule::MAlgorithm && pol.keep == 0)
    throw Error(ErrorCode::InvalidPolicy, "M must be at least 1");
  if (pol.bias < 0.0 || std::isnan(pol.bias)) throw Error(ErrorCode::InvalidPolicy, "bias must be >= 0");
  if (pol.node_budget == 0) throw Error(ErrorCode::InvalidPolicy, "node budget must be positive");
  if (!p.constrained()) {
    bool finite = true;
    for (std::size_t k = 1; k <= m; ++k) finite = finite && std::isfinite(pol.bound_at(k));
    const bool self_limiting =
        pol.cost == CostRule::StackLookahead ||
        (pol.sort == SortRule::Lifo && pol.leaf == LeafRule::TightenMin && pol.gen == GenRule::Zigzag);
    if (!finite && !self_limiting)
      throw Error(ErrorCode::InvalidPolicy, pol.name + " needs a finite bound for lattice decoding");
  }
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error(ErrorCode::ConfigError, "bad real in trace: " + s);
  return v;
}

}  // namespace

double node_metric(const TreeProblem& problem, std::span<const std::int64_t> label) {
  const std::size_t k = label.size();
  if (k == 0) return 0.0;
  if (k > problem.dimension()) throw Error(ErrorCode::DimensionMismatch, "label longer than the tree");
  const double d = residual(problem, label.first(k - 1)) -
                   problem.r(k - 1, k - 1) * static_cast<double>(label[k - 1]);
  return d * d;
}

double path_metric(const TreeProblem& problem, std::span<const std::int64_t> label) {
  double s = 0.0;
  for (std::size_t k = 1; k <= label.size(); ++k) s += node_metric(problem, label.first(k));
  return s;
}

ChildInterval child_interval(const TreeProblem& problem, std::span<const std::int64_t> parent,
                             double budget) {
  const std::size_t k = parent.size();
  if (k >= problem.dimension()) throw Error(ErrorCode::DimensionMismatch, "parent is a leaf");
  const double rkk = problem.r(k, k);
  if (rkk == 0.0) throw Error(ErrorCode::SingularDiagonal, "zero diagonal");
  ChildInterval out;
  const bool constrained = problem.constrained();
  if (std::isinf(budget) && budget > 0) {
    if (!constrained) {
      out.unbounded = true;
      return out;
    }
    out.lo = 0;
    out.hi = box_hi(problem);
    return out;
  }
  const double remaining = budget - path_metric(problem, parent);
  if (!(remaining >= 0.0)) return out;
  const double c = residual(problem, parent) / rkk;
  const double rad = std::sqrt(remaining) / std::abs(rkk);
  double lo = std::ceil(c - rad);
  double hi = std::floor(c + rad);
  if (constrained) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, static_cast<double>(box_hi(problem)));
  }
  if (lo > hi) return out;
  out.lo = static_cast<std::int64_t>(lo);
  out.hi = static_cast<std::int64_t>(hi);
  return out;
}

ZigzagEnumerator::ZigzagEnumerator(double center, std::int64_t lo, std::int64_t hi)
    : base_(to_label_value(center)), lo_(lo), hi_(hi), done_(lo > hi) {
  const double d = center - static_cast<double>(base_);
  step_ = d < 0.0 ? -1 : 1;
}

std::optional<std::int64_t> ZigzagEnumerator::next() {
  while (!done_) {
    const std::uint64_t n = n_++;
    const auto j = static_cast<Int128>((n + 1) / 2);
    const Int128 plus = static_cast<Int128>(base_) + step_ * j;
    const Int128 minus = static_cast<Int128>(base_) - step_ * j;
    if (j > static_cast<Int128>(hi_) - base_ && j > static_cast<Int128>(base_) - lo_) {
      done_ = true;
      break;
    }
    const Int128 v = (n % 2 == 1) ? plus : minus;
    if (v >= lo_ && v <= hi_) return static_cast<std::int64_t>(v);
  }
  return std::nullopt;
}

double child_center(const TreeProblem& problem, std::span<const std::int64_t> parent) {
  const std::size_t k = parent.size();
  if (k >= problem.dimension()) throw Error(ErrorCode::DimensionMismatch, "parent is a leaf");
  return residual(problem, parent) / problem.r(k, k);
}

ZigzagEnumerator se_child_order(const TreeProblem& problem, std::span<const std::int64_t> parent) {
  const double c = child_center(problem, parent);
  return problem.constrained() ? ZigzagEnumerator(c, 0, box_hi(problem)) : ZigzagEnumerator(c);
}

double SearchPolicy::scale_at(std::size_t level) const {
  return scale.size() == 1 ? scale[0] : scale.at(level - 1);
}

double SearchPolicy::bound_at(std::size_t level) const {
  if (bound.empty()) return kInf;
  if (bound.size() == 1) return bound[0];
  return bound.at(level - 1);
}

SearchPolicy policy_pohst(double c0) {
  SearchPolicy p;
  p.name = "pohst";
  p.bound = {c0};
  p.sort = SortRule::LevelThenCost;
  p.leaf = LeafRule::Keep;
  p.radius_bound = true;
  return p;
}

SearchPolicy policy_vb(double c0) {
  SearchPolicy p;
  p.name = "vb";
  p.bound = {c0};
  p.gen = GenRule::LowestFirst;
  p.radius_bound = true;
  return p;
}

SearchPolicy policy_se() {
  SearchPolicy p;
  p.name = "se";
  return p;
}

SearchPolicy policy_ir(Vector t) {
  SearchPolicy p;
  p.name = "ir";
  p.bound = std::move(t);
  p.sort = SortRule::LevelThenCost;
  p.leaf = LeafRule::Keep;
  p.radius_bound = true;
  return p;
}

SearchPolicy policy_ep(Vector e) {
  SearchPolicy p;
  p.name = "ep";
  p.cost = CostRule::Scaled;
  p.scale = std::move(e);
  p.bound = {1.0};
  p.sort = SortRule::LevelThenCost;
  p.leaf = LeafRule::Keep;
  p.radius_bound = true;
  return p;
}

SearchPolicy policy_m_algorithm(std::size_t m_keep, double initial_bound) {
  SearchPolicy p;
  p.name = "m";
  p.bound = {initial_bound};
  p.sort = SortRule::LevelThenCost;
  p.leaf = LeafRule::Keep;
  p.prune = PruneRule::MAlgorithm;
  p.keep = m_keep;
  p.radius_bound = std::isfinite(initial_bound);
  return p;
}

SearchPolicy policy_t_algorithm(double t_param, double initial_bound) {
  SearchPolicy p;
  p.name = "t";
  p.bound = {initial_bound};
  p.sort = SortRule::LevelThenCost;
  p.leaf = LeafRule::Keep;
  p.prune = PruneRule::TAlgorithm;
  p.threshold = t_param;
  p.radius_bound = std::isfinite(initial_bound);
  return p;
}

SearchPolicy policy_stack(double bias) {
  SearchPolicy p;
  p.name = "stack";
  p.cost = CostRule::StackLookahead;
  p.bias = bias;
  p.sort = SortRule::AscendingCost;
  return p;
}

SearchPolicy policy_babai() {
  SearchPolicy p;
  p.name = "babai";
  p.termination = Termination::FirstLeaf;
  return p;
}

std::string to_string(SearchStatus status) {
  switch (status) {
    case SearchStatus::Complete: return "complete";
    case SearchStatus::Empty: return "empty";
    case SearchStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

SearchOutcome gbb_run(const TreeProblem& problem, const SearchPolicy& policy) {
  check_problem(problem);
  validate_policy(problem, policy);
  return Engine(problem, policy).run();
}

IntVector babai_label(const TreeProblem& problem) {
  check_problem(problem);
  const std::size_t m = problem.dimension();
  IntVector label;
  label.reserve(m);
  for (std::size_t k = 0; k < m; ++k) label.push_back(*se_child_order(problem, label).next());
  return label;
}

SearchOutcome restart_schedule(const TreeProblem& problem, const SearchPolicy& policy,
                               const RestartOptions& options) {
  SearchPolicy current = policy;
  std::uint64_t total = 0;
  for (std::uint32_t round = 0;; ++round) {
    SearchOutcome out = gbb_run(problem, current);
    total += out.node_generations;
    bool relaxable = current.radius_bound && round < options.max_restarts;
    if (out.status != SearchStatus::Empty || !relaxable) {
      out.node_generations = total;
      out.restarts = round;
      return out;
    }
    relaxable = false;
    for (double& t : current.bound) {
      if (!std::isfinite(t)) continue;
      t = (t > 0.0 ? t : options.floor) * options.factor;
      relaxable = true;
    }
    if (!relaxable) {
      out.node_generations = total;
      out.restarts = round;
      return out;
    }
  }
}

SearchOutcome fano_decode(const TreeProblem& problem, const FanoOptions& options) {
  check_problem(problem);
  if (!(options.step > 0.0) || !std::isfinite(options.step))
    throw Error(ErrorCode::InvalidPolicy, "Fano step must be positive");
  if (!(options.bias >= 0.0)) throw Error(ErrorCode::InvalidPolicy, "bias must be >= 0");
  const std::size_t m = problem.dimension();
  const double b = options.bias;
  const double delta = options.step;
  const bool constrained = problem.constrained();

  IntVector label(m, 0);
  Vector path(m + 1, 0.0);   // path[k]: metric of x_1^k
  Vector cost(m + 1, 0.0);   // cost[k]: f(x_1^k)
  Vector resid(m, 0.0);      // residual for the children of x_1^k
  std::vector<ZigzagEnumerator> children(m);
  std::int64_t t_units = 0;  // T = t_units * delta
  const auto threshold = [&] { return static_cast<double>(t_units) * delta; };

  SearchOutcome out;
  std::unordered_set<std::string> visited;
  const auto key = [&](std::size_t len) {
    return std::string(reinterpret_cast<const char*>(label.data()), len * sizeof(std::int64_t));
  };
  visited.insert(key(0));
  if (options.record_trace) out.trace.push_back(TraceEntry{0, {}, 0.0, 0.0, 0.0, true});

  std::uint64_t generations = 1;
  std::size_t k = 0;
  // Candidate child of x_1^k under examination.
  bool has_child = false;
  std::int64_t child = 0;
  double child_path = 0.0;
  double child_cost = 0.0;

  const auto evaluate = [&](std::optional<std::int64_t> v) {
    has_child = v.has_value();
    if (!has_child) {
      child_cost = kInf;
      return;
    }
    ++generations;
    child = *v;
    const double d = resid[k] - problem.r(k, k) * static_cast<double>(child);
    child_path = path[k] + d * d;
    child_cost = child_path - b * static_cast<double>(k + 1);
    if (options.record_trace) {
      IntVector l(label.begin(), label.begin() + static_cast<std::ptrdiff_t>(k));
      l.push_back(child);
      out.trace.push_back(TraceEntry{k + 1, std::move(l), child_path, child_cost, threshold(),
                                     child_cost <= threshold()});
    }
  };
  const auto look_forward = [&] {
    std::span<const std::int64_t> prefix(label.data(), k);
    resid[k] = residual(problem, prefix);
    const double c = resid[k] / problem.r(k, k);
    children[k] = constrained ? ZigzagEnumerator(c, 0, box_hi(problem)) : ZigzagEnumerator(c);
    evaluate(children[k].next());
  };

  look_forward();
  for (;;) {
    if (generations > options.node_budget) {
      out.budget_hit = true;
      out.status = SearchStatus::BudgetExhausted;
      out.decoded_label = babai_label(problem);
      out.distance = path_metric(problem, *out.decoded_label);
      break;
    }
    if (has_child && child_cost <= threshold()) {
      label[k] = child;
      if (k + 1 == m) {
        out.decoded_label = label;
        out.distance = child_path;
        out.status = SearchStatus::Complete;
        visited.insert(key(m));
        break;
      }
      ++k;
      path[k] = child_path;
      cost[k] = child_cost;
      visited.insert(key(k));
      if (cost[k - 1] > threshold() - delta) {
        // while f(x_1^k) <= T - delta: T <- T - delta, in closed form.
        if (cost[k] <= threshold() - delta) {
          auto target = static_cast<std::int64_t>(std::ceil(cost[k] / delta));
          if (target < t_units) t_units = target;
          while (cost[k] <= static_cast<double>(t_units - 1) * delta) --t_units;
          while (t_units * delta < cost[k]) ++t_units;
        }
      }
      look_forward();
      continue;
    }
    if (k == 0 || cost[k - 1] > threshold()) {
      ++t_units;
      look_forward();
      continue;
    }
    // Move back: next best sibling of x_k under x_1^{k-1}.
    --k;
    evaluate(children[k].next());
  }
  out.node_generations = generations;
  out.unique_nodes = visited.size();
  return out;
}

void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace) {
  out << "# level label path_metric cost bound\n";
  for (const auto& e : trace) {
    out << e.level << ' ';
    if (e.label.empty()) {
      out << '-';
    } else {
      for (std::size_t i = 0; i < e.label.size(); ++i) out << (i ? "," : "") << e.label[i];
    }
    out << ' ' << format_real(e.path_metric) << ' ' << format_real(e.cost) << ' ' << format_real(e.bound);
    if (!e.accepted) out << " rejected";
    out << '\n';
  }
}

std::vector<TraceEntry> read_trace(std::istream& in) {
  std::vector<TraceEntry> trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TraceEntry e;
    std::string label, pm, cost, bound, flag;
    if (!(ls >> e.level >> label >> pm >> cost >> bound))
      throw Error(ErrorCode::ConfigError, "malformed trace line: " + line);
    if (label != "-") {
      std::istringstream ss(label);
      std::string part;
      while (std::getline(ss, part, ',')) e.label.push_back(std::stoll(part));
    }
    if (e.label.size() != e.level) throw Error(ErrorCode::ConfigError, "trace label length mismatch: " + line);
    e.path_metric = parse_real(pm);
    e.cost = parse_real(cost);
    e.bound = parse_real(bound);
    if (ls >> flag) e.accepted = flag != "rejected";
    trace.push_back(std::move(e));
  }
  return trace;
}

}  // namespace treedec
