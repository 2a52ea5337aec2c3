#include "treedec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "treedec/error.hpp"

namespace treedec {
namespace {

bool lex_less(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool same_distance(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// Residual of level-order row k for the first k + 1 label entries.
double row_residual(const TreeProblem& p, std::size_t k, std::span<const std::int64_t> x) {
  double s = p.y[k];
  for (std::size_t j = 0; j <= k; ++j) s -= p.r(k, j) * static_cast<double>(x[j]);
  return s;
}

void update_best(OracleResult& best, bool& have, std::span<const std::int64_t> label, double d) {
  if (have && same_distance(d, best.distance)) {
    best.tie = true;
    if (lex_less(label, best.label)) best.label.assign(label.begin(), label.end());
    best.distance = std::min(best.distance, d);
    return;
  }
  if (have && d > best.distance) return;
  best.label.assign(label.begin(), label.end());
  best.distance = d;
  best.tie = false;
  have = true;
}

Matrix lower_inverse(const Matrix& l) {
  const std::size_t m = l.rows();
  Matrix inv(m, m);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = c; i < m; ++i) {
      double s = (i == c) ? 1.0 : 0.0;
      for (std::size_t j = c; j < i; ++j) s -= l(i, j) * inv(j, c);
      inv(i, c) = s / l(i, i);
    }
  }
  return inv;
}

}  // namespace

OracleResult exhaustive_ml(const Matrix& h, const LatticeCode& code, std::span<const double> received,
                           std::uint64_t limit) {
  code.validate();
  const std::size_t m = code.dimension();
  if (h.cols() != m || received.size() != h.rows())
    throw Error(ErrorCode::DimensionMismatch, "exhaustive_ml dimensions");
  if (!code.info_set.bounded()) throw Error(ErrorCode::TooLarge, "information set is unbounded");
  const double bits = code.info_set.log2_size(m);
  if (bits > std::log2(static_cast<double>(limit)))
    throw Error(ErrorCode::TooLarge, "information set larger than the oracle limit");
  const std::uint64_t count = code.info_set.kind == InfoSet::Kind::ExplicitList
                                  ? code.info_set.labels.size()
                                  : static_cast<std::uint64_t>(std::llround(std::exp2(bits)));

  const Matrix hg = h * code.generator;
  Vector base(received.begin(), received.end());
  const Vector hv = h * std::span<const double>(code.translate);
  for (std::size_t i = 0; i < base.size(); ++i) base[i] -= hv[i];

  OracleResult best;
  bool have = false;
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const IntVector x = code.info_set.label_at(idx, m);
    double d = 0.0;
    for (std::size_t i = 0; i < hg.rows(); ++i) {
      double s = base[i];
      for (std::size_t j = 0; j < m; ++j) s -= hg(i, j) * static_cast<double>(x[j]);
      d += s * s;
    }
    update_best(best, have, x, d);
  }
  if (!have) throw Error(ErrorCode::TooLarge, "information set is empty");
  return best;
}

OracleResult exhaustive_ml(const ChannelInstance& instance, std::uint64_t limit) {
  return exhaustive_ml(instance.h, instance.code, instance.received, limit);
}

double oracle_distance(const TreeProblem& problem, std::span<const std::int64_t> label) {
  const std::size_t m = problem.dimension();
  if (label.size() != m) throw Error(ErrorCode::DimensionMismatch, "label length");
  double d = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double s = row_residual(problem, k, label);
    d += s * s;
  }
  return d;
}

OracleBox OracleBox::from_babai(const TreeProblem& problem) {
  const std::size_t m = problem.dimension();
  IntVector x(m, 0);
  const bool clamp = problem.boundary.kind == InfoSet::Kind::Hypercube;
  for (std::size_t k = 0; k < m; ++k) {
    double s = problem.y[k];
    for (std::size_t j = 0; j < k; ++j) s -= problem.r(k, j) * static_cast<double>(x[j]);
    auto v = static_cast<std::int64_t>(std::llround(s / problem.r(k, k)));
    if (clamp) v = std::clamp<std::int64_t>(v, 0, problem.boundary.q - 1);
    x[k] = v;
  }
  const double d = std::sqrt(oracle_distance(problem, x));

  const Matrix inv = lower_inverse(problem.r);
  const Vector center = inv * std::span<const double>(problem.y);
  OracleBox box;
  box.center.resize(m);
  box.radius.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j <= i; ++j) row += inv(i, j) * inv(i, j);
    box.center[i] = static_cast<std::int64_t>(std::llround(center[i]));
    box.radius[i] = static_cast<std::int64_t>(std::ceil(std::sqrt(row) * d * (1.0 + 1e-9) + 0.5));
  }
  return box;
}

double OracleBox::log2_volume() const {
  double v = 0.0;
  for (auto r : radius) v += std::log2(2.0 * static_cast<double>(r) + 1.0);
  return v;
}

OracleResult box_clps(const TreeProblem& problem, const OracleBox& box, std::uint64_t limit) {
  const std::size_t m = problem.dimension();
  if (box.center.size() != m || box.radius.size() != m)
    throw Error(ErrorCode::DimensionMismatch, "box dimension");
  if (box.log2_volume() > std::log2(static_cast<double>(limit)))
    throw Error(ErrorCode::TooLarge, "oracle box volume above limit");
  const bool clamp = problem.boundary.kind == InfoSet::Kind::Hypercube;

  OracleResult best;
  bool have = false;
  IntVector x(m, 0);
  // Depth-first over the box in ascending coordinate order; branches whose
  // partial residual already exceeds the best full distance are skipped.
  std::function<void(std::size_t, double)> visit = [&](std::size_t k, double partial) {
    if (k == m) {
      update_best(best, have, x, partial);
      return;
    }
    std::int64_t lo = box.center[k] - box.radius[k];
    std::int64_t hi = box.center[k] + box.radius[k];
    if (clamp) {
      lo = std::max<std::int64_t>(lo, 0);
      hi = std::min<std::int64_t>(hi, problem.boundary.q - 1);
    }
    for (std::int64_t v = lo; v <= hi; ++v) {
      x[k] = v;
      const double s = row_residual(problem, k, x);
      const double next = partial + s * s;
      if (have && next > best.distance && !same_distance(next, best.distance)) continue;
      visit(k + 1, next);
    }
  };
  visit(0, 0.0);
  if (!have) throw Error(ErrorCode::TooLarge, "oracle box contains no admissible label");
  return best;
}

std::set<IntVector> enumerate_node_set(const TreeProblem& problem, const NodeCondition& condition,
                                       std::uint64_t limit) {
  const std::size_t m = problem.dimension();
  const bool clamp = problem.boundary.kind == InfoSet::Kind::Hypercube;
  std::set<IntVector> nodes;
  nodes.insert(IntVector{});
  IntVector x;

  const auto admissible = [&](std::size_t level, double path) {
    if (condition.kind == NodeCondition::Kind::PohstBudget) return path <= condition.c0;
    return path - condition.bias * static_cast<double>(level) < condition.delta;
  };
  const auto allowance = [&](std::size_t level, double path) {
    if (condition.kind == NodeCondition::Kind::PohstBudget) return condition.c0 - path;
    return condition.delta + condition.bias * static_cast<double>(level) - path;
  };

  std::function<void(double)> visit = [&](double path) {
    const std::size_t k = x.size();
    if (k == m) return;
    const double room = allowance(k + 1, path);
    if (!(room >= 0.0)) return;
    std::int64_t lo, hi;
    if (clamp) {
      lo = 0;
      hi = problem.boundary.q - 1;
    } else {
      double s = problem.y[k];
      for (std::size_t j = 0; j < k; ++j) s -= problem.r(k, j) * static_cast<double>(x[j]);
      const double c = s / problem.r(k, k);
      const double rad = std::sqrt(room) / std::abs(problem.r(k, k));
      lo = static_cast<std::int64_t>(std::floor(c - rad)) - 1;
      hi = static_cast<std::int64_t>(std::ceil(c + rad)) + 1;
    }
    for (std::int64_t v = lo; v <= hi; ++v) {
      x.push_back(v);
      const double s = row_residual(problem, k, x);
      const double next = path + s * s;
      if (admissible(k + 1, next)) {
        nodes.insert(x);
        if (nodes.size() > limit) throw Error(ErrorCode::TooLarge, "node set above limit");
        visit(next);
      }
      x.pop_back();
    }
  };
  visit(0.0);
  return nodes;
}

}  // namespace treedec
