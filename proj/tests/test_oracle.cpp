#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "treedec/oracle.hpp"
#include "treedec/search.hpp"
#include "treedec/sim.hpp"

using namespace treedec;
using treedec::testing::random_problem;
using treedec::testing::throws_code;

namespace {

constexpr std::uint64_t kWideBox = std::uint64_t{1} << 60;

LatticeCode identity_code(std::size_t m, int q) {
  LatticeCode code;
  code.generator = Matrix::identity(m);
  code.translate = Vector(m, 0.0);
  code.info_set = InfoSet::hypercube(q);
  return code;
}

TreeProblem scalar_problem(double r, double y) {
  TreeProblem p;
  p.r = Matrix{{r}};
  p.y = {y};
  p.boundary = InfoSet::unconstrained();
  p.back_map.unimodular = UnimodularRecord::identity(1);
  p.back_map.level_index = {0};
  p.back_map.translate = {0.0};
  p.back_map.code_generator = Matrix::identity(1);
  p.back_map.info_set = p.boundary;
  return p;
}

}  // namespace

TEST_CASE("exhaustive ML on a noiseless instance returns the sent label") {
  VblastConfig cfg{3, 3, 4, 10.0, true};
  for (std::uint64_t f = 0; f < 20; ++f) {
    Rng rng = frame_rng(2, f);
    const ChannelInstance inst = sample_vblast(cfg, rng);
    const OracleResult ml = exhaustive_ml(inst);
    CHECK(ml.label == inst.x_true);
    CHECK(ml.distance < 1e-20);
    CHECK_FALSE(ml.tie);
  }
}

TEST_CASE("exhaustive ML matches a hand enumeration for m = 2") {
  const Matrix h{{1.0, 0.5}, {0.2, 1.0}};
  const LatticeCode code = identity_code(2, 2);
  const Vector r{0.9, 0.3};
  double best = kInf;
  IntVector best_x;
  for (std::int64_t a = 0; a < 2; ++a)
    for (std::int64_t b = 0; b < 2; ++b) {
      const double e0 = r[0] - (1.0 * a + 0.5 * b);
      const double e1 = r[1] - (0.2 * a + 1.0 * b);
      const double d = e0 * e0 + e1 * e1;
      if (d < best) {
        best = d;
        best_x = {a, b};
      }
    }
  const OracleResult ml = exhaustive_ml(h, code, r);
  CHECK(ml.label == best_x);
  CHECK(ml.label == IntVector{1, 0});
  CHECK(ml.distance == doctest::Approx(best).epsilon(1e-14));
}

TEST_CASE("exhaustive ML ties go to the smallest label") {
  const LatticeCode code = identity_code(1, 2);
  const Vector r{0.5};
  const OracleResult ml = exhaustive_ml(Matrix::identity(1), code, r);
  CHECK(ml.label == IntVector{0});
  CHECK(ml.tie);
  CHECK(ml.distance == doctest::Approx(0.25));
}

TEST_CASE("exhaustive ML guards the search space size") {
  const LatticeCode code = identity_code(21, 2);
  const Vector r(21, 0.0);
  CHECK(throws_code(ErrorCode::TooLarge, [&] { exhaustive_ml(Matrix::identity(21), code, r); }));
  LatticeCode lattice = identity_code(2, 2);
  lattice.info_set = InfoSet::unconstrained();
  CHECK(throws_code(ErrorCode::TooLarge, [&] { exhaustive_ml(Matrix::identity(2), lattice, Vector{0, 0}); }));
}

TEST_CASE("exhaustive ML equals SE on the ZF constrained path") {
  VblastConfig cfg{4, 4, 2, db_to_linear(10.0), false};
  const PreprocessOptions zf{LeftMode::ZeroForcing, RightMode::None, {}, BoundaryMode::Constrained};
  DecoderSpec se;
  se.name = "se";
  for (std::uint64_t f = 0; f < 1000; ++f) {
    Rng rng = frame_rng(11, f);
    const ChannelInstance inst = sample_vblast(cfg, rng);
    const OracleResult ml = exhaustive_ml(inst);
    const DecodeResult res = decode_instance(inst, zf, se);
    REQUIRE_FALSE(res.info.empty());
    const double d = squared_norm(inst.received - inst.h * std::span<const double>(inst.code.codeword(res.info)));
    REQUIRE(d == doctest::Approx(ml.distance).epsilon(1e-9));
    if (!ml.tie) CHECK(res.info == ml.label);
  }
}

TEST_CASE("box oracle with zero radius evaluates the centre only") {
  std::mt19937_64 rng(1);
  const TreeProblem p = random_problem(4, rng);
  OracleBox box;
  box.center = {1, -2, 0, 3};
  box.radius = IntVector(4, 0);
  const OracleResult res = box_clps(p, box);
  CHECK(res.label == box.center);
  CHECK(res.distance == doctest::Approx(oracle_distance(p, box.center)).epsilon(1e-14));
  CHECK(box.log2_volume() == 0.0);
}

TEST_CASE("box oracle in one dimension") {
  const TreeProblem p = scalar_problem(1.0, 0.4);
  OracleBox box;
  box.center = {0};
  box.radius = {2};
  const OracleResult res = box_clps(p, box);
  CHECK(res.label == IntVector{0});
  CHECK(res.distance == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(box.log2_volume() == doctest::Approx(std::log2(5.0)));
}

TEST_CASE("box oracle guards the volume") {
  std::mt19937_64 rng(2);
  const TreeProblem p = random_problem(3, rng);
  OracleBox box;
  box.center = IntVector(3, 0);
  box.radius = IntVector(3, 100);
  CHECK(throws_code(ErrorCode::TooLarge, [&] { box_clps(p, box); }));
}

TEST_CASE("oracle distance is the full residual norm") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 8);
    const TreeProblem p = random_problem(m, rng);
    const IntVector x = treedec::testing::random_label(m, -3, 3, rng);
    const Vector res = p.y - multiply(p.r, x);
    CHECK(oracle_distance(p, x) == doctest::Approx(squared_norm(res)).epsilon(1e-12));
  }
}

TEST_CASE("Babai box contains the lattice minimiser") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 7);
    const TreeProblem p = random_problem(m, rng, 0.9);
    const OracleBox box = OracleBox::from_babai(p);
    const OracleResult oracle = box_clps(p, box, kWideBox);
    const auto stack = gbb_run(p, policy_stack(0.0));
    REQUIRE(stack.decoded_label);
    CHECK(stack.distance == doctest::Approx(oracle.distance).epsilon(1e-9));
    // Doubling the box cannot improve the optimum.
    if (box.log2_volume() + static_cast<double>(m) < 22.0) {
      OracleBox wide = box;
      for (auto& r : wide.radius) r = 2 * r + 1;
      CHECK(box_clps(p, wide, kWideBox).distance == doctest::Approx(oracle.distance).epsilon(1e-12));
    }
  }
}

TEST_CASE("constrained box oracle equals exhaustive enumeration") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 4);
    const TreeProblem p = random_problem(m, rng, 0.8, InfoSet::hypercube(3));
    double best = kInf;
    const auto count = static_cast<std::uint64_t>(std::llround(std::pow(3.0, static_cast<double>(m))));
    for (std::uint64_t idx = 0; idx < count; ++idx) best = std::min(best, oracle_distance(p, InfoSet::hypercube(3).label_at(idx, m)));
    const OracleResult res = box_clps(p, OracleBox::from_babai(p), kWideBox);
    CHECK(res.distance == doctest::Approx(best).epsilon(1e-12));
    CHECK(InfoSet::hypercube(3).contains(res.label));
  }
}

TEST_CASE("zero budget leaves only the root") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const TreeProblem p = random_problem(4, rng, 0.7);
    const auto nodes = enumerate_node_set(p, NodeCondition::pohst(0.0));
    CHECK(nodes == std::set<IntVector>{IntVector{}});
  }
}

TEST_CASE("Pohst visits exactly the enumerated node set") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 5);
    const TreeProblem p = random_problem(m, rng, 0.8);
    const double c0 = 0.5 + 2.5 * std::uniform_real_distribution<double>()(rng);
    auto pol = policy_pohst(c0);
    pol.record_trace = true;
    const auto out = gbb_run(p, pol);
    std::set<IntVector> seen;
    for (const auto& e : out.trace) seen.insert(e.label);
    CHECK(seen == enumerate_node_set(p, NodeCondition::pohst(c0)));
  }
}

TEST_CASE("running-max node set grows with delta and shrinks with bias") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const TreeProblem p = random_problem(4, rng, 0.8);
    const auto small = enumerate_node_set(p, NodeCondition::max_cost(1.0, 1.0));
    const auto large = enumerate_node_set(p, NodeCondition::max_cost(1.0, 2.0));
    const auto high_bias = enumerate_node_set(p, NodeCondition::max_cost(2.0, 1.0));
    for (const auto& n : small) {
      CHECK(large.count(n) == 1);
      CHECK(high_bias.count(n) == 1);
    }
    // Closed under taking prefixes.
    for (const auto& n : large) {
      if (n.empty()) continue;
      CHECK(large.count(IntVector(n.begin(), n.end() - 1)) == 1);
    }
  }
}

TEST_CASE("node enumeration guards its size") {
  std::mt19937_64 rng(9);
  const TreeProblem p = random_problem(8, rng);
  CHECK(throws_code(ErrorCode::TooLarge, [&] { enumerate_node_set(p, NodeCondition::pohst(1e6), 1000); }));
}
