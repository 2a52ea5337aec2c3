#include "treedec/preprocess.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "treedec/error.hpp"

namespace treedec {
namespace {

Matrix stack_identity(const Matrix& h) {
  const std::size_t n = h.rows();
  const std::size_t m = h.cols();
  Matrix out(n + m, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = h(i, j);
  for (std::size_t j = 0; j < m; ++j) out(n + j, j) = 1.0;
  return out;
}

Matrix upper_inverse(const Matrix& r) {
  const std::size_t m = r.rows();
  Matrix inv(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    Vector e(m, 0.0);
    e[j] = 1.0;
    const Vector col = back_substitute(r, e);
    for (std::size_t i = 0; i < m; ++i) inv(i, j) = col[i];
  }
  return inv;
}

IntMatrix permutation_matrix(const std::vector<std::size_t>& order) {
  const std::size_t m = order.size();
  IntMatrix sigma(m, m);
  for (std::size_t p = 0; p < m; ++p) sigma(p, order[p]) = 1;
  return sigma;
}

Matrix permute_columns(const Matrix& a, const std::vector<std::size_t>& order) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = 0; p < order.size(); ++p) out(i, p) = a(i, order[p]);
  return out;
}

}  // namespace

LeftPreprocResult left_preprocess(const Matrix& h, LeftMode mode) {
  if (h.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "channel matrix has no columns");
  LeftPreprocResult out;
  out.mode = mode;
  if (mode == LeftMode::ZeroForcing) {
    if (h.rows() < h.cols())
      throw Error(ErrorCode::RankDeficient, "zero forcing needs n >= m; use MMSE");
    auto f = qr_decompose(h);
    out.forward = std::move(f.q);
    out.backward = std::move(f.r);
    return out;
  }
  auto f = qr_decompose(stack_identity(h));
  Matrix q1(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) q1(i, j) = f.q(i, j);
  out.forward = std::move(q1);
  out.backward = std::move(f.r);
  return out;
}

std::vector<std::size_t> vblast_greedy_order(const Matrix& a) {
  if (!a.square()) throw Error(ErrorCode::DimensionMismatch, "vblast_greedy_order needs a square matrix");
  const std::size_t m = a.cols();
  // P = (A^T A)^{-1} = R^{-1} R^{-T}; 1 / P_cc is the squared norm of column c
  // after projection away from the other remaining columns.
  const Matrix rinv = upper_inverse(qr_decompose(a).r);
  Matrix p = rinv * rinv.transpose();

  std::vector<bool> remaining(m, true);
  std::vector<std::size_t> order(m);
  for (std::size_t pos = m; pos-- > 0;) {
    std::size_t best = m;
    for (std::size_t c = 0; c < m; ++c) {
      if (!remaining[c]) continue;
      if (best == m || p(c, c) <= p(best, best)) best = c;
    }
    order[pos] = best;
    remaining[best] = false;
    const double pivot = p(best, best);
    for (std::size_t i = 0; i < m; ++i) {
      if (!remaining[i]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (!remaining[j]) continue;
        p(i, j) -= p(i, best) * p(best, j) / pivot;
      }
    }
  }
  return order;
}

RightPreprocResult right_preprocess(const Matrix& a, RightMode mode, const LllOptions& lll) {
  if (!a.square()) throw Error(ErrorCode::DimensionMismatch, "right_preprocess needs a square matrix");
  const std::size_t m = a.cols();
  RightPreprocResult out;
  Matrix work = a;
  out.record = UnimodularRecord::identity(m);

  if (mode == RightMode::Lll || mode == RightMode::LllPermute) {
    auto reduced = lll_reduce(work, lll);
    work = std::move(reduced.basis);
    out.record = std::move(reduced.record);
  }
  if (mode == RightMode::Permute || mode == RightMode::LllPermute) {
    const auto order = vblast_greedy_order(work);
    const IntMatrix sigma = permutation_matrix(order);
    work = permute_columns(work, order);
    // T = Sigma T1, T_inv = T1_inv Sigma^T
    out.record.t = multiply_checked(sigma, out.record.t);
    out.record.t_inv = multiply_checked(out.record.t_inv, sigma.transpose());
  }
  auto f = qr_decompose(work);
  out.q = std::move(f.q);
  out.r = std::move(f.r);
  return out;
}

Preprocessor::Preprocessor(const Matrix& h, const LatticeCode& code, const PreprocessOptions& options) {
  code.validate();
  const std::size_t m = code.dimension();
  if (h.cols() != code.generator.rows())
    throw Error(ErrorCode::DimensionMismatch, "channel columns do not match code length");
  if (code.generator.rows() != m)
    throw Error(ErrorCode::DimensionMismatch, "generator must be square");

  const bool permutation_only = options.right == RightMode::None || options.right == RightMode::Permute;
  if (options.boundary == BoundaryMode::Constrained) {
    if (!permutation_only)
      throw Error(ErrorCode::IncompatibleBoundary, "constrained search needs right mode none or permute");
    if (code.info_set.kind != InfoSet::Kind::Hypercube && code.info_set.kind != InfoSet::Kind::Unconstrained)
      throw Error(ErrorCode::IncompatibleBoundary, "constrained search needs a hypercube information set");
  }

  // Work in units where the transmitted points have unit per-dimension
  // energy, so the MMSE regularizer matches the noise-to-signal ratio.
  if (!(code.signal_power > 0.0)) throw Error(ErrorCode::ConfigError, "signal_power must be positive");
  const double sigma = std::sqrt(code.signal_power);
  const Matrix hs = sigma * h;
  const Matrix gs = (1.0 / sigma) * code.generator;
  Vector vs(code.translate.size());
  for (std::size_t i = 0; i < vs.size(); ++i) vs[i] = code.translate[i] / sigma;

  left_ = left_preprocess(hs, options.left);
  right_ = right_preprocess(left_.backward * gs, options.right, options.lll);

  const Matrix qt = right_.q.transpose();
  projection_ = qt * left_.forward.transpose();
  offset_ = qt * (left_.backward * std::span<const double>(vs));

  level_r_ = Matrix(m, m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j <= k; ++j) level_r_(k, j) = right_.r(m - 1 - k, m - 1 - j);

  boundary_ = (options.boundary == BoundaryMode::Constrained) ? code.info_set : InfoSet::unconstrained();

  back_map_.unimodular = right_.record;
  back_map_.level_index.resize(m);
  for (std::size_t k = 0; k < m; ++k) back_map_.level_index[k] = m - 1 - k;
  back_map_.translate = code.translate;
  back_map_.code_generator = code.generator;
  back_map_.info_set = code.info_set;
}

TreeProblem Preprocessor::problem(std::span<const double> received) const {
  if (received.size() != projection_.cols())
    throw Error(ErrorCode::DimensionMismatch, "received vector length does not match the channel");
  const std::size_t m = level_r_.rows();
  const Vector ystd = projection_ * received;
  TreeProblem tp;
  tp.r = level_r_;
  tp.y.resize(m);
  for (std::size_t k = 0; k < m; ++k) tp.y[k] = ystd[m - 1 - k] - offset_[m - 1 - k];
  tp.boundary = boundary_;
  tp.back_map = back_map_;
  return tp;
}

TreeProblem form_tree(std::span<const double> received, const Matrix& h, const LatticeCode& code,
                      const PreprocessOptions& options) {
  return Preprocessor(h, code, options).problem(received);
}

BackMapped apply_back_map(std::span<const std::int64_t> label, const BackMap& back_map) {
  const std::size_t m = back_map.level_index.size();
  if (label.size() != m) throw Error(ErrorCode::DimensionMismatch, "label length");
  IntVector u(m);
  for (std::size_t k = 0; k < m; ++k) u[back_map.level_index[k]] = label[k];
  BackMapped out;
  out.info = multiply_checked(back_map.unimodular.t_inv, u);
  out.codeword = multiply(back_map.code_generator, out.info);
  for (std::size_t i = 0; i < out.codeword.size() && i < back_map.translate.size(); ++i)
    out.codeword[i] += back_map.translate[i];
  out.out_of_set = !back_map.info_set.contains(out.info);
  return out;
}

IntVector forward_map(std::span<const std::int64_t> info, const BackMap& back_map) {
  const std::size_t m = back_map.level_index.size();
  if (info.size() != m) throw Error(ErrorCode::DimensionMismatch, "label length");
  const IntVector u = multiply_checked(back_map.unimodular.t, info);
  IntVector label(m);
  for (std::size_t k = 0; k < m; ++k) label[k] = u[back_map.level_index[k]];
  return label;
}

}  // namespace treedec
