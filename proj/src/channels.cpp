#include "treedec/channels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <json.hpp>

#include "treedec/error.hpp"

namespace treedec {
namespace {

using nlohmann::json;

void check_q(int q) {
  if (q < 2) throw Error(ErrorCode::ConfigError, "alphabet size q must be >= 2");
}

void check_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::ConfigError, "rho must be positive");
}

// Unit-variance draws per real dimension.
Vector gaussian_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector z(n);
  for (auto& v : z) v = nd(rng);
  return z;
}

IntVector uniform_label(const InfoSet& set, std::size_t m, Rng& rng) {
  switch (set.kind) {
    case InfoSet::Kind::Hypercube: {
      std::uniform_int_distribution<std::int64_t> ud(0, set.q - 1);
      IntVector x(m);
      for (auto& v : x) v = ud(rng);
      return x;
    }
    case InfoSet::Kind::ConstructionA: {
      const std::size_t k = set.parity.cols();
      std::uniform_int_distribution<std::int64_t> ud(0, set.q - 1);
      std::uint64_t index = 0;
      for (std::size_t i = 0; i < k; ++i)
        index = index * static_cast<std::uint64_t>(set.q) + static_cast<std::uint64_t>(ud(rng));
      return set.label_at(index, m);
    }
    case InfoSet::Kind::ExplicitList: {
      if (set.labels.empty()) throw Error(ErrorCode::ConfigError, "empty label list");
      std::uniform_int_distribution<std::size_t> ud(0, set.labels.size() - 1);
      return set.labels[ud(rng)];
    }
    case InfoSet::Kind::Unconstrained:
      break;
  }
  throw Error(ErrorCode::ConfigError, "cannot draw labels from an unconstrained information set");
}

LatticeCode pam_code(std::size_t m, int q, double kappa, double signal_power) {
  LatticeCode code;
  code.generator = (2.0 * kappa) * Matrix::identity(m);
  code.translate.assign(m, -kappa * (q - 1));
  code.info_set = InfoSet::hypercube(q);
  code.signal_power = signal_power;
  return code;
}

int parse_octal(const std::string& s) {
  if (s.empty()) throw Error(ErrorCode::ConfigError, "empty generator polynomial");
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '7') throw Error(ErrorCode::ConfigError, "generator polynomial must be octal: " + s);
    v = v * 8 + (c - '0');
    if (v > (1 << 24)) throw Error(ErrorCode::ConfigError, "generator polynomial too long: " + s);
  }
  return v;
}

std::size_t octal_bits(const std::vector<std::string>& polys) {
  std::size_t digits = 0;
  for (const auto& p : polys) digits = std::max(digits, p.size());
  return 3 * digits;
}

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) a.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return a;
}

json int_matrix_json(const IntMatrix& m) {
  json a = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i)
    a.push_back(std::vector<std::int64_t>(m.row(i).begin(), m.row(i).end()));
  return a;
}

template <typename T>
DenseMatrix<T> matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigError, std::string(what) + " must be a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  DenseMatrix<T> m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw Error(ErrorCode::ConfigError, std::string(what) + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<T>();
  }
  return m;
}

json info_set_json(const InfoSet& s) {
  switch (s.kind) {
    case InfoSet::Kind::Hypercube: return {{"kind", "hypercube"}, {"q", s.q}};
    case InfoSet::Kind::ConstructionA:
      return {{"kind", "construction_a"}, {"q", s.q}, {"parity", int_matrix_json(s.parity)}};
    case InfoSet::Kind::Unconstrained: return {{"kind", "unconstrained"}};
    case InfoSet::Kind::ExplicitList: return {{"kind", "explicit"}, {"labels", s.labels}};
  }
  return {};
}

InfoSet info_set_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "hypercube") return InfoSet::hypercube(j.at("q").get<int>());
  if (kind == "construction_a")
    return InfoSet::construction_a(matrix_from_json<std::int64_t>(j.at("parity"), "parity"), j.at("q").get<int>());
  if (kind == "unconstrained") return InfoSet::unconstrained();
  if (kind == "explicit") return InfoSet::explicit_list(j.at("labels").get<std::vector<IntVector>>());
  throw Error(ErrorCode::ConfigError, "unknown information set kind: " + kind);
}

}  // namespace

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t frame) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (frame + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double qam_kappa(int q) {
  check_q(q);
  return std::sqrt(3.0 / (2.0 * (q * q - 1.0)));
}

double pam_kappa(int q) {
  check_q(q);
  return std::sqrt(3.0 / (q * q - 1.0));
}

ComplexMatrix sample_rayleigh(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  ComplexMatrix h(rows, cols);
  for (auto& v : h.data()) {
    const double re = nd(rng);
    const double im = nd(rng);
    v = Complex(re, im);
  }
  return h;
}

LatticeCode vblast_code(const VblastConfig& cfg) {
  if (cfg.m_tx < 1 || cfg.n_rx < 1) throw Error(ErrorCode::ConfigError, "antenna counts must be >= 1");
  return pam_code(2 * static_cast<std::size_t>(cfg.m_tx), cfg.q, qam_kappa(cfg.q), 0.5);
}

Matrix vblast_channel(const VblastConfig& cfg, const ComplexMatrix& hc) {
  check_rho(cfg.rho);
  if (hc.rows() != static_cast<std::size_t>(cfg.n_rx) || hc.cols() != static_cast<std::size_t>(cfg.m_tx))
    throw Error(ErrorCode::DimensionMismatch, "complex channel shape");
  return std::sqrt(2.0 * cfg.rho / cfg.m_tx) * complex_to_real(hc);
}

ComplexMatrix random_unitary(std::size_t k, std::uint64_t seed) {
  Rng rng(frame_seed(seed, 0));
  ComplexMatrix a = sample_rayleigh(k, k, rng);
  // Modified Gram-Schmidt on the columns.
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      Complex proj = 0.0;
      for (std::size_t r = 0; r < k; ++r) proj += std::conj(a(r, i)) * a(r, j);
      for (std::size_t r = 0; r < k; ++r) a(r, j) -= proj * a(r, i);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < k; ++r) norm += std::norm(a(r, j));
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < k; ++r) a(r, j) /= norm;
  }
  return a;
}

LatticeCode ld_code(const LdCodeConfig& cfg) {
  if (cfg.m_tx < 1 || cfg.n_rx < 1 || cfg.t_block < 1)
    throw Error(ErrorCode::ConfigError, "M, N, T must be >= 1");
  if (cfg.generator_c.rows() != static_cast<std::size_t>(cfg.m_tx * cfg.t_block) || cfg.generator_c.cols() == 0)
    throw Error(ErrorCode::DimensionMismatch, "LD generator must have M*T rows");
  return pam_code(2 * cfg.generator_c.cols(), cfg.q, qam_kappa(cfg.q), 0.5);
}

Matrix ld_channel(const LdCodeConfig& cfg, const ComplexMatrix& hc) {
  check_rho(cfg.rho);
  const std::size_t m = static_cast<std::size_t>(cfg.m_tx);
  const std::size_t n = static_cast<std::size_t>(cfg.n_rx);
  const std::size_t t = static_cast<std::size_t>(cfg.t_block);
  if (hc.rows() != n || hc.cols() != m) throw Error(ErrorCode::DimensionMismatch, "complex channel shape");
  if (cfg.generator_c.rows() != m * t) throw Error(ErrorCode::DimensionMismatch, "LD generator must have M*T rows");
  ComplexMatrix block(n * t, m * t);
  for (std::size_t s = 0; s < t; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) block(s * n + i, s * m + j) = hc(i, j);
  return std::sqrt(2.0 * cfg.rho / cfg.m_tx) * complex_to_real(block * cfg.generator_c);
}

int conv_constraint_length(const std::vector<std::string>& polys_octal) {
  if (polys_octal.empty()) throw Error(ErrorCode::ConfigError, "no generator polynomials");
  const std::size_t bits = octal_bits(polys_octal);
  unsigned combined = 0;
  for (const auto& p : polys_octal) {
    // Left justify each polynomial to the common width.
    combined |= static_cast<unsigned>(parse_octal(p)) << (3 * (bits / 3 - p.size()));
  }
  if (combined == 0) throw Error(ErrorCode::RankDeficientCode, "all generator polynomials are zero");
  return static_cast<int>(bits) - std::countr_zero(combined);
}

IntMatrix conv_generator(const std::vector<std::string>& polys_octal, std::size_t info_len) {
  if (info_len == 0) throw Error(ErrorCode::ConfigError, "information length must be positive");
  const int k_len = conv_constraint_length(polys_octal);
  const std::size_t bits = octal_bits(polys_octal);
  const std::size_t n_out = polys_octal.size();
  const std::size_t memory = static_cast<std::size_t>(k_len - 1);
  const std::size_t length = n_out * (info_len + memory);
  IntMatrix g(info_len, length);
  for (std::size_t j = 0; j < n_out; ++j) {
    const unsigned poly = static_cast<unsigned>(parse_octal(polys_octal[j]))
                          << (3 * (bits / 3 - polys_octal[j].size()));
    for (std::size_t d = 0; d <= memory; ++d) {
      const bool tap = (poly >> (bits - 1 - d)) & 1U;
      if (!tap) continue;
      for (std::size_t i = 0; i < info_len; ++i) g(i, (i + d) * n_out + j) = 1;
    }
  }
  return g;
}

ConvSystematic conv_code_systematic(const std::vector<std::string>& polys_octal, std::size_t info_len) {
  ConvSystematic out;
  out.constraint_length = conv_constraint_length(polys_octal);
  out.generator = conv_generator(polys_octal, info_len);
  IntMatrix work = out.generator;
  const std::size_t k = work.rows();
  const std::size_t n = work.cols();
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < k; ++col) {
    std::size_t sel = row;
    while (sel < k && work(sel, col) == 0) ++sel;
    if (sel == k) continue;
    for (std::size_t c = 0; c < n; ++c) std::swap(work(row, c), work(sel, c));
    for (std::size_t r = 0; r < k; ++r) {
      if (r == row || work(r, col) == 0) continue;
      for (std::size_t c = 0; c < n; ++c) work(r, c) ^= work(row, c);
    }
    pivots.push_back(col);
    ++row;
  }
  if (pivots.size() < k) throw Error(ErrorCode::RankDeficientCode, "terminated generator is not full rank over Z_2");

  std::vector<bool> is_pivot(n, false);
  for (auto p : pivots) is_pivot[p] = true;
  out.order = pivots;
  for (std::size_t c = 0; c < n; ++c)
    if (!is_pivot[c]) out.order.push_back(c);
  out.parity = IntMatrix(n - k, k);
  for (std::size_t r = 0; r < n - k; ++r)
    for (std::size_t i = 0; i < k; ++i) out.parity(r, i) = work(i, out.order[k + r]);
  return out;
}

LatticeCode isi_code(const IsiConfig& cfg) {
  check_q(cfg.q);
  if (cfg.frame_len == 0) throw Error(ErrorCode::ConfigError, "frame length must be positive");
  const double kappa = pam_kappa(cfg.q);
  if (!cfg.code) return pam_code(cfg.frame_len, cfg.q, kappa, 1.0);

  if (cfg.q != 2) throw Error(ErrorCode::ConfigError, "coded ISI uses binary codes (q = 2)");
  const auto& polys = cfg.code->polys_octal;
  const std::size_t n_out = polys.size();
  const int k_len = conv_constraint_length(polys);
  if (cfg.frame_len % n_out != 0)
    throw Error(ErrorCode::ConfigError, "frame length must be a multiple of the number of code outputs");
  const std::size_t steps = cfg.frame_len / n_out;
  if (steps <= static_cast<std::size_t>(k_len - 1))
    throw Error(ErrorCode::ConfigError, "frame too short for the code's termination tail");
  const ConvSystematic sys = conv_code_systematic(polys, steps - static_cast<std::size_t>(k_len - 1));

  const IntMatrix ga = construction_a(sys.parity, 2);
  const std::size_t n = cfg.frame_len;
  LatticeCode code;
  code.generator = Matrix(n, n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t c = 0; c < n; ++c) code.generator(sys.order[p], c) = 2.0 * kappa * static_cast<double>(ga(p, c));
  code.translate.assign(n, -kappa * (cfg.q - 1));
  code.info_set = InfoSet::construction_a(sys.parity, 2);
  code.signal_power = 1.0;
  return code;
}

Matrix isi_channel(const IsiConfig& cfg) {
  check_rho(cfg.rho);
  if (cfg.taps.empty()) throw Error(ErrorCode::InvalidTaps, "tap list is empty");
  if (std::all_of(cfg.taps.begin(), cfg.taps.end(), [](double t) { return t == 0.0; }))
    throw Error(ErrorCode::InvalidTaps, "taps are all zero");
  for (double t : cfg.taps)
    if (!std::isfinite(t)) throw Error(ErrorCode::InvalidTaps, "taps must be finite");
  if (cfg.frame_len == 0) throw Error(ErrorCode::ConfigError, "frame length must be positive");
  const std::size_t l = cfg.taps.size() - 1;
  const double scale = std::sqrt(cfg.rho);
  Matrix h(cfg.frame_len + l, cfg.frame_len);
  for (std::size_t c = 0; c < cfg.frame_len; ++c)
    for (std::size_t d = 0; d <= l; ++d) h(c + d, c) = scale * cfg.taps[d];
  return h;
}

ChannelInstance transmit_label(const Matrix& h, const LatticeCode& code, IntVector x, Rng& rng, bool noiseless) {
  code.validate();
  if (h.cols() != code.dimension() || x.size() != code.dimension())
    throw Error(ErrorCode::DimensionMismatch, "channel, code and label dimensions");
  ChannelInstance inst;
  inst.h = h;
  inst.code = code;
  inst.x_true = std::move(x);
  const Vector c = code.codeword(inst.x_true);
  inst.received = h * std::span<const double>(c);
  inst.noise_var = noiseless ? 0.0 : 1.0;
  const Vector z = gaussian_vector(h.rows(), rng);
  if (!noiseless)
    for (std::size_t i = 0; i < z.size(); ++i) inst.received[i] += z[i];
  return inst;
}

ChannelInstance transmit(const Matrix& h, const LatticeCode& code, Rng& rng, bool noiseless) {
  IntVector x = uniform_label(code.info_set, code.dimension(), rng);
  return transmit_label(h, code, std::move(x), rng, noiseless);
}

ChannelInstance sample_vblast(const VblastConfig& cfg, Rng& rng) {
  const LatticeCode code = vblast_code(cfg);
  const ComplexMatrix hc = sample_rayleigh(static_cast<std::size_t>(cfg.n_rx), static_cast<std::size_t>(cfg.m_tx), rng);
  return transmit(vblast_channel(cfg, hc), code, rng, cfg.noiseless);
}

ChannelInstance build_ld_instance(const LdCodeConfig& cfg, Rng& rng) {
  const LatticeCode code = ld_code(cfg);
  const ComplexMatrix hc = sample_rayleigh(static_cast<std::size_t>(cfg.n_rx), static_cast<std::size_t>(cfg.m_tx), rng);
  return transmit(ld_channel(cfg, hc), code, rng, cfg.noiseless);
}

ChannelInstance build_isi_instance(const IsiConfig& cfg, Rng& rng) {
  const Matrix h = isi_channel(cfg);
  return transmit(h, isi_code(cfg), rng, cfg.noiseless);
}

std::string instance_to_json(const ChannelInstance& inst) {
  json j;
  j["H"] = matrix_json(inst.h);
  j["G"] = matrix_json(inst.code.generator);
  j["v"] = inst.code.translate;
  j["info_set"] = info_set_json(inst.code.info_set);
  j["signal_power"] = inst.code.signal_power;
  j["x_true"] = inst.x_true;
  j["received"] = inst.received;
  j["noise_var"] = inst.noise_var;
  j["seed"] = inst.seed;
  j["frame"] = inst.frame;
  return j.dump(2);
}

ChannelInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("instance JSON: ") + e.what());
  }
  try {
    ChannelInstance inst;
    inst.h = matrix_from_json<double>(j.at("H"), "H");
    inst.code.generator = matrix_from_json<double>(j.at("G"), "G");
    inst.code.translate = j.at("v").get<Vector>();
    inst.code.info_set = info_set_from_json(j.at("info_set"));
    inst.code.signal_power = j.value("signal_power", 1.0);
    inst.x_true = j.value("x_true", IntVector{});
    inst.received = j.at("received").get<Vector>();
    inst.noise_var = j.value("noise_var", 1.0);
    inst.seed = j.value("seed", std::uint64_t{0});
    inst.frame = j.value("frame", std::uint64_t{0});
    inst.code.validate();
    if (inst.h.cols() != inst.code.dimension() || inst.received.size() != inst.h.rows())
      throw Error(ErrorCode::DimensionMismatch, "instance dimensions are inconsistent");
    return inst;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("instance JSON: ") + e.what());
  }
}

}  // namespace treedec
