#pragma once

// Instance generators: V-BLAST flat fading, linear-dispersion space-time
// codes over flat fading, and ISI channels with optional Construction A
// convolutional-code lattices.
//
// All instances follow r = H (G x + v) + z with z ~ N(0, I); the SNR is
// folded into H.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "treedec/lattice.hpp"
#include "treedec/linalg.hpp"

namespace treedec {

/// Frame generator. Each frame uses its own engine seeded by
/// frame_seed(seed, frame), so frames can be produced in any order.
using Rng = std::mt19937_64;

/// splitmix64 finalizer of (seed, frame).
std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t frame);
inline Rng frame_rng(std::uint64_t seed, std::uint64_t frame) { return Rng(frame_seed(seed, frame)); }

double db_to_linear(double db);

/// Per-real-dimension PAM scale for unit complex symbol energy.
double qam_kappa(int q);
/// Per-dimension PAM scale for unit real symbol energy.
double pam_kappa(int q);

struct VblastConfig {
  int m_tx = 2;
  int n_rx = 2;
  int q = 2;
  double rho = 10.0;  ///< linear SNR per receive antenna
  bool noiseless = false;
};

struct LdCodeConfig {
  /// (M T) x K complex map from information symbols to the transmitted
  /// block, stacked time slot by time slot.
  ComplexMatrix generator_c;
  int m_tx = 2;
  int n_rx = 2;
  int t_block = 1;
  int q = 2;
  double rho = 10.0;
  bool noiseless = false;
};

struct ConvCode {
  std::vector<std::string> polys_octal;  ///< e.g. {"5", "7"}, left justified
};

struct IsiConfig {
  Vector taps;
  std::size_t frame_len = 8;  ///< transmitted symbols per frame (coded length with a code)
  std::optional<ConvCode> code;
  int q = 2;
  double rho = 10.0;
  bool noiseless = false;
};

struct ChannelInstance {
  Matrix h;
  LatticeCode code;
  IntVector x_true;
  Vector received;
  double noise_var = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t frame = 0;
};

/// Complex Gaussian matrix with i.i.d. CN(0, 1) entries.
ComplexMatrix sample_rayleigh(std::size_t rows, std::size_t cols, Rng& rng);

LatticeCode vblast_code(const VblastConfig& cfg);
/// sqrt(2 rho / M) * embed(Hc), so each receive antenna sees SNR rho.
Matrix vblast_channel(const VblastConfig& cfg, const ComplexMatrix& hc);

/// K x K unitary from Gram-Schmidt on a Rayleigh matrix drawn from `seed`.
ComplexMatrix random_unitary(std::size_t k, std::uint64_t seed);

LatticeCode ld_code(const LdCodeConfig& cfg);
Matrix ld_channel(const LdCodeConfig& cfg, const ComplexMatrix& hc);

LatticeCode isi_code(const IsiConfig& cfg);
Matrix isi_channel(const IsiConfig& cfg);

/// Draws x uniformly from the code's (bounded) information set and
/// produces the received vector.
ChannelInstance transmit(const Matrix& h, const LatticeCode& code, Rng& rng, bool noiseless = false);
/// Same with a given label.
ChannelInstance transmit_label(const Matrix& h, const LatticeCode& code, IntVector x, Rng& rng,
                               bool noiseless = false);

/// Random draw order: channel, label, noise.
ChannelInstance sample_vblast(const VblastConfig& cfg, Rng& rng);
ChannelInstance build_ld_instance(const LdCodeConfig& cfg, Rng& rng);
ChannelInstance build_isi_instance(const IsiConfig& cfg, Rng& rng);

struct ConvSystematic {
  IntMatrix generator;   ///< k x n terminated generator over Z_2 (transmission order)
  IntMatrix parity;      ///< P, (n - k) x k, systematic form [I; P]
  /// order[p] = transmission position of systematic position p; the first k
  /// entries are the information positions.
  std::vector<std::size_t> order;
  int constraint_length = 0;
};

/// Constraint length implied by left-justified octal polynomials.
int conv_constraint_length(const std::vector<std::string>& polys_octal);
/// Zero-tail terminated generator of a rate 1/n feedforward code.
IntMatrix conv_generator(const std::vector<std::string>& polys_octal, std::size_t info_len);
ConvSystematic conv_code_systematic(const std::vector<std::string>& polys_octal, std::size_t info_len);

/// Instance record as JSON (matrices as nested arrays).
std::string instance_to_json(const ChannelInstance& instance);
ChannelInstance instance_from_json(const std::string& text);

}  // namespace treedec
