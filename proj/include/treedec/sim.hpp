#pragma once

// Monte Carlo runner: SNR sweeps, paired decoder comparisons and report
// output. Frames are generated from per-frame substreams that do not depend
// on the SNR point or on the worker count.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "treedec/channels.hpp"
#include "treedec/preprocess.hpp"
#include "treedec/search.hpp"

namespace treedec {

struct LdGeneratorSpec {
  /// "random_unitary" draws a K x K unitary (K = M T) from `seed`;
  /// "explicit" uses `matrix`.
  std::string kind = "random_unitary";
  std::uint64_t seed = 0;
  ComplexMatrix matrix;
};

struct VblastChannelSpec {
  int m_tx = 2, n_rx = 2, q = 2;
};

struct LdChannelSpec {
  int m_tx = 2, n_rx = 2, t_block = 1, q = 2;
  LdGeneratorSpec generator;
};

struct IsiChannelSpec {
  Vector taps;
  std::size_t frame_len = 8;
  int q = 2;
  std::optional<ConvCode> code;
};

using ChannelSpec = std::variant<VblastChannelSpec, LdChannelSpec, IsiChannelSpec>;

struct DecoderSpec {
  std::string name = "se";  ///< se vb pohst ir ep m t stack fano babai ml
  double bias = 1.0;
  double step = 1.0;
  std::optional<double> c0;  ///< unset: just above the Babai distance
  std::size_t keep = 4;      ///< M
  double threshold = 1.0;    ///< T
  Vector t;
  Vector e;
  std::uint64_t budget = kDefaultNodeBudget;
  double restart_factor = 2.0;
  std::uint32_t max_restarts = 64;
};

struct ExperimentConfig {
  std::string label;
  ChannelSpec channel;
  bool fixed_channel = false;
  bool noiseless = false;  ///< drop the noise term (checks and debugging)
  PreprocessOptions preprocessing;
  DecoderSpec decoder;
  Vector snr_db;
  std::uint64_t trials = 1000;
  std::uint64_t target_frame_errors = 100;  ///< 0 disables early stopping
  std::uint64_t seed = 1;
};

/// Parses and validates a config; unknown keys and bad values throw
/// ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct DecodeResult {
  SearchOutcome outcome;
  IntVector info;         ///< decoded information label
  bool out_of_set = false;
  std::size_t dimension = 0;
};

/// Preprocess and decode one instance.
DecodeResult decode_instance(const ChannelInstance& instance, const PreprocessOptions& preprocessing,
                             const DecoderSpec& decoder, bool record_trace = false);
SearchOutcome decode_problem(const TreeProblem& problem, const DecoderSpec& decoder, bool record_trace = false);

/// Frame `frame` of the experiment at the given SNR.
ChannelInstance make_instance(const ExperimentConfig& cfg, double snr_db, std::uint64_t frame);

struct FrameRecord {
  std::uint64_t frame = 0;
  std::uint64_t nc = 0;
  std::uint64_t unique = 0;
  std::uint32_t restarts = 0;
  bool budget_hit = false;
  bool frame_error = false;
  std::uint64_t bit_errors = 0;
  double distance = 0.0;      ///< |r - H(Gx+v)|^2 of the decision
  IntVector info;
  bool shadow_checked = false;
  bool shadow_disagree = false;
};

FrameRecord run_frame(const ExperimentConfig& cfg, double snr_db, std::uint64_t frame, bool shadow_oracle = false);

struct SweepRow {
  double snr_db = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t frame_errors = 0;
  double fer = 0.0;
  double fer_ci_lo = 0.0;
  double fer_ci_hi = 1.0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  double mean_nc = 0.0;
  double mean_nc_per_dim = 0.0;
  double median_nc = 0.0;
  double p99_nc = 0.0;
  std::uint64_t restarts = 0;
  std::uint64_t budget_hits = 0;
  std::uint64_t shadow_checked = 0;
  std::uint64_t shadow_disagreements = 0;
  std::vector<FrameRecord> frames;  ///< kept when requested
};

struct SweepReport {
  std::string label;
  std::size_t dimension = 0;
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  unsigned workers = 1;
  bool shadow_oracle = false;
  bool keep_frames = false;
};

SweepReport run_sweep(const ExperimentConfig& cfg, const SweepOptions& options = {});

/// Clopper-Pearson interval for k successes in n trials.
std::pair<double, double> binomial_interval(std::uint64_t k, std::uint64_t n, double confidence = 0.95);
/// Two-sided exact sign test p-value.
double sign_test_p(std::uint64_t wins, std::uint64_t losses);
/// mean n_c(a) / mean n_c(b) per SNR point; AlignmentError on mismatched grids.
std::vector<double> gamma_ratio(const SweepReport& a, const SweepReport& b);

struct PairedStats {
  double snr_db = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t same_decision = 0;
  std::uint64_t same_distance = 0;
  std::uint64_t first_fewer_nodes = 0;
  std::uint64_t second_fewer_nodes = 0;
  double sign_test_p = 1.0;
};

struct ComparisonReport {
  std::vector<SweepReport> reports;
  /// paired[i] compares reports[0] with reports[i + 1].
  std::vector<std::vector<PairedStats>> paired;
};

/// Runs every config on the same frame stream. Configs must share the
/// channel, seed and SNR grid (AlignmentError otherwise).
ComparisonReport compare_decoders(const std::vector<ExperimentConfig>& cfgs, const SweepOptions& options = {});

void write_csv(std::ostream& out, const SweepReport& report);
std::string report_to_json(const SweepReport& report);
std::string comparison_to_json(const ComparisonReport& report);

}  // namespace treedec
