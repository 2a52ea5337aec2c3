#include "treedec/sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "treedec/error.hpp"
#include "treedec/oracle.hpp"

namespace treedec {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; });
    if (!known) config_error(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) config_error(join(path, key), "expected a number");
  return v->get<double>();
}

std::uint64_t get_count(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
  if (v->is_number_float()) {
    const double d = v->get<double>();
    if (d >= 0 && std::floor(d) == d && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  config_error(join(path, key), "expected a non-negative integer");
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback, int min_value) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) config_error(join(path, key), "expected an integer");
  const auto x = v->get<std::int64_t>();
  if (x < min_value || x > 1'000'000) config_error(join(path, key), "must be >= " + std::to_string(min_value));
  return static_cast<int>(x);
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) config_error(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) config_error(join(path, key), "expected a string");
  return v->get<std::string>();
}

Vector get_vector(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return {};
  if (!v->is_array()) config_error(join(path, key), "expected an array of numbers");
  Vector out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) config_error(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

Matrix get_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) config_error(path, "expected a non-empty nested array");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) config_error(path, "rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) config_error(path, "entries must be numbers");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

ChannelSpec parse_channel(const json& j) {
  const std::string path = "channel";
  if (!j.is_object()) config_error(path, "expected an object");
  const std::string type = get_string(j, path, "type", "");
  if (type == "vblast") {
    reject_unknown(j, path, {"type", "M", "N", "Q"});
    VblastChannelSpec s;
    s.m_tx = get_int(j, path, "M", 2, 1);
    s.n_rx = get_int(j, path, "N", 2, 1);
    s.q = get_int(j, path, "Q", 2, 2);
    return s;
  }
  if (type == "ld") {
    reject_unknown(j, path, {"type", "M", "N", "T", "Q", "generator"});
    LdChannelSpec s;
    s.m_tx = get_int(j, path, "M", 2, 1);
    s.n_rx = get_int(j, path, "N", 2, 1);
    s.t_block = get_int(j, path, "T", 1, 1);
    s.q = get_int(j, path, "Q", 2, 2);
    if (const json* g = find(j, "generator")) {
      const std::string gp = "channel.generator";
      s.generator.kind = get_string(*g, gp, "kind", "random_unitary");
      if (s.generator.kind == "random_unitary") {
        reject_unknown(*g, gp, {"kind", "seed"});
        s.generator.seed = get_count(*g, gp, "seed", 0);
      } else if (s.generator.kind == "explicit") {
        reject_unknown(*g, gp, {"kind", "re", "im"});
        if (!find(*g, "re")) config_error(gp + ".re", "required for an explicit generator");
        const Matrix re = get_matrix(g->at("re"), gp + ".re");
        const Matrix im = find(*g, "im") ? get_matrix(g->at("im"), gp + ".im") : Matrix(re.rows(), re.cols());
        if (im.rows() != re.rows() || im.cols() != re.cols()) config_error(gp + ".im", "shape differs from re");
        s.generator.matrix = ComplexMatrix(re.rows(), re.cols());
        for (std::size_t i = 0; i < re.rows(); ++i)
          for (std::size_t c = 0; c < re.cols(); ++c) s.generator.matrix(i, c) = Complex(re(i, c), im(i, c));
        if (re.rows() != static_cast<std::size_t>(s.m_tx * s.t_block))
          config_error(gp + ".re", "must have M*T rows");
      } else {
        config_error(gp + ".kind", "expected random_unitary or explicit");
      }
    }
    return s;
  }
  if (type == "isi") {
    reject_unknown(j, path, {"type", "taps", "frame_len", "Q", "code"});
    IsiChannelSpec s;
    s.taps = get_vector(j, path, "taps");
    if (s.taps.empty()) config_error("channel.taps", "required and non-empty");
    s.frame_len = get_count(j, path, "frame_len", 8);
    if (s.frame_len == 0) config_error("channel.frame_len", "must be positive");
    s.q = get_int(j, path, "Q", 2, 2);
    if (const json* c = find(j, "code")) {
      reject_unknown(*c, "channel.code", {"polys"});
      const json* polys = find(*c, "polys");
      if (!polys || !polys->is_array() || polys->empty())
        config_error("channel.code.polys", "expected a non-empty list of octal strings");
      ConvCode code;
      for (const auto& p : *polys) {
        if (!p.is_string()) config_error("channel.code.polys", "polynomials are octal strings, e.g. \"5\"");
        code.polys_octal.push_back(p.get<std::string>());
      }
      if (s.q != 2) config_error("channel.Q", "coded ISI requires Q = 2");
      s.code = std::move(code);
    }
    return s;
  }
  config_error("channel.type", "expected vblast, ld or isi");
}

const std::set<std::string>& decoder_names() {
  static const std::set<std::string> names{"se", "vb", "pohst", "ir", "ep", "m", "t", "stack", "fano", "babai", "ml"};
  return names;
}

std::string left_name(LeftMode m) { return m == LeftMode::ZeroForcing ? "zf" : "mmse"; }
std::string right_name(RightMode m) {
  switch (m) {
    case RightMode::None: return "none";
    case RightMode::Lll: return "lll";
    case RightMode::Permute: return "permute";
    case RightMode::LllPermute: return "lll+permute";
  }
  return "none";
}

ComplexMatrix ld_generator(const LdChannelSpec& s) {
  if (s.generator.kind == "explicit") return s.generator.matrix;
  return random_unitary(static_cast<std::size_t>(s.m_tx * s.t_block), s.generator.seed);
}

constexpr std::uint64_t kChannelStream = 0x6368616e6e656cULL;

int symbol_alphabet(const InfoSet& set) { return set.q >= 2 ? set.q : 2; }

std::uint64_t count_bit_errors(const IntVector& a, const IntVector& b, int q) {
  const int bits = std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(q - 1))));
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::uint64_t errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = static_cast<std::uint64_t>(std::clamp<std::int64_t>(a[i], 0, q - 1));
    const auto y = static_cast<std::uint64_t>(std::clamp<std::int64_t>(i < b.size() ? b[i] : 0, 0, q - 1));
    errors += static_cast<std::uint64_t>(std::popcount((x ^ y) & mask));
  }
  return errors;
}

double received_distance(const ChannelInstance& inst, std::span<const std::int64_t> x) {
  const Vector c = inst.code.codeword(x);
  const Vector hc = inst.h * std::span<const double>(c);
  double d = 0.0;
  for (std::size_t i = 0; i < hc.size(); ++i) d += (inst.received[i] - hc[i]) * (inst.received[i] - hc[i]);
  return d;
}

double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

SweepRow summarize(double snr, std::vector<FrameRecord>&& frames, std::size_t dimension, std::size_t bits_per_frame,
                   bool keep) {
  SweepRow row;
  row.snr_db = snr;
  row.trials = frames.size();
  std::vector<double> nc;
  nc.reserve(frames.size());
  double sum = 0.0;
  for (const auto& f : frames) {
    row.frame_errors += f.frame_error ? 1 : 0;
    row.bit_errors += f.bit_errors;
    row.restarts += f.restarts;
    row.budget_hits += f.budget_hit ? 1 : 0;
    row.shadow_checked += f.shadow_checked ? 1 : 0;
    row.shadow_disagreements += f.shadow_disagree ? 1 : 0;
    nc.push_back(static_cast<double>(f.nc));
    sum += static_cast<double>(f.nc);
  }
  if (row.trials > 0) {
    row.fer = static_cast<double>(row.frame_errors) / static_cast<double>(row.trials);
    row.ber = bits_per_frame ? static_cast<double>(row.bit_errors) /
                                   (static_cast<double>(row.trials) * static_cast<double>(bits_per_frame))
                             : 0.0;
    row.mean_nc = sum / static_cast<double>(row.trials);
    row.mean_nc_per_dim = dimension ? row.mean_nc / static_cast<double>(dimension) : 0.0;
    std::sort(nc.begin(), nc.end());
    const std::size_t n = nc.size();
    row.median_nc = n % 2 ? nc[n / 2] : 0.5 * (nc[n / 2 - 1] + nc[n / 2]);
    row.p99_nc = quantile_sorted(nc, 0.99);
  }
  std::tie(row.fer_ci_lo, row.fer_ci_hi) = binomial_interval(row.frame_errors, row.trials);
  if (keep) row.frames = std::move(frames);
  return row;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json row_json(const SweepRow& r) {
  return json{{"snr_db", r.snr_db},
              {"trials", r.trials},
              {"frame_errors", r.frame_errors},
              {"fer", r.fer},
              {"fer_ci_lo", r.fer_ci_lo},
              {"fer_ci_hi", r.fer_ci_hi},
              {"bit_errors", r.bit_errors},
              {"ber", r.ber},
              {"mean_nc", r.mean_nc},
              {"mean_nc_per_dim", r.mean_nc_per_dim},
              {"median_nc", r.median_nc},
              {"p99_nc", r.p99_nc},
              {"restarts", r.restarts},
              {"budget_hits", r.budget_hits},
              {"shadow_checked", r.shadow_checked},
              {"shadow_disagreements", r.shadow_disagreements}};
}

json report_json(const SweepReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(row_json(row));
  return json{{"label", r.label}, {"dimension", r.dimension}, {"rows", rows}};
}

json channel_json(const ChannelSpec& spec) {
  if (const auto* v = std::get_if<VblastChannelSpec>(&spec))
    return json{{"type", "vblast"}, {"M", v->m_tx}, {"N", v->n_rx}, {"Q", v->q}};
  if (const auto* l = std::get_if<LdChannelSpec>(&spec)) {
    json g;
    if (l->generator.kind == "explicit") {
      json re = json::array(), im = json::array();
      for (std::size_t i = 0; i < l->generator.matrix.rows(); ++i) {
        json rr = json::array(), ii = json::array();
        for (std::size_t c = 0; c < l->generator.matrix.cols(); ++c) {
          rr.push_back(l->generator.matrix(i, c).real());
          ii.push_back(l->generator.matrix(i, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
      }
      g = json{{"kind", "explicit"}, {"re", re}, {"im", im}};
    } else {
      g = json{{"kind", "random_unitary"}, {"seed", l->generator.seed}};
    }
    return json{{"type", "ld"}, {"M", l->m_tx}, {"N", l->n_rx}, {"T", l->t_block}, {"Q", l->q}, {"generator", g}};
  }
  const auto& s = std::get<IsiChannelSpec>(spec);
  json j{{"type", "isi"}, {"taps", s.taps}, {"frame_len", s.frame_len}, {"Q", s.q}};
  if (s.code) j["code"] = json{{"polys", s.code->polys_octal}};
  return j;
}

template <typename Fn>
void parallel_for(std::uint64_t begin, std::uint64_t end, unsigned workers, Fn&& fn) {
  if (workers <= 1 || end - begin <= 1) {
    for (std::uint64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{begin};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::uint64_t>(workers, end - begin));
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1);
        if (i >= end) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(end);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "", {"label", "channel", "fixed_channel", "noiseless", "preprocessing", "decoder", "snr_db",
                         "trials", "target_frame_errors", "seed"});
  ExperimentConfig cfg;
  cfg.label = get_string(j, "", "label", "");
  if (!find(j, "channel")) config_error("channel", "required");
  cfg.channel = parse_channel(j.at("channel"));
  cfg.fixed_channel = get_bool(j, "", "fixed_channel", false);
  cfg.noiseless = get_bool(j, "", "noiseless", false);

  if (const json* p = find(j, "preprocessing")) {
    const std::string path = "preprocessing";
    reject_unknown(*p, path, {"left", "right", "lll_delta", "deep_insertion", "boundary"});
    const std::string left = get_string(*p, path, "left", "mmse");
    if (left == "zf") cfg.preprocessing.left = LeftMode::ZeroForcing;
    else if (left == "mmse") cfg.preprocessing.left = LeftMode::Mmse;
    else config_error("preprocessing.left", "expected zf or mmse");
    const std::string right = get_string(*p, path, "right", "lll+permute");
    if (right == "none") cfg.preprocessing.right = RightMode::None;
    else if (right == "lll") cfg.preprocessing.right = RightMode::Lll;
    else if (right == "permute") cfg.preprocessing.right = RightMode::Permute;
    else if (right == "lll+permute") cfg.preprocessing.right = RightMode::LllPermute;
    else config_error("preprocessing.right", "expected none, lll, permute or lll+permute");
    cfg.preprocessing.lll.delta = get_number(*p, path, "lll_delta", 0.99);
    if (!(cfg.preprocessing.lll.delta > 0.25 && cfg.preprocessing.lll.delta <= 1.0))
      config_error("preprocessing.lll_delta", "must lie in (0.25, 1]");
    cfg.preprocessing.lll.deep_insertion = get_bool(*p, path, "deep_insertion", false);
    const std::string boundary = get_string(*p, path, "boundary", "lattice");
    if (boundary == "lattice") cfg.preprocessing.boundary = BoundaryMode::Lattice;
    else if (boundary == "constrained") cfg.preprocessing.boundary = BoundaryMode::Constrained;
    else config_error("preprocessing.boundary", "expected lattice or constrained");
  }
  if (cfg.preprocessing.boundary == BoundaryMode::Constrained) {
    if (cfg.preprocessing.right == RightMode::Lll || cfg.preprocessing.right == RightMode::LllPermute)
      config_error("preprocessing.boundary", "constrained search requires right = none or permute");
    if (const auto* isi = std::get_if<IsiChannelSpec>(&cfg.channel); isi && isi->code)
      config_error("preprocessing.boundary", "constrained search is not available for coded ISI");
  }

  if (const json* d = find(j, "decoder")) {
    const std::string path = "decoder";
    reject_unknown(*d, path, {"name", "b", "delta", "C0", "M", "T", "t", "e", "budget", "restart_factor",
                              "max_restarts"});
    auto& dec = cfg.decoder;
    dec.name = get_string(*d, path, "name", "se");
    if (!decoder_names().count(dec.name))
      config_error("decoder.name", "unknown decoder '" + dec.name + "'");
    dec.bias = get_number(*d, path, "b", 1.0);
    if (!(dec.bias >= 0.0)) config_error("decoder.b", "must be >= 0");
    dec.step = get_number(*d, path, "delta", 1.0);
    if (!(dec.step > 0.0)) config_error("decoder.delta", "must be > 0");
    if (const json* c0 = find(*d, "C0")) {
      if (c0->is_string() && c0->get<std::string>() == "babai") {
        dec.c0.reset();
      } else if (c0->is_number()) {
        dec.c0 = c0->get<double>();
        if (!(*dec.c0 >= 0.0)) config_error("decoder.C0", "must be >= 0");
      } else {
        config_error("decoder.C0", "expected a number or \"babai\"");
      }
    }
    dec.keep = get_count(*d, path, "M", 4);
    if (dec.keep == 0) config_error("decoder.M", "must be >= 1");
    dec.threshold = get_number(*d, path, "T", 1.0);
    if (!(dec.threshold >= 0.0)) config_error("decoder.T", "must be >= 0");
    dec.t = get_vector(*d, path, "t");
    dec.e = get_vector(*d, path, "e");
    dec.budget = get_count(*d, path, "budget", kDefaultNodeBudget);
    if (dec.budget == 0) config_error("decoder.budget", "must be positive");
    dec.restart_factor = get_number(*d, path, "restart_factor", 2.0);
    if (!(dec.restart_factor > 1.0)) config_error("decoder.restart_factor", "must be > 1");
    dec.max_restarts = static_cast<std::uint32_t>(get_count(*d, path, "max_restarts", 64));
    if (dec.name == "ir" && dec.t.empty()) config_error("decoder.t", "required for the ir decoder");
    if (dec.name == "ep" && dec.e.empty()) config_error("decoder.e", "required for the ep decoder");
  }

  if (!find(j, "snr_db")) config_error("snr_db", "required");
  cfg.snr_db = get_vector(j, "", "snr_db");
  if (cfg.snr_db.empty()) config_error("snr_db", "must list at least one SNR");
  cfg.trials = get_count(j, "", "trials", 1000);
  cfg.target_frame_errors = get_count(j, "", "target_frame_errors", 100);
  cfg.seed = get_count(j, "", "seed", 1);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["label"] = cfg.label;
  j["channel"] = channel_json(cfg.channel);
  j["fixed_channel"] = cfg.fixed_channel;
  j["noiseless"] = cfg.noiseless;
  j["preprocessing"] = json{{"left", left_name(cfg.preprocessing.left)},
                            {"right", right_name(cfg.preprocessing.right)},
                            {"lll_delta", cfg.preprocessing.lll.delta},
                            {"deep_insertion", cfg.preprocessing.lll.deep_insertion},
                            {"boundary", cfg.preprocessing.boundary == BoundaryMode::Lattice ? "lattice" : "constrained"}};
  json d{{"name", cfg.decoder.name},     {"b", cfg.decoder.bias},  {"delta", cfg.decoder.step},
         {"M", cfg.decoder.keep},        {"T", cfg.decoder.threshold}, {"budget", cfg.decoder.budget},
         {"restart_factor", cfg.decoder.restart_factor}, {"max_restarts", cfg.decoder.max_restarts}};
  d["C0"] = cfg.decoder.c0 ? json(*cfg.decoder.c0) : json("babai");
  if (!cfg.decoder.t.empty()) d["t"] = cfg.decoder.t;
  if (!cfg.decoder.e.empty()) d["e"] = cfg.decoder.e;
  j["decoder"] = d;
  j["snr_db"] = cfg.snr_db;
  j["trials"] = cfg.trials;
  j["target_frame_errors"] = cfg.target_frame_errors;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

SearchOutcome decode_problem(const TreeProblem& problem, const DecoderSpec& dec, bool record_trace) {
  RestartOptions restart;
  restart.factor = dec.restart_factor;
  restart.max_restarts = dec.max_restarts;
  const auto radius = [&] {
    if (dec.c0) return *dec.c0;
    const IntVector b = babai_label(problem);
    const double d = path_metric(problem, b);
    return std::nextafter(d * (1.0 + 1e-9) + 1e-12, kInf);
  };
  const auto finish = [&](SearchPolicy p) {
    p.node_budget = dec.budget;
    p.record_trace = record_trace;
    return restart_schedule(problem, p, restart);
  };
  const std::string& n = dec.name;
  if (n == "se") return finish(policy_se());
  if (n == "vb") return finish(policy_vb(radius()));
  if (n == "pohst") return finish(policy_pohst(radius()));
  if (n == "ir") return finish(policy_ir(dec.t));
  if (n == "ep") return finish(policy_ep(dec.e));
  if (n == "m") {
    const double bound = (dec.c0 || !problem.constrained()) ? radius() : kInf;
    return finish(policy_m_algorithm(dec.keep, bound));
  }
  if (n == "t") {
    const double bound = (dec.c0 || !problem.constrained()) ? radius() : kInf;
    return finish(policy_t_algorithm(dec.threshold, bound));
  }
  if (n == "stack") return finish(policy_stack(dec.bias));
  if (n == "babai") return finish(policy_babai());
  if (n == "fano") {
    FanoOptions f;
    f.bias = dec.bias;
    f.step = dec.step;
    f.node_budget = dec.budget;
    f.record_trace = record_trace;
    return fano_decode(problem, f);
  }
  throw Error(ErrorCode::ConfigError, "decoder.name: '" + n + "' does not run on a tree problem");
}

DecodeResult decode_instance(const ChannelInstance& inst, const PreprocessOptions& pre, const DecoderSpec& dec,
                             bool record_trace) {
  DecodeResult out;
  out.dimension = inst.code.dimension();
  if (dec.name == "ml") {
    const OracleResult ml = exhaustive_ml(inst);
    out.info = ml.label;
    out.outcome.decoded_label = ml.label;
    out.outcome.distance = ml.distance;
    const double size = std::exp2(inst.code.info_set.log2_size(out.dimension));
    out.outcome.node_generations = static_cast<std::uint64_t>(std::llround(size));
    out.outcome.unique_nodes = out.outcome.node_generations;
    return out;
  }
  const TreeProblem problem = Preprocessor(inst.h, inst.code, pre).problem(inst.received);
  out.outcome = decode_problem(problem, dec, record_trace);
  if (out.outcome.decoded_label) {
    const BackMapped bm = apply_back_map(*out.outcome.decoded_label, problem.back_map);
    out.info = bm.info;
    out.out_of_set = bm.out_of_set;
  }
  return out;
}

ChannelInstance make_instance(const ExperimentConfig& cfg, double snr_db, std::uint64_t frame) {
  const double rho = db_to_linear(snr_db);
  Rng rng = frame_rng(cfg.seed, frame);
  Rng channel_rng = cfg.fixed_channel ? frame_rng(cfg.seed ^ kChannelStream, 0) : Rng{};
  Rng& hrng = cfg.fixed_channel ? channel_rng : rng;
  ChannelInstance inst;
  if (const auto* v = std::get_if<VblastChannelSpec>(&cfg.channel)) {
    VblastConfig vc{v->m_tx, v->n_rx, v->q, rho, false};
    const ComplexMatrix hc = sample_rayleigh(static_cast<std::size_t>(v->n_rx), static_cast<std::size_t>(v->m_tx), hrng);
    inst = transmit(vblast_channel(vc, hc), vblast_code(vc), rng, cfg.noiseless);
  } else if (const auto* l = std::get_if<LdChannelSpec>(&cfg.channel)) {
    LdCodeConfig lc;
    lc.generator_c = ld_generator(*l);
    lc.m_tx = l->m_tx;
    lc.n_rx = l->n_rx;
    lc.t_block = l->t_block;
    lc.q = l->q;
    lc.rho = rho;
    const ComplexMatrix hc = sample_rayleigh(static_cast<std::size_t>(l->n_rx), static_cast<std::size_t>(l->m_tx), hrng);
    inst = transmit(ld_channel(lc, hc), ld_code(lc), rng, cfg.noiseless);
  } else {
    const auto& s = std::get<IsiChannelSpec>(cfg.channel);
    IsiConfig ic;
    ic.taps = s.taps;
    ic.frame_len = s.frame_len;
    ic.code = s.code;
    ic.q = s.q;
    ic.rho = rho;
    inst = transmit(isi_channel(ic), isi_code(ic), rng, cfg.noiseless);
  }
  inst.seed = cfg.seed;
  inst.frame = frame;
  return inst;
}

FrameRecord run_frame(const ExperimentConfig& cfg, double snr_db, std::uint64_t frame, bool shadow_oracle) {
  const ChannelInstance inst = make_instance(cfg, snr_db, frame);
  const DecodeResult res = decode_instance(inst, cfg.preprocessing, cfg.decoder);
  FrameRecord rec;
  rec.frame = frame;
  rec.nc = res.outcome.node_generations;
  rec.unique = res.outcome.unique_nodes;
  rec.restarts = res.outcome.restarts;
  rec.budget_hit = res.outcome.budget_hit;
  const InfoSet& set = inst.code.info_set;
  const IntVector truth = set.information(inst.x_true);
  if (res.info.empty()) {
    rec.frame_error = true;
    rec.bit_errors = count_bit_errors(truth, IntVector(truth.size(), -1), symbol_alphabet(set));
    rec.distance = kInf;
  } else {
    rec.info = set.information(res.info);
    rec.frame_error = rec.info != truth;
    rec.bit_errors = count_bit_errors(truth, rec.info, symbol_alphabet(set));
    rec.distance = received_distance(inst, res.info);
  }
  if (shadow_oracle && set.bounded() && set.log2_size(inst.code.dimension()) <= 20.0) {
    const OracleResult ml = exhaustive_ml(inst);
    rec.shadow_checked = true;
    const bool same = !res.info.empty() && set.information(ml.label) == rec.info;
    const bool as_good = rec.distance <= ml.distance + 1e-9 * std::max(1.0, ml.distance);
    rec.shadow_disagree = !same && !as_good;
  }
  return rec;
}

SweepReport run_sweep(const ExperimentConfig& cfg, const SweepOptions& options) {
  SweepReport report;
  report.label = cfg.label.empty() ? cfg.decoder.name : cfg.label;
  std::size_t bits_per_frame = 0;
  {
    const ChannelInstance probe = make_instance(cfg, cfg.snr_db.empty() ? 0.0 : cfg.snr_db.front(), 0);
    report.dimension = probe.code.dimension();
    const InfoSet& set = probe.code.info_set;
    const int q = symbol_alphabet(set);
    bits_per_frame = set.information(probe.x_true).size() *
                     static_cast<std::size_t>(std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(q - 1)))));
  }
  constexpr std::uint64_t kBlock = 256;
  for (double snr : cfg.snr_db) {
    std::vector<FrameRecord> frames;
    std::uint64_t errors = 0;
    std::uint64_t done = 0;
    while (done < cfg.trials) {
      const std::uint64_t end = std::min(cfg.trials, done + kBlock);
      std::vector<FrameRecord> block(end - done);
      parallel_for(done, end, options.workers,
                   [&](std::uint64_t i) { block[i - done] = run_frame(cfg, snr, i, options.shadow_oracle); });
      bool stop = false;
      for (auto& rec : block) {
        frames.push_back(std::move(rec));
        errors += frames.back().frame_error ? 1 : 0;
        if (cfg.target_frame_errors > 0 && errors >= cfg.target_frame_errors) {
          stop = true;
          break;
        }
      }
      done = end;
      if (stop) break;
    }
    report.rows.push_back(summarize(snr, std::move(frames), report.dimension, bits_per_frame, options.keep_frames));
  }
  return report;
}

std::pair<double, double> binomial_interval(std::uint64_t k, std::uint64_t n, double confidence) {
  if (n == 0) return {0.0, 1.0};
  const double alpha = 1.0 - confidence;
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  const double lo = k == 0 ? 0.0 : boost::math::quantile(boost::math::beta_distribution<>(kd, nd - kd + 1.0), alpha / 2);
  const double hi = k == n ? 1.0 : boost::math::quantile(boost::math::beta_distribution<>(kd + 1.0, nd - kd), 1.0 - alpha / 2);
  return {lo, hi};
}

double sign_test_p(std::uint64_t wins, std::uint64_t losses) {
  const std::uint64_t n = wins + losses;
  if (n == 0) return 1.0;
  const boost::math::binomial_distribution<> dist(static_cast<double>(n), 0.5);
  const double tail = boost::math::cdf(dist, static_cast<double>(std::min(wins, losses)));
  return std::min(1.0, 2.0 * tail);
}

std::vector<double> gamma_ratio(const SweepReport& a, const SweepReport& b) {
  if (a.rows.size() != b.rows.size())
    throw Error(ErrorCode::AlignmentError, "reports have different numbers of SNR points");
  std::vector<double> out;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (std::abs(a.rows[i].snr_db - b.rows[i].snr_db) > 1e-9)
      throw Error(ErrorCode::AlignmentError, "SNR points differ at row " + std::to_string(i));
    out.push_back(a.rows[i].mean_nc / b.rows[i].mean_nc);
  }
  return out;
}

ComparisonReport compare_decoders(const std::vector<ExperimentConfig>& cfgs, const SweepOptions& options) {
  if (cfgs.empty()) throw Error(ErrorCode::ConfigError, "compare needs at least one config");
  const std::string channel = channel_json(cfgs.front().channel).dump();
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    const auto& c = cfgs[i];
    if (channel_json(c.channel).dump() != channel || c.seed != cfgs.front().seed ||
        c.fixed_channel != cfgs.front().fixed_channel || c.noiseless != cfgs.front().noiseless)
      throw Error(ErrorCode::AlignmentError, "config " + std::to_string(i) + " uses a different channel or seed");
    if (c.snr_db != cfgs.front().snr_db)
      throw Error(ErrorCode::AlignmentError, "config " + std::to_string(i) + " uses a different SNR grid");
  }
  SweepOptions opts = options;
  opts.keep_frames = true;
  ComparisonReport out;
  for (const auto& c : cfgs) out.reports.push_back(run_sweep(c, opts));
  const SweepReport& base = out.reports.front();
  for (std::size_t i = 1; i < out.reports.size(); ++i) {
    std::vector<PairedStats> stats;
    for (std::size_t r = 0; r < base.rows.size(); ++r) {
      const auto& fa = base.rows[r].frames;
      const auto& fb = out.reports[i].rows[r].frames;
      PairedStats s;
      s.snr_db = base.rows[r].snr_db;
      s.frames = std::min(fa.size(), fb.size());
      for (std::size_t f = 0; f < s.frames; ++f) {
        s.same_decision += fa[f].info == fb[f].info ? 1 : 0;
        s.same_distance += std::abs(fa[f].distance - fb[f].distance) <=
                                   1e-9 * std::max(1.0, std::abs(fa[f].distance))
                               ? 1
                               : 0;
        s.first_fewer_nodes += fa[f].nc < fb[f].nc ? 1 : 0;
        s.second_fewer_nodes += fb[f].nc < fa[f].nc ? 1 : 0;
      }
      s.sign_test_p = sign_test_p(s.first_fewer_nodes, s.second_fewer_nodes);
      stats.push_back(s);
    }
    out.paired.push_back(std::move(stats));
  }
  if (!options.keep_frames)
    for (auto& rep : out.reports)
      for (auto& row : rep.rows) row.frames.clear();
  return out;
}

void write_csv(std::ostream& out, const SweepReport& report) {
  out << "snr_db,trials,frame_errors,fer,fer_ci_lo,fer_ci_hi,bit_errors,ber,mean_nc,mean_nc_per_dim,median_nc,"
         "p99_nc,restarts,budget_hits\n";
  for (const auto& r : report.rows) {
    out << fmt(r.snr_db) << ',' << r.trials << ',' << r.frame_errors << ',' << fmt(r.fer) << ',' << fmt(r.fer_ci_lo)
        << ',' << fmt(r.fer_ci_hi) << ',' << r.bit_errors << ',' << fmt(r.ber) << ',' << fmt(r.mean_nc) << ','
        << fmt(r.mean_nc_per_dim) << ',' << fmt(r.median_nc) << ',' << fmt(r.p99_nc) << ',' << r.restarts << ','
        << r.budget_hits << '\n';
  }
}

std::string report_to_json(const SweepReport& report) { return report_json(report).dump(2); }

std::string comparison_to_json(const ComparisonReport& report) {
  json j;
  j["reports"] = json::array();
  for (const auto& r : report.reports) j["reports"].push_back(report_json(r));
  j["paired"] = json::array();
  for (std::size_t i = 0; i < report.paired.size(); ++i) {
    json rows = json::array();
    for (const auto& s : report.paired[i])
      rows.push_back(json{{"snr_db", s.snr_db},
                          {"frames", s.frames},
                          {"same_decision", s.same_decision},
                          {"same_distance", s.same_distance},
                          {"first_fewer_nodes", s.first_fewer_nodes},
                          {"second_fewer_nodes", s.second_fewer_nodes},
                          {"sign_test_p", s.sign_test_p}});
    j["paired"].push_back(json{{"first", report.reports.front().label},
                               {"second", report.reports[i + 1].label},
                               {"rows", rows}});
  }
  const auto& base = report.reports.front();
  j["gamma_ratio"] = json::array();
  for (std::size_t i = 1; i < report.reports.size(); ++i)
    j["gamma_ratio"].push_back(json{{"numerator", report.reports[i].label},
                                    {"denominator", base.label},
                                    {"values", gamma_ratio(report.reports[i], base)}});
  return j.dump(2);
}

}  // namespace treedec
