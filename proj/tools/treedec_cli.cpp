// treedec: command line front end.
//
//   treedec simulate <config.json> [--out sweep.csv] [--json] [--workers k] [--shadow-oracle]
//   treedec compare <a.json> <b.json>... [--out prefix] [--json] [--workers k] [--shadow-oracle]
//   treedec decode <instance.json> [--config cfg.json] [--decoder se] [--trace] [--out trace.txt] [--json]
//   treedec reduce <basis.json> [--delta 0.99] [--deep] [--out reduced.json] [--json]
//   treedec export <config.json> [--snr 10] [--frame 0] [--out instance.json]

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "treedec/error.hpp"
#include "treedec/lattice.hpp"
#include "treedec/oracle.hpp"
#include "treedec/sim.hpp"

using namespace treedec;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  return out;
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

std::string label_text(const IntVector& x) {
  std::string s = "[";
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? " " : "") + std::to_string(x[i]);
  return s + "]";
}

struct Common {
  std::string out;
  bool json_out = false;
  bool trace = false;
  bool shadow = false;
  unsigned workers = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output path");
  cmd->add_flag("--json", c.json_out, "Print a machine-readable JSON report");
  cmd->add_flag("--trace", c.trace, "Dump the node trace");
  cmd->add_flag("--shadow-oracle", c.shadow, "Cross-check every frame against exhaustive ML");
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

int run_simulate(const std::string& path, const Common& c) {
  const ExperimentConfig cfg = load_config(path);
  SweepOptions opts;
  opts.workers = c.workers;
  opts.shadow_oracle = c.shadow;
  const SweepReport report = run_sweep(cfg, opts);
  if (!c.out.empty()) {
    auto f = open_out(c.out);
    write_csv(f, report);
  }
  if (c.json_out) {
    std::cout << report_to_json(report) << '\n';
  } else if (c.out.empty()) {
    write_csv(std::cout, report);
  }
  if (c.shadow) {
    std::uint64_t checked = 0, bad = 0;
    for (const auto& r : report.rows) {
      checked += r.shadow_checked;
      bad += r.shadow_disagreements;
    }
    std::cerr << "shadow oracle: " << checked << " frames checked, " << bad << " disagreements\n";
  }
  return 0;
}

int run_compare(const std::vector<std::string>& paths, const Common& c) {
  std::vector<ExperimentConfig> cfgs;
  for (const auto& p : paths) cfgs.push_back(load_config(p));
  SweepOptions opts;
  opts.workers = c.workers;
  opts.shadow_oracle = c.shadow;
  const ComparisonReport cmp = compare_decoders(cfgs, opts);
  if (!c.out.empty()) {
    for (std::size_t i = 0; i < cmp.reports.size(); ++i) {
      auto f = open_out(c.out + "_" + std::to_string(i) + "_" + cmp.reports[i].label + ".csv");
      write_csv(f, cmp.reports[i]);
    }
  }
  if (c.json_out) {
    std::cout << comparison_to_json(cmp) << '\n';
    return 0;
  }
  for (const auto& r : cmp.reports) {
    std::cout << "# " << r.label << '\n';
    write_csv(std::cout, r);
  }
  for (std::size_t i = 0; i < cmp.paired.size(); ++i) {
    const auto gamma = gamma_ratio(cmp.reports[i + 1], cmp.reports[0]);
    std::cout << "# paired " << cmp.reports[0].label << " vs " << cmp.reports[i + 1].label << '\n'
              << "snr_db,frames,same_decision,same_distance,first_fewer_nodes,second_fewer_nodes,sign_test_p,gamma\n";
    for (std::size_t r = 0; r < cmp.paired[i].size(); ++r) {
      const auto& s = cmp.paired[i][r];
      std::cout << s.snr_db << ',' << s.frames << ',' << s.same_decision << ',' << s.same_distance << ','
                << s.first_fewer_nodes << ',' << s.second_fewer_nodes << ',' << s.sign_test_p << ',' << gamma[r]
                << '\n';
    }
  }
  return 0;
}

struct DecodeFlags {
  std::string config;
  std::string decoder;
  std::string left;
  std::string right;
  std::string boundary;
  std::optional<double> bias;
  std::optional<double> step;
  std::optional<double> c0;
};

int run_decode(const std::string& path, const DecodeFlags& d, const Common& c) {
  const ChannelInstance inst = instance_from_json(read_file(path));
  ExperimentConfig cfg;
  if (!d.config.empty()) cfg = load_config(d.config);
  auto& pre = cfg.preprocessing;
  auto& dec = cfg.decoder;
  if (!d.decoder.empty()) dec.name = d.decoder;
  if (d.left == "zf") pre.left = LeftMode::ZeroForcing;
  else if (d.left == "mmse") pre.left = LeftMode::Mmse;
  if (d.right == "none") pre.right = RightMode::None;
  else if (d.right == "lll") pre.right = RightMode::Lll;
  else if (d.right == "permute") pre.right = RightMode::Permute;
  else if (d.right == "lll+permute") pre.right = RightMode::LllPermute;
  if (d.boundary == "lattice") pre.boundary = BoundaryMode::Lattice;
  else if (d.boundary == "constrained") pre.boundary = BoundaryMode::Constrained;
  if (d.bias) dec.bias = *d.bias;
  if (d.step) dec.step = *d.step;
  if (d.c0) dec.c0 = *d.c0;

  const DecodeResult res = decode_instance(inst, pre, dec, c.trace);
  const auto& o = res.outcome;
  const IntVector truth = inst.code.info_set.information(inst.x_true);
  const IntVector info = inst.code.info_set.information(res.info);
  const bool have_truth = !inst.x_true.empty();

  std::ostringstream trace;
  if (c.trace) write_trace(trace, o.trace);
  if (c.trace && !c.out.empty()) {
    auto f = open_out(c.out);
    f << trace.str();
  }
  if (c.json_out) {
    json j{{"decoder", dec.name},
           {"status", to_string(o.status)},
           {"info", res.info},
           {"distance", o.distance},
           {"node_generations", o.node_generations},
           {"unique_nodes", o.unique_nodes},
           {"restarts", o.restarts},
           {"budget_hit", o.budget_hit},
           {"out_of_set", res.out_of_set}};
    if (o.decoded_label) j["search_label"] = *o.decoded_label;
    if (have_truth) j["frame_error"] = info != truth;
    if (c.trace && c.out.empty()) j["trace"] = trace.str();
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "decoder: " << dec.name << '\n'
            << "status: " << to_string(o.status) << '\n'
            << "info: " << label_text(res.info) << '\n'
            << "distance: " << o.distance << '\n'
            << "node_generations: " << o.node_generations << '\n'
            << "unique_nodes: " << o.unique_nodes << '\n'
            << "restarts: " << o.restarts << '\n'
            << "out_of_set: " << (res.out_of_set ? "yes" : "no") << '\n';
  if (have_truth) std::cout << "frame_error: " << (info != truth ? "yes" : "no") << '\n';
  if (c.trace && c.out.empty()) std::cout << trace.str();
  return 0;
}

int run_reduce(const std::string& path, double delta, bool deep, const Common& c) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("basis JSON: ") + e.what());
  }
  LllOptions opts;
  opts.delta = delta;
  opts.deep_insertion = deep;
  json rows = j;
  if (j.is_object()) {
    for (const auto& item : j.items())
      if (item.key() != "basis" && item.key() != "delta" && item.key() != "deep_insertion")
        throw Error(ErrorCode::ConfigError, item.key() + ": unknown key");
    rows = j.at("basis");
    if (j.contains("delta")) opts.delta = j["delta"].get<double>();
    if (j.contains("deep_insertion")) opts.deep_insertion = j["deep_insertion"].get<bool>();
  }
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw Error(ErrorCode::ConfigError, "basis: expected a nested array (columns are basis vectors)");
  Matrix b(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != b.cols()) throw Error(ErrorCode::ConfigError, "basis: ragged rows");
    for (std::size_t k = 0; k < b.cols(); ++k) b(i, k) = rows[i][k].get<double>();
  }
  const LllResult res = lll_reduce(b, opts);
  const double s_before = sparsity_index(qr_decompose(b).r);
  const double s_after = sparsity_index(qr_decompose(res.basis).r);
  json out{{"reduced_basis", matrix_json(res.basis)},
           {"T", int_matrix_json(res.record.t)},
           {"T_inv", int_matrix_json(res.record.t_inv)},
           {"sparsity_before", s_before},
           {"sparsity_after", s_after}};
  if (!c.out.empty()) {
    auto f = open_out(c.out);
    f << out.dump(2) << '\n';
  }
  if (c.json_out || c.out.empty()) {
    std::cout << out.dump(2) << '\n';
  }
  return 0;
}

int run_export(const std::string& path, std::optional<double> snr, std::uint64_t frame, const std::string& out) {
  const ExperimentConfig cfg = load_config(path);
  ChannelInstance inst = make_instance(cfg, snr.value_or(cfg.snr_db.front()), frame);
  const std::string text = instance_to_json(inst);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    auto f = open_out(out);
    f << text << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-search lattice decoding toolkit"};
  app.require_subcommand(1);

  Common sim_c, cmp_c, dec_c, red_c;
  std::string sim_cfg;
  auto* sim = app.add_subcommand("simulate", "Run an SNR sweep from a config file");
  sim->add_option("config", sim_cfg, "Experiment config (JSON)")->required();
  add_common(sim, sim_c);

  std::vector<std::string> cmp_cfgs;
  auto* cmp = app.add_subcommand("compare", "Run several decoders on the same frames");
  cmp->add_option("configs", cmp_cfgs, "Experiment configs (JSON)")->required();
  add_common(cmp, cmp_c);

  std::string instance;
  DecodeFlags dflags;
  auto* dec = app.add_subcommand("decode", "Decode one exported instance");
  dec->add_option("instance", instance, "Instance record (JSON)")->required();
  dec->add_option("--config", dflags.config, "Take preprocessing and decoder settings from a config");
  dec->add_option("--decoder", dflags.decoder, "Decoder name");
  dec->add_option("--left", dflags.left, "zf or mmse")->check(CLI::IsMember({"zf", "mmse"}));
  dec->add_option("--right", dflags.right, "none, lll, permute or lll+permute")
      ->check(CLI::IsMember({"none", "lll", "permute", "lll+permute"}));
  dec->add_option("--boundary", dflags.boundary, "lattice or constrained")
      ->check(CLI::IsMember({"lattice", "constrained"}));
  dec->add_option("--bias", dflags.bias, "Bias b");
  dec->add_option("--step", dflags.step, "Fano step");
  dec->add_option("--C0", dflags.c0, "Initial radius");
  add_common(dec, dec_c);

  std::string basis;
  double delta = 0.99;
  bool deep = false;
  auto* red = app.add_subcommand("reduce", "LLL-reduce a basis");
  red->add_option("basis", basis, "Basis (JSON nested array, columns are basis vectors)")->required();
  red->add_option("--delta", delta, "Lovasz parameter");
  red->add_flag("--deep", deep, "Use deep insertion");
  add_common(red, red_c);

  std::string exp_cfg, exp_out;
  std::optional<double> exp_snr;
  std::uint64_t exp_frame = 0;
  auto* exp = app.add_subcommand("export", "Write one frame of an experiment as an instance record");
  exp->add_option("config", exp_cfg, "Experiment config (JSON)")->required();
  exp->add_option("--snr", exp_snr, "SNR in dB (default: first grid point)");
  exp->add_option("--frame", exp_frame, "Frame index");
  exp->add_option("--out", exp_out, "Output path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return run_simulate(sim_cfg, sim_c);
    if (*cmp) return run_compare(cmp_cfgs, cmp_c);
    if (*dec) return run_decode(instance, dflags, dec_c);
    if (*red) return run_reduce(basis, delta, deep, red_c);
    if (*exp) return run_export(exp_cfg, exp_snr, exp_frame, exp_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
