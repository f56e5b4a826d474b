#include "capstore/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "capstore/costmodel.hpp"
#include "capstore/dse.hpp"
#include "capstore/error.hpp"
#include "capstore/memsizer.hpp"
#include "capstore/powergate.hpp"
#include "capstore/simulator.hpp"

namespace fs = std::filesystem;

namespace capstore::cli {

nlohmann::ordered_json analyze_json(const Workload& w) {
  const auto profile = offchip_accesses(w);
  const auto stats = footprint_stats(w);
  nlohmann::ordered_json j;
  j["label"] = w.label;
  j["routing_iterations"] = w.routing_iterations;
  j["ops"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    const auto& op = w.ops[i];
    nlohmann::ordered_json row;
    row["op"] = std::string(op.name());
    row["repeat"] = op.repeat;
    for (MemComponent c : kAllComponents) {
      row["footprint"][std::string(component_name(c))] = op.footprint[c];
    }
    row["footprint"]["total"] = op.total_footprint();
    for (MemComponent c : kAllComponents) row["reads"][std::string(component_name(c))] = op.reads[c];
    for (MemComponent c : kAllComponents) row["writes"][std::string(component_name(c))] = op.writes[c];
    row["cycles"] = op.cycles;
    row["offchip_reads"] = profile.reads[i];
    row["offchip_writes"] = profile.writes[i];
    j["ops"].push_back(std::move(row));
  }
  auto extreme = [&](const Extreme& e) {
    return nlohmann::ordered_json{{"bytes", e.bytes}, {"op", std::string(w.ops[e.op_index].name())}};
  };
  j["max_total"] = extreme(stats.max_total);
  for (MemComponent c : kAllComponents) {
    const std::string name(component_name(c));
    j["extremes"][name] = {{"max", extreme(stats.max_of(c))}, {"min", extreme(stats.min_of(c))}};
  }
  j["total_cycles"] = w.total_cycles();
  j["offchip_total_reads"] = profile.total_reads();
  j["offchip_total_writes"] = profile.total_writes();
  return j;
}

std::string analyze_csv(const Workload& w) {
  const auto profile = offchip_accesses(w);
  std::ostringstream out;
  out << "op,repeat,fp_weight,fp_data,fp_acc,fp_total,rd_weight,rd_data,rd_acc,wr_weight,wr_data,"
         "wr_acc,cycles,offchip_reads,offchip_writes\n";
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    const auto& op = w.ops[i];
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", op.name(), op.repeat,
                       op.footprint.weight, op.footprint.data, op.footprint.acc,
                       op.total_footprint(), op.reads.weight, op.reads.data, op.reads.acc,
                       op.writes.weight, op.writes.data, op.writes.acc, op.cycles,
                       profile.reads[i], profile.writes[i]);
  }
  return out.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

unsigned threads_from_env() {
  const char* v = std::getenv("CAPSTORE_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0 || n > 4096) {
    throw InputError(fmt::format("CAPSTORE_THREADS must be a non-negative integer, got '{}'", v));
  }
  return static_cast<unsigned>(n);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
}

struct Options {
  std::string workload;
  std::string calibration;
  std::string org;
  std::string sweep;
  std::string params;
  std::string mode = "replay";
  std::string out = "out";
  std::string format = "structured";
  bool overlap = false;
  std::vector<std::string> reports;
};

// Collects outputs and the inputs they depend on, then writes everything
// plus manifest.json.
class Emitter {
 public:
  Emitter(std::string subcommand, const std::string& dir) : subcommand_(std::move(subcommand)), dir_(dir) {}

  void input(const std::string& path) {
    if (!path.empty()) inputs_.emplace_back(path, sha256_hex(read_file(path)));
  }
  void output(const std::string& name, std::string body) { outputs_[name] = std::move(body); }
  void json(const std::string& name, const nlohmann::ordered_json& j) { output(name, j.dump(2) + "\n"); }

  void flush() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw InputError(fmt::format("cannot create output directory {}: {}", dir_.string(), ec.message()));
    nlohmann::ordered_json m;
    m["tool"] = "capstore";
    m["version"] = CAPSTORE_VERSION;
    m["subcommand"] = subcommand_;
    m["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : inputs_) m["inputs"].push_back({{"path", path}, {"sha256", digest}});
    m["outputs"] = nlohmann::ordered_json::array();
    for (const auto& [name, body] : outputs_) {
      write(name, body);
      m["outputs"].push_back({{"file", name}, {"sha256", sha256_hex(body)}});
    }
    write("manifest.json", m.dump(2) + "\n");
  }

 private:
  void write(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir_ / name).string());
    f << body;
  }

  std::string subcommand_;
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::map<std::string, std::string> outputs_;
};

CostMode mode_of(const Options& o) {
  auto m = parse_mode(o.mode);
  if (!m) throw InputError("--mode must be replay or model");
  return *m;
}

bool csv(const Options& o) {
  if (o.format == "csv") return true;
  if (o.format == "structured") return false;
  throw InputError("--format must be csv or structured");
}

struct Inputs {
  Workload workload;
  std::optional<CalibrationTable> table;
  CostMode mode = CostMode::Replay;
};

// Loads everything the subcommand references before any computation.
Inputs load_inputs(const Options& o, Emitter& em, bool need_workload) {
  Inputs in;
  in.mode = mode_of(o);
  csv(o);
  if (need_workload) {
    if (o.workload.empty()) throw InputError("--workload is required");
    in.workload = load_workload_file(o.workload);
    em.input(o.workload);
  }
  if (!o.calibration.empty()) {
    in.table = load_calibration_file(o.calibration);
    em.input(o.calibration);
  }
  if (in.mode == CostMode::Replay && !in.table) {
    throw InputError("replay mode needs --calibration");
  }
  return in;
}

// Model-mode parameters: explicit file, else fitted to the calibration
// anchors, else unit costs.
CostParams resolve_params(const Options& o, const Inputs& in, Emitter& em) {
  if (!o.params.empty()) {
    em.input(o.params);
    return params_from_json(parse_json_file(o.params));
  }
  if (in.table) {
    if (in.mode == CostMode::Model) return calibrate(*in.table, in.workload).params;
    return with_system(CostParams{}, in.table->system);
  }
  return CostParams::unit();
}

MemoryOrg resolve_org(const Options& o, const Workload& w, Emitter& em) {
  if (o.org.empty()) throw InputError("--org is required");
  if (fs::is_regular_file(o.org)) {
    em.input(o.org);
    return org_from_json(parse_json_file(o.org));
  }
  auto org = reference_org(o.org, footprint_stats(w));
  if (!org) throw InputError(fmt::format("--org '{}' is neither a file nor a reference label", o.org));
  return *org;
}

ScheduleOptions schedule_options(const Options& o, const CostParams& p) {
  return {p.wake_latency_cycles, o.overlap};
}

int cmd_analyze(const Options& o, std::ostream& out) {
  Emitter em("analyze", o.out);
  Options lax = o;
  lax.mode = "model";
  const Inputs in = load_inputs(lax, em, true);
  if (csv(o)) {
    em.output("analysis.csv", analyze_csv(in.workload));
  } else {
    em.json("analysis.json", analyze_json(in.workload));
  }
  em.flush();
  const auto stats = footprint_stats(in.workload);
  out << fmt::format("max total footprint {} B at {}\n", stats.max_total.bytes,
                     in.workload.ops[stats.max_total.op_index].name());
  return kOk;
}

int cmd_size(const Options& o, std::ostream& out) {
  Emitter em("size", o.out);
  Options lax = o;
  lax.mode = "model";
  const Inputs in = load_inputs(lax, em, true);
  const auto stats = footprint_stats(in.workload);
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  std::vector<MemoryOrg> orgs;
  if (o.org.empty()) {
    orgs = reference_orgs(stats);
  } else {
    orgs.push_back(resolve_org(o, in.workload, em));
  }
  std::ostringstream table;
  table << "org,role,capacity,banks,sectors,ports,gated,sector_bytes\n";
  for (const auto& org : orgs) {
    j.push_back(to_json(org));
    for (const auto& b : org.blocks) {
      table << fmt::format("{},{},{},{},{},{},{},{}\n", org.label, role_name(b.role), b.capacity,
                           b.banks, b.sectors, b.ports, b.gated ? 1 : 0, b.sector_bytes());
    }
    out << fmt::format("{:<8} {} B\n", org.label, org.total_capacity());
  }
  if (csv(o)) {
    em.output("orgs.csv", table.str());
  } else {
    em.json("orgs.json", j);
  }
  em.flush();
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  Emitter em("simulate", o.out);
  const Inputs in = load_inputs(o, em, true);
  const MemoryOrg org = resolve_org(o, in.workload, em);
  const CostParams params = resolve_params(o, in, em);
  validate(org);
  const GateSchedule s = build_schedule(in.workload, org, schedule_options(o, params));
  const SimulationResult sim = simulate_schedule(s, in.workload, org);
  if (!sim.clean()) {
    std::string msg = fmt::format("{} protocol violation(s)", sim.violations.size());
    if (!sim.violations.empty()) msg += ": " + sim.violations.front();
    throw ProtocolViolation(msg);
  }
  const EvalReport r = evaluate(in.workload, org, s, params, in.mode, in.table ? &*in.table : nullptr);
  if (csv(o)) {
    em.output("report.csv", to_csv(r));
  } else {
    em.json("report.json", to_json(r));
    em.json("schedule.json", to_json(s, org));
  }
  em.flush();
  out << fmt::format("{} ({}): on-chip {:.4f} mJ, {:.4f} mm2, total {:.4f} mJ\n", org.label,
                     mode_name(in.mode), r.onchip_energy_mj, r.onchip_area_mm2, r.grand_total_mj);
  return kOk;
}

int cmd_baseline(const Options& o, std::ostream& out) {
  Emitter em("baseline", o.out);
  const Inputs in = load_inputs(o, em, true);
  if (!in.table) throw InputError("baseline needs --calibration");
  const CostParams params = resolve_params(o, in, em);
  const EvalReport r = evaluate_all_on_chip(in.workload, params, in.mode, *in.table);
  if (csv(o)) {
    em.output("baseline.csv", to_csv(r));
  } else {
    em.json("baseline.json", to_json(r));
  }
  em.flush();
  out << fmt::format("{}: on-chip {:.4f} mJ, total {:.4f} mJ\n", r.org_label, r.onchip_energy_mj,
                     r.grand_total_mj);
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  Emitter em("sweep", o.out);
  const Inputs in = load_inputs(o, em, true);
  SweepSpec spec = SweepSpec::reference();
  if (!o.sweep.empty()) {
    em.input(o.sweep);
    spec = sweep_from_json(parse_json_file(o.sweep));
  }
  const CostParams params = resolve_params(o, in, em);
  SweepContext ctx;
  ctx.workload = &in.workload;
  ctx.params = &params;
  ctx.mode = in.mode;
  ctx.table = in.table ? &*in.table : nullptr;
  ctx.schedule = schedule_options(o, params);
  ctx.threads = threads_from_env();
  const SweepResult r = run_sweep(spec, ctx);
  em.output("sweep.csv", sweep_csv(r));
  em.output("frontier.csv", frontier_csv(r));
  em.json("summary.json", summary_json(r));
  em.flush();
  out << fmt::format("{} configurations, selected {} ({:.4f} mJ, {:.4f} mm2)\n", r.points.size(),
                     r.best().config, r.best().energy_mj, r.best().area_mm2);
  return kOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.reports.size() != 2) throw InputError("compare takes two report files: BASE OTHER");
  Emitter em("compare", o.out);
  csv(o);
  em.input(o.reports[0]);
  em.input(o.reports[1]);
  const EvalReport a = report_from_json(parse_json_file(o.reports[0]));
  const EvalReport b = report_from_json(parse_json_file(o.reports[1]));
  const Savings s = compare(a, b);
  auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("undefined"); };
  if (csv(o)) {
    em.output("compare.csv", fmt::format("base,other,energy_pct,onchip_energy_pct,area_pct,onchip_area_pct\n"
                                         "{},{},{},{},{},{}\n",
                                         a.org_label, b.org_label, cell(s.energy), cell(s.onchip_energy),
                                         cell(s.area), cell(s.onchip_area)));
  } else {
    nlohmann::ordered_json j;
    j["base"] = a.org_label;
    j["other"] = b.org_label;
    j["savings"] = to_json(s);
    em.json("compare.json", j);
  }
  em.flush();
  out << fmt::format("{} vs {}: total energy saving {} %, on-chip energy saving {} %\n", a.org_label,
                     b.org_label, cell(s.energy), cell(s.onchip_energy));
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  Emitter em("fit", o.out);
  Options lax = o;
  lax.mode = "model";
  const Inputs in = load_inputs(lax, em, true);
  if (!in.table) throw InputError("fit needs --calibration");
  const FitResult fit = calibrate(*in.table, in.workload);
  em.json("fit.json", to_json(fit));
  em.json("params.json", to_json(fit.params));
  em.flush();
  out << fmt::format("fit: ordering {}, energy rms {:.3f}, area rms {:.3f}\n",
                     fit.ordering_preserved ? "preserved" : "NOT preserved", fit.energy_rms_rel,
                     fit.area_rms_rel);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CapsuleNet accelerator on-chip memory explorer", "capstore"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CAPSTORE_VERSION);
  Options o;

  auto common = [&](CLI::App* c, bool workload) {
    if (workload) c->add_option("--workload", o.workload, "workload profile (JSON)")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o.out, "output directory");
    c->add_option("--format", o.format, "structured | csv")->check(CLI::IsMember({"structured", "csv"}));
  };
  auto costs = [&](CLI::App* c) {
    c->add_option("--calibration", o.calibration, "calibration table (JSON)")->check(CLI::ExistingFile);
    c->add_option("--mode", o.mode, "replay | model")->check(CLI::IsMember({"replay", "model"}));
    c->add_option("--params", o.params, "model parameters (JSON) for model mode")->check(CLI::ExistingFile);
  };

  auto* analyze = app.add_subcommand("analyze", "per-op resource tables and off-chip profile");
  common(analyze, true);
  auto* size = app.add_subcommand("size", "size the memory organizations");
  common(size, true);
  size->add_option("--org", o.org, "org file or reference label (default: all six)");
  auto* simulate = app.add_subcommand("simulate", "gate schedule and energy/area report for one org");
  common(simulate, true);
  costs(simulate);
  simulate->add_option("--org", o.org, "org file or reference label")->required();
  simulate->add_flag("--overlap-wakeup", o.overlap, "hide wake latency behind the previous op");
  auto* sweep = app.add_subcommand("sweep", "exhaustive design-space sweep");
  common(sweep, true);
  costs(sweep);
  sweep->add_option("--sweep", o.sweep, "sweep spec (JSON); default: reference configurations")->check(CLI::ExistingFile);
  sweep->add_flag("--overlap-wakeup", o.overlap, "hide wake latency behind the previous op");
  auto* baseline = app.add_subcommand("baseline", "report for the all-on-chip memory");
  common(baseline, true);
  costs(baseline);
  auto* cmp = app.add_subcommand("compare", "savings of OTHER relative to BASE");
  common(cmp, false);
  cmp->add_option("reports", o.reports, "BASE OTHER report files")->expected(2)->required()->check(CLI::ExistingFile);
  auto* fit = app.add_subcommand("fit", "fit model parameters to the calibration anchors");
  common(fit, true);
  fit->add_option("--calibration", o.calibration, "calibration table (JSON)")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << CAPSTORE_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(o, out);
    if (size->parsed()) return cmd_size(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (baseline->parsed()) return cmd_baseline(o, out);
    if (cmp->parsed()) return cmd_compare(o, out);
    if (fit->parsed()) return cmd_fit(o, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ProtocolViolation& e) {
    err << "protocol violation: " << e.what() << "\n";
    return kProtocolViolation;
  }
  return kInputError;
}

}  // namespace capstore::cli
