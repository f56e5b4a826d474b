#include "capstore/simulator.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "capstore/error.hpp"

namespace capstore {

namespace {
constexpr double kPicoToMilli = 1e-9;
}

std::string_view mode_name(CostMode m) { return m == CostMode::Replay ? "replay" : "model"; }

std::optional<CostMode> parse_mode(std::string_view s) {
  if (s == "replay") return CostMode::Replay;
  if (s == "model") return CostMode::Model;
  return std::nullopt;
}

RoutedAccesses route_accesses(const Workload& w, const MemoryOrg& org) {
  RoutedAccesses out(org.blocks.size());
  for (const auto& op : w.ops) {
    const auto traffic = route_op(op, org);
    for (std::size_t b = 0; b < org.blocks.size(); ++b) out[b].push_back(traffic[b]);
  }
  return out;
}

double EvalReport::op_onchip_energy_mj(std::size_t op) const {
  double e = 0;
  for (const auto& b : blocks) e += b.energy.at(op).total_pj();
  return e * kPicoToMilli;
}

double EvalReport::dynamic_mj() const {
  double e = 0;
  for (const auto& b : blocks) for (const auto& o : b.energy) e += o.dynamic_pj;
  return e * kPicoToMilli;
}

double EvalReport::static_mj() const {
  double e = 0;
  for (const auto& b : blocks) for (const auto& o : b.energy) e += o.static_pj;
  return e * kPicoToMilli;
}

double EvalReport::wakeup_mj() const {
  double e = 0;
  for (const auto& b : blocks) for (const auto& o : b.energy) e += o.wakeup_pj;
  return e * kPicoToMilli;
}

namespace {

std::uint64_t powered_bytes(const MemBlock& block, std::uint32_t active) {
  if (!block.gated) return block.capacity;
  return std::min<std::uint64_t>(block.capacity, std::uint64_t{active} * block.group_bytes());
}

// Cycles op i keeps its sectors powered: its executions plus the wake stall
// that precedes it.
std::uint64_t powered_cycles(const Workload& w, const GateSchedule& s, std::size_t i) {
  const std::uint64_t stall = i > 0 ? s.boundary_stall.at(i - 1) : 0;
  return w.ops[i].cycles * w.ops[i].repeat + stall;
}

void check_schedule(const Workload& w, const MemoryOrg& org, const GateSchedule& s) {
  if (s.ops.size() != w.ops.size() || s.sectors.size() != org.blocks.size()) {
    throw InputError("evaluate: schedule does not match workload/org");
  }
}

void finish_totals(EvalReport& r, const Workload& w, const CostParams& p, bool offchip) {
  r.onchip_energy_mj = 0;
  r.onchip_area_mm2 = 0;
  for (const auto& b : r.blocks) {
    r.onchip_energy_mj += b.energy_mj;
    r.onchip_area_mm2 += b.area_mm2;
  }
  if (offchip) {
    const auto profile = offchip_accesses(w);
    double accesses = 0;
    for (std::size_t i = 0; i < w.ops.size(); ++i) {
      r.offchip_reads += profile.reads[i] * w.ops[i].repeat;
      r.offchip_writes += profile.writes[i] * w.ops[i].repeat;
    }
    accesses = static_cast<double>(r.offchip_reads + r.offchip_writes);
    r.offchip_energy_mj = accesses * p.offchip_access_pj * kPicoToMilli;
  }
  r.accelerator_energy_mj +=
      static_cast<double>(r.latency_cycles) * p.accel_energy_per_cycle_pj * kPicoToMilli;
  r.grand_total_mj = r.onchip_energy_mj + r.offchip_energy_mj + r.accelerator_energy_mj;
  r.total_area_mm2 = r.onchip_area_mm2 + p.accel_area_mm2;
  if (r.grand_total_mj > 0) {
    r.fractions.accelerator = r.accelerator_energy_mj / r.grand_total_mj;
    r.fractions.onchip = r.onchip_energy_mj / r.grand_total_mj;
    r.fractions.offchip = r.offchip_energy_mj / r.grand_total_mj;
  }
}

EvalReport evaluate_impl(const Workload& w, const MemoryOrg& org, const GateSchedule& schedule,
                         const CostParams& p, CostMode mode, const CalibrationTable* table,
                         bool offchip) {
  check_schedule(w, org, schedule);
  if (mode == CostMode::Replay && !table) {
    throw InputError("evaluate: replay mode needs a calibration table");
  }

  EvalReport r;
  r.org_label = org.label;
  r.kind = org.kind;
  r.mode = mode;
  for (const auto& op : w.ops) {
    r.ops.push_back(op.kind);
    r.repeat.push_back(op.repeat);
  }
  r.compute_cycles = schedule.compute_cycles;
  r.latency_cycles = schedule.latency_cycles;

  const auto routed = route_accesses(w, org);
  for (std::size_t b = 0; b < org.blocks.size(); ++b) {
    const MemBlock& blk = org.blocks[b];
    BlockReport br;
    br.block = blk;
    br.traffic = routed[b];
    double total_pj = 0;
    for (std::size_t i = 0; i < w.ops.size(); ++i) {
      const auto& t = routed[b][i];
      const std::uint32_t active = schedule.active[i][b];
      OpEnergy e;
      e.dynamic_pj = dynamic_energy(blk, t.reads * w.ops[i].repeat, t.writes * w.ops[i].repeat, p);
      e.static_pj = static_energy(blk, powered_bytes(blk, active), powered_cycles(w, schedule, i), p);
      e.wakeup_pj = i > 0 ? wakeup_energy(blk, schedule.woken_at(i - 1, b), p) : 0.0;
      br.active_groups.push_back(active);
      br.energy.push_back(e);
      total_pj += e.total_pj();
    }

    if (mode == CostMode::Model) {
      br.area_mm2 = p.area(blk.capacity, blk.ports, blk.gated, blk.sectors);
      br.energy_mj = total_pj * kPicoToMilli;
    } else {
      const Anchor anchor = replay_lookup(*table, org.label, blk.role);
      br.area_mm2 = anchor.area_mm2;
      br.energy_mj = anchor.energy_mj;
      const double target_pj = anchor.energy_mj / kPicoToMilli;
      if (total_pj > 0) {
        const double k = target_pj / total_pj;
        for (auto& e : br.energy) {
          e.dynamic_pj *= k;
          e.static_pj *= k;
          e.wakeup_pj *= k;
        }
      } else {
        // no modeled activity: spread the anchor as leakage over time
        const double cycles = static_cast<double>(schedule.latency_cycles);
        for (std::size_t i = 0; i < w.ops.size(); ++i) {
          br.energy[i] = {};
          if (cycles > 0) {
            br.energy[i].static_pj =
                target_pj * static_cast<double>(powered_cycles(w, schedule, i)) / cycles;
          }
        }
      }
    }
    r.blocks.push_back(std::move(br));
  }
  finish_totals(r, w, p, offchip);
  return r;
}

}  // namespace

EvalReport evaluate(const Workload& w, const MemoryOrg& org, const GateSchedule& schedule,
                    const CostParams& params, CostMode mode, const CalibrationTable* table) {
  return evaluate_impl(w, org, schedule, params, mode, table, true);
}

MemoryOrg all_on_chip_org(const CalibrationTable& table, std::uint32_t banks) {
  const BaselineSpec spec = table.baseline.value_or(BaselineSpec{});
  MemoryOrg org;
  org.kind = OrgKind::SMP;
  org.label = spec.label;
  MemBlock b;
  b.role = BlockRole::Shared;
  b.capacity = spec.capacity;
  b.banks = banks;
  b.sectors = 1;
  b.ports = 3;
  org.blocks.push_back(b);
  return org;
}

EvalReport evaluate_all_on_chip(const Workload& w, const CostParams& params, CostMode mode,
                                const CalibrationTable& table) {
  if (!table.baseline) throw InputError("calibration has no baseline section");
  const MemoryOrg org = all_on_chip_org(table);
  const GateSchedule schedule = build_schedule(w, org, {params.wake_latency_cycles, false});
  EvalReport r = evaluate_impl(w, org, schedule, params, mode, &table, false);
  r.all_on_chip = true;
  r.accelerator_energy_mj += table.baseline->buffer_energy_mj;
  r.grand_total_mj = r.onchip_energy_mj + r.offchip_energy_mj + r.accelerator_energy_mj;
  if (r.grand_total_mj > 0) {
    r.fractions.accelerator = r.accelerator_energy_mj / r.grand_total_mj;
    r.fractions.onchip = r.onchip_energy_mj / r.grand_total_mj;
    r.fractions.offchip = r.offchip_energy_mj / r.grand_total_mj;
  }
  return r;
}

namespace {

std::optional<double> saving(double a, double b) {
  if (a == 0.0) return std::nullopt;
  return (1.0 - b / a) * 100.0;
}

}  // namespace

Savings compare(const EvalReport& a, const EvalReport& b) {
  return {saving(a.grand_total_mj, b.grand_total_mj), saving(a.onchip_energy_mj, b.onchip_energy_mj),
          saving(a.total_area_mm2, b.total_area_mm2), saving(a.onchip_area_mm2, b.onchip_area_mm2)};
}

nlohmann::ordered_json to_json(const Savings& s) {
  auto v = [](const std::optional<double>& x) -> nlohmann::ordered_json {
    if (!x) return "undefined";
    return *x;
  };
  return {{"energy_pct", v(s.energy)},
          {"onchip_energy_pct", v(s.onchip_energy)},
          {"area_pct", v(s.area)},
          {"onchip_area_pct", v(s.onchip_area)}};
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["org"] = r.org_label;
  j["kind"] = std::string(kind_name(r.kind));
  j["mode"] = std::string(mode_name(r.mode));
  j["all_on_chip"] = r.all_on_chip;
  j["onchip_energy_mJ"] = r.onchip_energy_mj;
  j["offchip_energy_mJ"] = r.offchip_energy_mj;
  j["accelerator_energy_mJ"] = r.accelerator_energy_mj;
  j["grand_total_mJ"] = r.grand_total_mj;
  j["onchip_area_mm2"] = r.onchip_area_mm2;
  j["total_area_mm2"] = r.total_area_mm2;
  j["dynamic_mJ"] = r.dynamic_mj();
  j["static_mJ"] = r.static_mj();
  j["wakeup_mJ"] = r.wakeup_mj();
  j["fractions"] = {{"accelerator", r.fractions.accelerator},
                    {"onchip", r.fractions.onchip},
                    {"offchip", r.fractions.offchip}};
  j["offchip_reads"] = r.offchip_reads;
  j["offchip_writes"] = r.offchip_writes;
  j["compute_cycles"] = r.compute_cycles;
  j["latency_cycles"] = r.latency_cycles;

  auto& per_op = j["per_op_onchip_mJ"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < r.ops.size(); ++i) {
    per_op[std::string(op_name(r.ops[i]))] = r.op_onchip_energy_mj(i);
  }

  auto& blocks = j["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : r.blocks) {
    nlohmann::ordered_json jb;
    jb["role"] = std::string(role_name(b.block.role));
    jb["capacity"] = b.block.capacity;
    jb["banks"] = b.block.banks;
    jb["sectors"] = b.block.sectors;
    jb["ports"] = b.block.ports;
    jb["gated"] = b.block.gated;
    jb["area_mm2"] = b.area_mm2;
    jb["energy_mJ"] = b.energy_mj;
    auto& ops = jb["ops"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.ops.size(); ++i) {
      ops.push_back({{"op", std::string(op_name(r.ops[i]))},
                     {"repeat", r.repeat[i]},
                     {"reads", b.traffic[i].reads},
                     {"writes", b.traffic[i].writes},
                     {"resident_bytes", b.traffic[i].resident},
                     {"active_groups", b.active_groups[i]},
                     {"dynamic_pJ", b.energy[i].dynamic_pj},
                     {"static_pJ", b.energy[i].static_pj},
                     {"wakeup_pJ", b.energy[i].wakeup_pj}});
    }
    blocks.push_back(std::move(jb));
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& doc) {
  try {
    EvalReport r;
    r.org_label = doc.at("org").get<std::string>();
    if (auto k = parse_kind(doc.at("kind").get<std::string>())) r.kind = *k;
    if (auto m = parse_mode(doc.at("mode").get<std::string>())) r.mode = *m;
    r.all_on_chip = doc.value("all_on_chip", false);
    r.onchip_energy_mj = doc.at("onchip_energy_mJ").get<double>();
    r.offchip_energy_mj = doc.at("offchip_energy_mJ").get<double>();
    r.accelerator_energy_mj = doc.at("accelerator_energy_mJ").get<double>();
    r.grand_total_mj = doc.at("grand_total_mJ").get<double>();
    r.onchip_area_mm2 = doc.at("onchip_area_mm2").get<double>();
    r.total_area_mm2 = doc.at("total_area_mm2").get<double>();
    r.offchip_reads = doc.value("offchip_reads", std::uint64_t{0});
    r.offchip_writes = doc.value("offchip_writes", std::uint64_t{0});
    r.compute_cycles = doc.value("compute_cycles", std::uint64_t{0});
    r.latency_cycles = doc.value("latency_cycles", std::uint64_t{0});
    if (doc.contains("fractions")) {
      r.fractions.accelerator = doc["fractions"].value("accelerator", 0.0);
      r.fractions.onchip = doc["fractions"].value("onchip", 0.0);
      r.fractions.offchip = doc["fractions"].value("offchip", 0.0);
    }
    for (const auto& jb : doc.value("blocks", nlohmann::json::array())) {
      BlockReport b;
      if (auto role = parse_role(jb.at("role").get<std::string>())) b.block.role = *role;
      b.block.capacity = jb.value("capacity", std::uint64_t{0});
      b.block.banks = jb.value("banks", kDefaultBanks);
      b.block.sectors = jb.value("sectors", 1u);
      b.block.ports = jb.value("ports", 1u);
      b.block.gated = jb.value("gated", false);
      b.area_mm2 = jb.at("area_mm2").get<double>();
      b.energy_mj = jb.at("energy_mJ").get<double>();
      r.blocks.push_back(std::move(b));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "org,block,op,repeat,reads,writes,resident_bytes,active_groups,dynamic_pJ,static_pJ,wakeup_pJ\n";
  for (const auto& b : r.blocks) {
    for (std::size_t i = 0; i < r.ops.size(); ++i) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.org_label, role_name(b.block.role),
                         op_name(r.ops[i]), r.repeat[i], b.traffic[i].reads, b.traffic[i].writes,
                         b.traffic[i].resident, b.active_groups[i], b.energy[i].dynamic_pj,
                         b.energy[i].static_pj, b.energy[i].wakeup_pj);
    }
  }
  return out.str();
}

std::vector<AnchorObservation> observe_anchors(const CalibrationTable& table, const Workload& w,
                                               const std::vector<MemoryOrg>& orgs,
                                               const ScheduleOptions& opts) {
  std::vector<AnchorObservation> out;
  for (const auto& org : orgs) {
    const GateSchedule s = build_schedule(w, org, opts);
    const auto routed = route_accesses(w, org);
    for (std::size_t b = 0; b < org.blocks.size(); ++b) {
      const MemBlock& blk = org.blocks[b];
      if (!table.has(org.label, blk.role)) continue;
      AnchorObservation o;
      o.org = org.label;
      o.role = blk.role;
      o.capacity = blk.capacity;
      o.ports = blk.ports;
      o.banks = blk.banks;
      o.sectors = blk.sectors;
      o.gated = blk.gated;
      o.anchor = replay_lookup(table, org.label, blk.role);
      for (std::size_t i = 0; i < w.ops.size(); ++i) {
        const double cycles = static_cast<double>(powered_cycles(w, s, i));
        o.reads += static_cast<double>(routed[b][i].reads * w.ops[i].repeat);
        o.writes += static_cast<double>(routed[b][i].writes * w.ops[i].repeat);
        o.cycles += cycles;
        o.active_byte_cycles += static_cast<double>(powered_bytes(blk, s.active[i][b])) * cycles;
        if (i > 0 && blk.gated) {
          o.woken_bytes += static_cast<double>(s.woken_at(i - 1, b) * blk.group_bytes());
        }
      }
      out.push_back(std::move(o));
    }
  }
  return out;
}

FitResult calibrate(const CalibrationTable& table, const Workload& w, std::uint32_t banks) {
  const auto orgs = reference_orgs(footprint_stats(w), banks);
  const auto obs = observe_anchors(table, w, orgs, {table.system.wake_latency_cycles, false});
  return fit_params(table, obs);
}

}  // namespace capstore
