#include "capstore/costmodel.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "capstore/error.hpp"

namespace capstore {

double scale_by_ports(double factor_at_3, std::uint32_t ports) {
  if (ports <= 1) return 1.0;
  return 1.0 + (factor_at_3 - 1.0) * (static_cast<double>(ports) - 1.0) / 2.0;
}

double CostParams::e_read(std::uint64_t capacity, std::uint32_t ports, std::uint32_t /*banks*/) const {
  return dyn_coeff_pj * scale_by_ports(dyn_port_factor, ports) *
         std::pow(static_cast<double>(capacity), dyn_exponent);
}

double CostParams::e_write(std::uint64_t capacity, std::uint32_t ports, std::uint32_t banks) const {
  return write_factor * e_read(capacity, ports, banks);
}

double CostParams::p_leak(std::uint64_t powered_bytes, std::uint32_t ports) const {
  return scale_by_ports(leak_port_factor, ports) *
         (leak_base_mw + leak_per_byte_mw * static_cast<double>(powered_bytes));
}

double CostParams::e_wake(std::uint64_t group_bytes) const {
  return wake_energy_per_byte_pj * static_cast<double>(group_bytes);
}

double CostParams::area(std::uint64_t capacity, std::uint32_t ports, bool gated,
                        std::uint32_t /*sectors*/) const {
  const double bytes = static_cast<double>(capacity);
  const double gated_bytes = gated ? bytes : 0.0;
  return area_base_mm2 + scale_by_ports(area_port_factor, ports) *
                             (area_per_byte_mm2 * bytes + area_gated_per_byte_mm2 * gated_bytes);
}

CostParams CostParams::unit() {
  CostParams p;
  p.dyn_coeff_pj = 1.0;
  p.dyn_exponent = 0.0;
  p.dyn_port_factor = 1.0;
  p.write_factor = 1.0;
  return p;
}

double dynamic_energy(const MemBlock& block, std::uint64_t reads, std::uint64_t writes,
                      const CostParams& p) {
  return static_cast<double>(reads) * p.e_read(block.capacity, block.ports, block.banks) +
         static_cast<double>(writes) * p.e_write(block.capacity, block.ports, block.banks);
}

double static_energy(const MemBlock& block, std::uint64_t active_bytes, std::uint64_t cycles,
                     const CostParams& p) {
  if (active_bytes > block.capacity) {
    throw InputError(fmt::format("static_energy: {} active bytes exceed {} B {} block",
                                 active_bytes, block.capacity, role_name(block.role)));
  }
  const std::uint64_t powered = block.gated ? active_bytes : block.capacity;
  return p.p_leak(powered, block.ports) * static_cast<double>(cycles) * p.clock_period_ns;
}

double wakeup_energy(const MemBlock& block, std::uint64_t groups_woken, const CostParams& p) {
  if (!block.gated) return 0.0;
  return static_cast<double>(groups_woken) * p.e_wake(block.group_bytes());
}

bool CalibrationTable::has(const std::string& org, BlockRole role) const {
  return anchors.count({org, role}) > 0;
}

std::vector<std::string> CalibrationTable::org_labels() const {
  std::set<std::string> s;
  for (const auto& [key, _] : anchors) s.insert(key.first);
  return {s.begin(), s.end()};
}

double CalibrationTable::org_energy_mj(const std::string& org) const {
  double e = 0;
  for (const auto& [key, a] : anchors) {
    if (key.first == org) e += a.energy_mj;
  }
  return e;
}

double CalibrationTable::org_area_mm2(const std::string& org) const {
  double e = 0;
  for (const auto& [key, a] : anchors) {
    if (key.first == org) e += a.area_mm2;
  }
  return e;
}

Anchor replay_lookup(const CalibrationTable& table, const std::string& org, BlockRole role) {
  auto it = table.anchors.find({org, role});
  if (it == table.anchors.end()) {
    throw MissingAnchorError(fmt::format("no calibration anchor for ({}, {})", org, role_name(role)));
  }
  return it->second;
}

namespace {

double non_negative(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw InputError(fmt::format("{}: missing numeric field '{}'", where, key));
  }
  const double v = obj[key].get<double>();
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InputError(fmt::format("{}: field '{}' must be a finite non-negative number", where, key));
  }
  return v;
}

double optional_number(const nlohmann::json& obj, const char* key, double fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return non_negative(obj, key, where);
}

}  // namespace

CalibrationTable load_calibration(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InputError("calibration: document must be an object");
  CalibrationTable t;
  t.technology = doc.value("technology", "");

  if (doc.contains("system")) {
    const auto& s = doc["system"];
    const std::string where = "calibration system";
    t.system.clock_period_ns = optional_number(s, "clock_period_ns", 1.0, where);
    t.system.offchip_access_pj = optional_number(s, "offchip_access_pJ", 0.0, where);
    t.system.accel_energy_per_cycle_pj = optional_number(s, "accel_energy_per_cycle_pJ", 0.0, where);
    t.system.accel_area_mm2 = optional_number(s, "accel_area_mm2", 0.0, where);
    t.system.wake_latency_cycles =
        static_cast<std::uint64_t>(optional_number(s, "wake_latency_cycles", 0.0, where));
    t.system.wake_energy_per_byte_pj = optional_number(s, "wake_energy_per_byte_pJ", 0.0, where);
    t.system.write_factor = optional_number(s, "write_factor", 1.0, where);
  }

  if (!doc.contains("anchors") || !doc["anchors"].is_array()) {
    throw InputError("calibration: missing array 'anchors'");
  }
  for (const auto& a : doc["anchors"]) {
    if (!a.contains("org") || !a["org"].is_string() || !a.contains("block") || !a["block"].is_string()) {
      throw InputError("calibration: every anchor needs string 'org' and 'block'");
    }
    const auto org = a["org"].get<std::string>();
    const auto role = parse_role(a["block"].get<std::string>());
    const std::string where = fmt::format("calibration anchor ({}, {})", org, a["block"].get<std::string>());
    if (!role) throw InputError(where + ": unknown block");
    Anchor anchor{non_negative(a, "area_mm2", where), non_negative(a, "energy_mJ", where)};
    if (!t.anchors.emplace(std::make_pair(org, *role), anchor).second) {
      throw InputError(where + ": duplicate anchor");
    }
  }

  if (doc.contains("baseline")) {
    const auto& b = doc["baseline"];
    const std::string where = "calibration baseline";
    BaselineSpec spec;
    spec.label = b.value("label", spec.label);
    spec.capacity = static_cast<std::uint64_t>(
        optional_number(b, "capacity", static_cast<double>(spec.capacity), where));
    spec.buffer_energy_mj = optional_number(b, "buffer_energy_mJ", 0.0, where);
    Anchor anchor{non_negative(b, "area_mm2", where), non_negative(b, "energy_mJ", where)};
    if (!t.anchors.emplace(std::make_pair(spec.label, BlockRole::Shared), anchor).second) {
      throw InputError(where + ": label collides with an anchor");
    }
    t.baseline = spec;
  }
  return t;
}

CalibrationTable load_calibration_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open calibration file '{}'", path));
  try {
    return load_calibration(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
}

nlohmann::ordered_json to_json(const CalibrationTable& t) {
  nlohmann::ordered_json j;
  j["technology"] = t.technology;
  auto& s = j["system"];
  s["clock_period_ns"] = t.system.clock_period_ns;
  s["offchip_access_pJ"] = t.system.offchip_access_pj;
  s["accel_energy_per_cycle_pJ"] = t.system.accel_energy_per_cycle_pj;
  s["accel_area_mm2"] = t.system.accel_area_mm2;
  s["wake_latency_cycles"] = t.system.wake_latency_cycles;
  s["wake_energy_per_byte_pJ"] = t.system.wake_energy_per_byte_pj;
  s["write_factor"] = t.system.write_factor;
  if (t.baseline) {
    const auto a = replay_lookup(t, t.baseline->label, BlockRole::Shared);
    auto& b = j["baseline"];
    b["label"] = t.baseline->label;
    b["capacity"] = t.baseline->capacity;
    b["area_mm2"] = a.area_mm2;
    b["energy_mJ"] = a.energy_mj;
    b["buffer_energy_mJ"] = t.baseline->buffer_energy_mj;
  }
  j["anchors"] = nlohmann::ordered_json::array();
  for (const auto& [key, a] : t.anchors) {
    if (t.baseline && key.first == t.baseline->label) continue;
    j["anchors"].push_back({{"org", key.first},
                            {"block", std::string(role_name(key.second))},
                            {"area_mm2", a.area_mm2},
                            {"energy_mJ", a.energy_mj}});
  }
  return j;
}

CostParams with_system(CostParams p, const SystemConstants& sys) {
  p.clock_period_ns = sys.clock_period_ns;
  p.offchip_access_pj = sys.offchip_access_pj;
  p.accel_energy_per_cycle_pj = sys.accel_energy_per_cycle_pj;
  p.accel_area_mm2 = sys.accel_area_mm2;
  p.wake_latency_cycles = sys.wake_latency_cycles;
  p.wake_energy_per_byte_pj = sys.wake_energy_per_byte_pj;
  p.write_factor = sys.write_factor;
  return p;
}

nlohmann::ordered_json to_json(const CostParams& p) {
  return {{"dyn_coeff_pJ", p.dyn_coeff_pj},
          {"dyn_exponent", p.dyn_exponent},
          {"dyn_port_factor", p.dyn_port_factor},
          {"write_factor", p.write_factor},
          {"leak_base_mW", p.leak_base_mw},
          {"leak_per_byte_mW", p.leak_per_byte_mw},
          {"leak_port_factor", p.leak_port_factor},
          {"wake_energy_per_byte_pJ", p.wake_energy_per_byte_pj},
          {"wake_latency_cycles", p.wake_latency_cycles},
          {"area_base_mm2", p.area_base_mm2},
          {"area_per_byte_mm2", p.area_per_byte_mm2},
          {"area_gated_per_byte_mm2", p.area_gated_per_byte_mm2},
          {"area_port_factor", p.area_port_factor},
          {"clock_period_ns", p.clock_period_ns},
          {"offchip_access_pJ", p.offchip_access_pj},
          {"accel_energy_per_cycle_pJ", p.accel_energy_per_cycle_pj},
          {"accel_area_mm2", p.accel_area_mm2}};
}

CostParams params_from_json(const nlohmann::json& doc) {
  const std::string where = "cost params";
  CostParams p;
  p.dyn_coeff_pj = optional_number(doc, "dyn_coeff_pJ", p.dyn_coeff_pj, where);
  p.dyn_exponent = optional_number(doc, "dyn_exponent", p.dyn_exponent, where);
  p.dyn_port_factor = optional_number(doc, "dyn_port_factor", p.dyn_port_factor, where);
  p.write_factor = optional_number(doc, "write_factor", p.write_factor, where);
  p.leak_base_mw = optional_number(doc, "leak_base_mW", p.leak_base_mw, where);
  p.leak_per_byte_mw = optional_number(doc, "leak_per_byte_mW", p.leak_per_byte_mw, where);
  p.leak_port_factor = optional_number(doc, "leak_port_factor", p.leak_port_factor, where);
  p.wake_energy_per_byte_pj = optional_number(doc, "wake_energy_per_byte_pJ", p.wake_energy_per_byte_pj, where);
  p.wake_latency_cycles = static_cast<std::uint64_t>(
      optional_number(doc, "wake_latency_cycles", static_cast<double>(p.wake_latency_cycles), where));
  p.area_base_mm2 = optional_number(doc, "area_base_mm2", p.area_base_mm2, where);
  p.area_per_byte_mm2 = optional_number(doc, "area_per_byte_mm2", p.area_per_byte_mm2, where);
  p.area_gated_per_byte_mm2 = optional_number(doc, "area_gated_per_byte_mm2", p.area_gated_per_byte_mm2, where);
  p.area_port_factor = optional_number(doc, "area_port_factor", p.area_port_factor, where);
  p.clock_period_ns = optional_number(doc, "clock_period_ns", p.clock_period_ns, where);
  p.offchip_access_pj = optional_number(doc, "offchip_access_pJ", p.offchip_access_pj, where);
  p.accel_energy_per_cycle_pj = optional_number(doc, "accel_energy_per_cycle_pJ", p.accel_energy_per_cycle_pj, where);
  p.accel_area_mm2 = optional_number(doc, "accel_area_mm2", p.accel_area_mm2, where);
  return p;
}

}  // namespace capstore
