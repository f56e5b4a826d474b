#include "capstore/workload.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "capstore/error.hpp"

namespace capstore {

std::string_view component_name(MemComponent c) {
  switch (c) {
    case MemComponent::Weight: return "weight";
    case MemComponent::Data: return "data";
    case MemComponent::Accumulator: return "acc";
  }
  return "?";
}

std::string_view op_name(OpKind k) {
  switch (k) {
    case OpKind::C1: return "C1";
    case OpKind::PC: return "PC";
    case OpKind::CCFC: return "CC-FC";
    case OpKind::SumSquash: return "SumSquash";
    case OpKind::UpdateSum: return "UpdateSum";
  }
  return "?";
}

std::optional<OpKind> parse_op_name(std::string_view name) {
  for (OpKind k : kCanonicalOrder) {
    if (op_name(k) == name) return k;
  }
  return std::nullopt;
}

std::uint64_t& PerComponent::operator[](MemComponent c) {
  switch (c) {
    case MemComponent::Weight: return weight;
    case MemComponent::Data: return data;
    case MemComponent::Accumulator: break;
  }
  return acc;
}

std::uint64_t PerComponent::operator[](MemComponent c) const {
  return const_cast<PerComponent&>(*this)[c];
}

bool Workload::is_canonical() const {
  if (ops.size() != kCanonicalOrder.size()) return false;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].kind != kCanonicalOrder[i]) return false;
  }
  return true;
}

std::uint64_t Workload::total_cycles() const {
  std::uint64_t n = 0;
  for (const auto& op : ops) n += op.cycles * op.repeat;
  return n;
}

namespace {

std::uint64_t read_count(const nlohmann::json& obj, std::string_view key,
                         std::string_view where) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    throw InputError(fmt::format("{}: missing field '{}'", where, key));
  }
  if (!it->is_number_integer()) {
    throw InputError(fmt::format("{}: field '{}' must be an integer", where, key));
  }
  if (!it->is_number_unsigned() && it->get<std::int64_t>() < 0) {
    throw InputError(fmt::format("{}: field '{}' is negative", where, key));
  }
  return it->get<std::uint64_t>();
}

PerComponent read_components(const nlohmann::json& op, std::string_view key,
                             std::string_view op_label) {
  auto it = op.find(std::string(key));
  const std::string where = fmt::format("op {}", op_label);
  if (it == op.end() || !it->is_object()) {
    throw InputError(fmt::format("{}: missing object '{}'", where, key));
  }
  const std::string inner = fmt::format("op {} {}", op_label, key);
  PerComponent pc;
  for (MemComponent c : kAllComponents) {
    pc[c] = read_count(*it, component_name(c), inner);
  }
  return pc;
}

}  // namespace

Workload load_workload(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InputError("workload: document must be an object");

  Workload w;
  if (auto it = doc.find("label"); it != doc.end()) {
    if (!it->is_string()) throw InputError("workload: 'label' must be a string");
    w.label = it->get<std::string>();
  }
  const std::uint64_t iters = read_count(doc, "routing_iterations", "workload");
  if (iters == 0) throw InputError("workload: 'routing_iterations' must be positive");
  w.routing_iterations = static_cast<std::uint32_t>(iters);

  auto ops_it = doc.find("ops");
  if (ops_it == doc.end() || !ops_it->is_array()) {
    throw InputError("workload: missing array 'ops'");
  }
  if (ops_it->empty()) throw InputError("workload: no operations");

  std::array<std::optional<WorkloadOp>, 5> slots;
  for (const auto& entry : *ops_it) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
      throw InputError("workload: every op needs a string 'name'");
    }
    const auto name = entry["name"].get<std::string>();
    const auto kind = parse_op_name(name);
    if (!kind) throw InputError(fmt::format("workload: unknown op '{}'", name));
    auto& slot = slots[static_cast<int>(*kind)];
    if (slot) throw InputError(fmt::format("workload: duplicate op '{}'", name));

    WorkloadOp op;
    op.kind = *kind;
    op.footprint = read_components(entry, "footprint", name);
    op.reads = read_components(entry, "reads", name);
    op.writes = read_components(entry, "writes", name);
    op.cycles = read_count(entry, "cycles", fmt::format("op {}", name));
    op.repeat = is_routing_op(*kind) ? w.routing_iterations : 1;
    slot = op;
  }
  for (OpKind k : kCanonicalOrder) {
    const auto& slot = slots[static_cast<int>(k)];
    if (!slot) throw InputError(fmt::format("workload: missing op '{}'", op_name(k)));
    w.ops.push_back(*slot);
  }
  return w;
}

Workload load_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open workload file '{}'", path));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
  return load_workload(doc);
}

nlohmann::ordered_json to_json(const Workload& w) {
  auto comps = [](const PerComponent& pc) {
    nlohmann::ordered_json j;
    for (MemComponent c : kAllComponents) j[std::string(component_name(c))] = pc[c];
    return j;
  };
  nlohmann::ordered_json doc;
  doc["label"] = w.label;
  doc["routing_iterations"] = w.routing_iterations;
  doc["ops"] = nlohmann::ordered_json::array();
  for (const auto& op : w.ops) {
    nlohmann::ordered_json j;
    j["name"] = std::string(op.name());
    j["footprint"] = comps(op.footprint);
    j["reads"] = comps(op.reads);
    j["writes"] = comps(op.writes);
    j["cycles"] = op.cycles;
    doc["ops"].push_back(std::move(j));
  }
  return doc;
}

std::uint64_t OffChipProfile::total_reads() const {
  return std::accumulate(reads.begin(), reads.end(), std::uint64_t{0});
}

std::uint64_t OffChipProfile::total_writes() const {
  return std::accumulate(writes.begin(), writes.end(), std::uint64_t{0});
}

OffChipProfile offchip_accesses(const Workload& w) {
  for (std::size_t i = 1; i < w.ops.size(); ++i) {
    if (w.ops[i].kind <= w.ops[i - 1].kind) {
      throw InputError("offchip_accesses: ops are not in canonical order");
    }
  }
  OffChipProfile p;
  p.reads.assign(w.ops.size(), 0);
  p.writes.assign(w.ops.size(), 0);
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    const auto& op = w.ops[i];
    if (is_routing_op(op.kind)) continue;
    p.reads[i] = op.writes.weight + op.writes.data;
    if (i + 1 < w.ops.size() && !is_routing_op(w.ops[i + 1].kind)) {
      p.writes[i] = w.ops[i + 1].reads.data;
    }
  }
  return p;
}

std::uint64_t FootprintStats::sum_of_minima() const {
  return min[0].bytes + min[1].bytes + min[2].bytes;
}

std::uint64_t FootprintStats::sum_of_maxima() const {
  return max[0].bytes + max[1].bytes + max[2].bytes;
}

FootprintStats footprint_stats(const Workload& w) {
  if (w.ops.empty()) throw InputError("footprint_stats: no operations");
  FootprintStats s;
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    const auto& op = w.ops[i];
    // strict comparisons keep the earliest op on ties
    if (i == 0 || op.total_footprint() > s.max_total.bytes) {
      s.max_total = {op.total_footprint(), i};
    }
    for (MemComponent c : kAllComponents) {
      const int k = static_cast<int>(c);
      const std::uint64_t b = op.footprint[c];
      if (i == 0 || b > s.max[k].bytes) s.max[k] = {b, i};
      if (i == 0 || b < s.min[k].bytes) s.min[k] = {b, i};
    }
  }
  return s;
}

}  // namespace capstore
