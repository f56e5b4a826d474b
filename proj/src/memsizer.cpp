#include "capstore/memsizer.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "capstore/error.hpp"

namespace capstore {

std::string_view kind_name(OrgKind k) {
  switch (k) {
    case OrgKind::SMP: return "SMP";
    case OrgKind::SEP: return "SEP";
    case OrgKind::HY: return "HY";
  }
  return "?";
}

std::optional<OrgKind> parse_kind(std::string_view s) {
  for (OrgKind k : {OrgKind::SMP, OrgKind::SEP, OrgKind::HY}) {
    if (kind_name(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view role_name(BlockRole r) {
  switch (r) {
    case BlockRole::Shared: return "shared";
    case BlockRole::Weight: return "weight";
    case BlockRole::Data: return "data";
    case BlockRole::Accumulator: return "acc";
  }
  return "?";
}

std::optional<BlockRole> parse_role(std::string_view s) {
  for (BlockRole r : {BlockRole::Shared, BlockRole::Weight, BlockRole::Data,
                      BlockRole::Accumulator}) {
    if (role_name(r) == s) return r;
  }
  return std::nullopt;
}

BlockRole role_for(MemComponent c) {
  switch (c) {
    case MemComponent::Weight: return BlockRole::Weight;
    case MemComponent::Data: return BlockRole::Data;
    case MemComponent::Accumulator: break;
  }
  return BlockRole::Accumulator;
}

std::uint64_t MemBlock::sector_bytes() const {
  const std::uint64_t slots = std::uint64_t{banks} * sectors;
  if (slots == 0) return 0;
  return (capacity + slots - 1) / slots;
}

const MemBlock* MemoryOrg::find(BlockRole role) const {
  for (const auto& b : blocks) {
    if (b.role == role) return &b;
  }
  return nullptr;
}

std::optional<std::size_t> MemoryOrg::index_of(BlockRole role) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].role == role) return i;
  }
  return std::nullopt;
}

std::uint64_t MemoryOrg::total_capacity() const {
  std::uint64_t n = 0;
  for (const auto& b : blocks) n += b.capacity;
  return n;
}

namespace {

std::vector<BlockRole> layout(OrgKind kind) {
  switch (kind) {
    case OrgKind::SMP: return {BlockRole::Shared};
    case OrgKind::SEP: return {BlockRole::Weight, BlockRole::Data, BlockRole::Accumulator};
    case OrgKind::HY:
      return {BlockRole::Shared, BlockRole::Weight, BlockRole::Data, BlockRole::Accumulator};
  }
  return {};
}

MemBlock make_block(BlockRole role, std::uint64_t capacity, std::uint32_t banks) {
  MemBlock b;
  b.role = role;
  b.capacity = capacity;
  b.banks = banks;
  b.sectors = 1;
  b.ports = role == BlockRole::Shared ? 3 : 1;
  b.gated = false;
  return b;
}

void check_sizing_inputs(const FootprintStats& stats, std::uint32_t banks) {
  if (banks == 0) throw InputError("sizing: banks must be >= 1");
  if (stats.max_total.bytes == 0) throw InputError("sizing: empty workload (zero footprint)");
}

}  // namespace

void validate(const MemoryOrg& org) {
  const auto expected = layout(org.kind);
  if (org.blocks.size() != expected.size()) {
    throw InputError(fmt::format("org {}: {} expects {} blocks, got {}", org.label,
                                 kind_name(org.kind), expected.size(), org.blocks.size()));
  }
  bool any_gated = false;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& b = org.blocks[i];
    if (b.role != expected[i]) {
      throw InputError(fmt::format("org {}: block {} should be {}, got {}", org.label, i,
                                   role_name(expected[i]), role_name(b.role)));
    }
    const std::uint32_t ports = b.role == BlockRole::Shared ? 3 : 1;
    if (b.ports != ports) {
      throw InputError(fmt::format("org {}: {} block must have {} port(s)", org.label,
                                   role_name(b.role), ports));
    }
    if (b.banks == 0 || b.sectors == 0) {
      throw InputError(fmt::format("org {}: {} block needs banks >= 1 and sectors >= 1",
                                   org.label, role_name(b.role)));
    }
    if (!b.gated && b.sectors != 1) {
      throw InputError(fmt::format("org {}: ungated {} block must have one sector",
                                   org.label, role_name(b.role)));
    }
    any_gated = any_gated || b.gated;
  }
  if (any_gated != org.power_gated) {
    throw InputError(fmt::format("org {}: power_gated flag disagrees with blocks", org.label));
  }
}

MemoryOrg size_smp(const FootprintStats& stats, std::uint32_t banks) {
  check_sizing_inputs(stats, banks);
  MemoryOrg org;
  org.kind = OrgKind::SMP;
  org.label = "SMP";
  org.blocks.push_back(make_block(BlockRole::Shared, stats.max_total.bytes, banks));
  return org;
}

MemoryOrg size_sep(const FootprintStats& stats, std::uint32_t banks) {
  check_sizing_inputs(stats, banks);
  MemoryOrg org;
  org.kind = OrgKind::SEP;
  org.label = "SEP";
  for (MemComponent c : kAllComponents) {
    const std::uint64_t cap = stats.max_of(c).bytes;
    if (cap == 0) {
      throw InputError(fmt::format("size_sep: {} footprint is zero in every op",
                                   role_name(role_for(c))));
    }
    org.blocks.push_back(make_block(role_for(c), cap, banks));
  }
  return org;
}

MemoryOrg size_hy(const FootprintStats& stats, std::uint32_t banks) {
  check_sizing_inputs(stats, banks);
  const std::uint64_t minima = stats.sum_of_minima();
  // the max-total op holds at least the minimum of every component
  if (minima > stats.max_total.bytes) {
    throw std::logic_error("size_hy: sum of component minima exceeds max total");
  }
  MemoryOrg org;
  org.kind = OrgKind::HY;
  org.label = "HY";
  org.blocks.push_back(make_block(BlockRole::Shared, stats.max_total.bytes - minima, banks));
  for (MemComponent c : kAllComponents) {
    org.blocks.push_back(make_block(role_for(c), stats.min_of(c).bytes, banks));
  }
  return org;
}

MemoryOrg size_org(OrgKind kind, const FootprintStats& stats, std::uint32_t banks) {
  switch (kind) {
    case OrgKind::SMP: return size_smp(stats, banks);
    case OrgKind::SEP: return size_sep(stats, banks);
    case OrgKind::HY: return size_hy(stats, banks);
  }
  throw InputError("size_org: unknown kind");
}

MemoryOrg apply_gating(const MemoryOrg& org, const SectorAssignment& sectors) {
  if (org.power_gated) throw InputError(fmt::format("apply_gating: {} is already gated", org.label));
  for (const auto& [role, s] : sectors) {
    if (s == 0) {
      throw InputError(fmt::format("apply_gating: sector count 0 for {} block", role_name(role)));
    }
    if (!org.find(role)) {
      throw InputError(fmt::format("apply_gating: {} has no {} block", org.label, role_name(role)));
    }
  }
  MemoryOrg out = org;
  out.label = "PG-" + org.label;
  out.power_gated = false;
  for (auto& b : out.blocks) {
    auto it = sectors.find(b.role);
    b.sectors = it == sectors.end() ? 1 : it->second;
    b.gated = b.sectors > 1;
    out.power_gated = out.power_gated || b.gated;
  }
  return out;
}

SectorAssignment reference_sectors(OrgKind kind) {
  switch (kind) {
    case OrgKind::SMP: return {{BlockRole::Shared, 256}};
    case OrgKind::SEP:
      return {{BlockRole::Weight, 64}, {BlockRole::Data, 16}, {BlockRole::Accumulator, 128}};
    case OrgKind::HY: return {{BlockRole::Shared, 128}};
  }
  return {};
}

std::vector<MemoryOrg> reference_orgs(const FootprintStats& stats, std::uint32_t banks) {
  std::vector<MemoryOrg> out;
  for (OrgKind k : {OrgKind::SMP, OrgKind::SEP, OrgKind::HY}) {
    MemoryOrg base = size_org(k, stats, banks);
    MemoryOrg gated = apply_gating(base, reference_sectors(k));
    out.push_back(std::move(base));
    out.push_back(std::move(gated));
  }
  return out;
}

std::optional<MemoryOrg> reference_org(std::string_view label, const FootprintStats& stats,
                                       std::uint32_t banks) {
  const bool gated = label.starts_with("PG-");
  const auto kind = parse_kind(gated ? label.substr(3) : label);
  if (!kind) return std::nullopt;
  MemoryOrg org = size_org(*kind, stats, banks);
  return gated ? apply_gating(org, reference_sectors(*kind)) : org;
}

nlohmann::ordered_json to_json(const MemoryOrg& org) {
  nlohmann::ordered_json j;
  j["label"] = org.label;
  j["kind"] = std::string(kind_name(org.kind));
  j["power_gated"] = org.power_gated;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : org.blocks) {
    nlohmann::ordered_json jb;
    jb["role"] = std::string(role_name(b.role));
    jb["capacity"] = b.capacity;
    jb["banks"] = b.banks;
    jb["sectors"] = b.sectors;
    jb["ports"] = b.ports;
    jb["gated"] = b.gated;
    jb["sector_bytes"] = b.sector_bytes();
    j["blocks"].push_back(std::move(jb));
  }
  return j;
}

MemoryOrg org_from_json(const nlohmann::json& doc) {
  try {
    MemoryOrg org;
    org.label = doc.at("label").get<std::string>();
    const auto kind = parse_kind(doc.at("kind").get<std::string>());
    if (!kind) throw InputError("org: unknown kind '" + doc.at("kind").get<std::string>() + "'");
    org.kind = *kind;
    for (const auto& jb : doc.at("blocks")) {
      MemBlock b;
      const auto role = parse_role(jb.at("role").get<std::string>());
      if (!role) throw InputError("org: unknown block role '" + jb.at("role").get<std::string>() + "'");
      b.role = *role;
      b.capacity = jb.at("capacity").get<std::uint64_t>();
      b.banks = jb.value("banks", kDefaultBanks);
      b.sectors = jb.value("sectors", 1u);
      b.ports = jb.value("ports", b.role == BlockRole::Shared ? 3u : 1u);
      b.gated = jb.value("gated", b.sectors > 1);
      org.blocks.push_back(b);
    }
    org.power_gated = doc.value("power_gated",
                                std::any_of(org.blocks.begin(), org.blocks.end(),
                                            [](const MemBlock& b) { return b.gated; }));
    validate(org);
    return org;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("org: ") + e.what());
  }
}

namespace {

std::uint64_t scale(std::uint64_t count, std::uint64_t part, std::uint64_t whole) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(count) * part / whole);
}

[[noreturn]] void overflow(const WorkloadOp& op, const MemoryOrg& org, const MemBlock& b,
                           std::uint64_t resident) {
  throw InfeasibleError(fmt::format("op {} needs {} B in {} {} block of {} B", op.name(),
                                    resident, org.label, role_name(b.role), b.capacity));
}

}  // namespace

std::vector<BlockTraffic> route_op(const WorkloadOp& op, const MemoryOrg& org) {
  std::vector<BlockTraffic> out(org.blocks.size());
  const auto shared = org.index_of(BlockRole::Shared);

  for (MemComponent c : kAllComponents) {
    const std::uint64_t bytes = op.footprint[c];
    const std::uint64_t reads = op.reads[c];
    const std::uint64_t writes = op.writes[c];
    const auto own = org.index_of(role_for(c));

    if (org.kind == OrgKind::SMP || !own) {
      if (!shared) throw InputError(fmt::format("org {}: no block serves {}", org.label, component_name(c)));
      out[*shared].resident += bytes;
      out[*shared].reads += reads;
      out[*shared].writes += writes;
      continue;
    }
    if (org.kind == OrgKind::SEP || !shared) {
      out[*own].resident += bytes;
      out[*own].reads += reads;
      out[*own].writes += writes;
      continue;
    }
    // hybrid: separated block first, shared block takes the overflow
    const std::uint64_t sep = std::min(bytes, org.blocks[*own].capacity);
    const std::uint64_t rest = bytes - sep;
    const std::uint64_t sep_reads = bytes == 0 ? reads : scale(reads, sep, bytes);
    const std::uint64_t sep_writes = bytes == 0 ? writes : scale(writes, sep, bytes);
    out[*own].resident += sep;
    out[*own].reads += sep_reads;
    out[*own].writes += sep_writes;
    out[*shared].resident += rest;
    out[*shared].reads += reads - sep_reads;
    out[*shared].writes += writes - sep_writes;
  }

  for (std::size_t i = 0; i < org.blocks.size(); ++i) {
    if (out[i].resident > org.blocks[i].capacity) overflow(op, org, org.blocks[i], out[i].resident);
  }
  return out;
}

}  // namespace capstore
