#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capstore/workload.hpp"

namespace capstore {

enum class OrgKind { SMP, SEP, HY };
enum class BlockRole { Shared, Weight, Data, Accumulator };

std::string_view kind_name(OrgKind k);
std::optional<OrgKind> parse_kind(std::string_view s);
std::string_view role_name(BlockRole r);  // "shared" | "weight" | "data" | "acc"
std::optional<BlockRole> parse_role(std::string_view s);
BlockRole role_for(MemComponent c);

inline constexpr std::uint32_t kDefaultBanks = 16;

// A banked scratchpad. Each bank holds `sectors` sectors; sector i of every
// bank sits behind one sleep transistor and forms sector group i.
struct MemBlock {
  BlockRole role = BlockRole::Shared;
  std::uint64_t capacity = 0;  // bytes
  std::uint32_t banks = kDefaultBanks;
  std::uint32_t sectors = 1;
  std::uint32_t ports = 1;
  bool gated = false;

  // ceil(capacity / (banks * sectors)); the last group may be logically short.
  std::uint64_t sector_bytes() const;
  std::uint64_t group_bytes() const { return sector_bytes() * banks; }

  friend bool operator==(const MemBlock&, const MemBlock&) = default;
};

struct MemoryOrg {
  OrgKind kind = OrgKind::SMP;
  std::vector<MemBlock> blocks;
  bool power_gated = false;
  std::string label;

  const MemBlock* find(BlockRole role) const;
  std::optional<std::size_t> index_of(BlockRole role) const;
  std::uint64_t total_capacity() const;

  friend bool operator==(const MemoryOrg&, const MemoryOrg&) = default;
};

// Throws InputError when the block set violates the kind's layout rules.
void validate(const MemoryOrg& org);

MemoryOrg size_smp(const FootprintStats& stats, std::uint32_t banks = kDefaultBanks);
MemoryOrg size_sep(const FootprintStats& stats, std::uint32_t banks = kDefaultBanks);
MemoryOrg size_hy(const FootprintStats& stats, std::uint32_t banks = kDefaultBanks);
MemoryOrg size_org(OrgKind kind, const FootprintStats& stats,
                   std::uint32_t banks = kDefaultBanks);

using SectorAssignment = std::map<BlockRole, std::uint32_t>;

// Returns a copy with per-block sector counts applied (unlisted roles keep
// S = 1). Blocks with S > 1 become gated. Capacities never change.
MemoryOrg apply_gating(const MemoryOrg& org, const SectorAssignment& sectors);

// Sector counts used by the six reference organizations.
SectorAssignment reference_sectors(OrgKind kind);

// SMP, PG-SMP, SEP, PG-SEP, HY, PG-HY sized from `stats`.
std::vector<MemoryOrg> reference_orgs(const FootprintStats& stats,
                                      std::uint32_t banks = kDefaultBanks);

// Builds one of the reference organizations by label ("PG-SEP", ...).
std::optional<MemoryOrg> reference_org(std::string_view label, const FootprintStats& stats,
                                       std::uint32_t banks = kDefaultBanks);

nlohmann::ordered_json to_json(const MemoryOrg& org);
MemoryOrg org_from_json(const nlohmann::json& doc);

// Per-block traffic of one op execution under an organization's mapping.
struct BlockTraffic {
  std::uint64_t resident = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
};

// SMP: everything lands on the shared block. SEP: each component on its
// own block. HY: each component fills its separated block first and the
// shared block takes the rest; accesses split in proportion to the bytes
// held in each block. Throws InfeasibleError naming op and block when a
// block would overflow.
std::vector<BlockTraffic> route_op(const WorkloadOp& op, const MemoryOrg& org);

}  // namespace capstore
