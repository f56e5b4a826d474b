#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capstore/costmodel.hpp"
#include "capstore/memsizer.hpp"
#include "capstore/simulator.hpp"
#include "capstore/workload.hpp"

namespace capstore {

enum class Gating { Off, On, Both };
std::string_view gating_name(Gating g);
std::optional<Gating> parse_gating(std::string_view s);

// Sector candidates per gateable role of each kind. Roles left out fall
// back to the default candidates (powers of two 1..512).
using SectorCandidates = std::map<OrgKind, std::map<BlockRole, std::vector<std::uint32_t>>>;

std::vector<std::uint32_t> default_sector_candidates();

// Roles that receive sleep transistors when a kind is gated.
std::vector<BlockRole> gateable_roles(OrgKind kind);

struct SweepSpec {
  std::vector<OrgKind> kinds{OrgKind::SMP, OrgKind::SEP, OrgKind::HY};
  Gating gating = Gating::Both;
  SectorCandidates sectors;
  std::vector<std::uint32_t> banks{kDefaultBanks};
  double energy_weight = 0.7;
  double area_weight = 0.3;

  // The six reference organizations: each kind ungated plus its reference
  // sector counts.
  static SweepSpec reference();

  std::vector<std::uint32_t> candidates(OrgKind kind, BlockRole role) const;
  // InputError on empty candidate sets, S = 0 or negative weights.
  void validate() const;
};

SweepSpec sweep_from_json(const nlohmann::json& doc);
SweepSpec load_sweep_file(const std::string& path);
nlohmann::ordered_json to_json(const SweepSpec& spec);

// "SEP/N16", "PG-SEP/N16/w64-d16-a128".
std::string config_id(const MemoryOrg& org);

// Ordered by kind, then banks, then ungated before gated, then sector
// tuples lexicographically (role order shared, weight, data, acc).
std::vector<MemoryOrg> enumerate(const SweepSpec& spec, const FootprintStats& stats);

// True when every gated block carries the reference sector count of its
// kind (the configurations the calibration anchors describe).
bool is_reference_config(const MemoryOrg& org);

struct DesignPoint {
  std::string config;
  MemoryOrg org;
  double area_mm2 = 0;    // on-chip
  double energy_mj = 0;   // on-chip
  double total_energy_mj = 0;
  bool dominated = false;
  double score = 0;
};

struct ParetoSet {
  std::vector<DesignPoint> frontier;  // area ascending, stable
  std::vector<bool> dominated;        // per input point
};

// a dominates b: no worse on both metrics and strictly better on one.
bool dominates(const DesignPoint& a, const DesignPoint& b);
ParetoSet pareto(const std::vector<DesignPoint>& points);

// Weighted sum of energy and area, each normalized by the sweep maximum.
// Lower is better.
void score_points(std::vector<DesignPoint>& points, double energy_weight, double area_weight);

struct SweepResult {
  std::vector<DesignPoint> points;  // enumeration order, dominated flags set
  ParetoSet frontier;
  std::size_t selected = 0;  // index into points
  CostMode mode = CostMode::Model;

  const DesignPoint& best() const { return points.at(selected); }
};

struct SweepContext {
  const Workload* workload = nullptr;
  const CostParams* params = nullptr;
  CostMode mode = CostMode::Model;
  const CalibrationTable* table = nullptr;
  ScheduleOptions schedule;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Evaluates every enumerated point (in parallel), then builds the frontier
// and the ranking. When several points fail, the error of the first one in
// enumeration order is rethrown.
SweepResult run_sweep(const SweepSpec& spec, const SweepContext& ctx);

std::string sweep_csv(const SweepResult& r);
std::string frontier_csv(const SweepResult& r);
nlohmann::ordered_json summary_json(const SweepResult& r);

}  // namespace capstore
