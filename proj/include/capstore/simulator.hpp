#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capstore/costmodel.hpp"
#include "capstore/memsizer.hpp"
#include "capstore/powergate.hpp"
#include "capstore/workload.hpp"

namespace capstore {

enum class CostMode { Replay, Model };
std::string_view mode_name(CostMode m);
std::optional<CostMode> parse_mode(std::string_view s);

// [block][op] traffic of a single execution of each op.
using RoutedAccesses = std::vector<std::vector<BlockTraffic>>;

RoutedAccesses route_accesses(const Workload& w, const MemoryOrg& org);

struct OpEnergy {
  double dynamic_pj = 0;
  double static_pj = 0;
  double wakeup_pj = 0;

  double total_pj() const { return dynamic_pj + static_pj + wakeup_pj; }
};

struct BlockReport {
  MemBlock block;
  std::vector<BlockTraffic> traffic;  // per op, one execution
  std::vector<std::uint32_t> active_groups;
  std::vector<OpEnergy> energy;  // per op, all executions
  double area_mm2 = 0;
  double energy_mj = 0;
};

struct Fractions {
  double accelerator = 0;
  double onchip = 0;
  double offchip = 0;
};

struct EvalReport {
  std::string org_label;
  OrgKind kind = OrgKind::SMP;
  CostMode mode = CostMode::Model;
  bool all_on_chip = false;
  std::vector<OpKind> ops;
  std::vector<std::uint32_t> repeat;
  std::vector<BlockReport> blocks;

  double onchip_energy_mj = 0;
  double offchip_energy_mj = 0;
  double accelerator_energy_mj = 0;
  double grand_total_mj = 0;
  double onchip_area_mm2 = 0;
  double total_area_mm2 = 0;

  std::uint64_t offchip_reads = 0;
  std::uint64_t offchip_writes = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t latency_cycles = 0;
  Fractions fractions;

  // On-chip energy of one op across all blocks, mJ.
  double op_onchip_energy_mj(std::size_t op) const;
  double dynamic_mj() const;
  double static_mj() const;
  double wakeup_mj() const;
};

// Full evaluation of one (workload, org, cost source) triple. Replay mode
// keeps the model's per-op/per-kind breakdown shape but rescales each block
// so its total equals the calibration anchor, and reports anchor areas.
EvalReport evaluate(const Workload& w, const MemoryOrg& org, const GateSchedule& schedule,
                    const CostParams& params, CostMode mode,
                    const CalibrationTable* table = nullptr);

// The monolithic memory baseline: one ungated 3-port block holding
// everything, no off-chip traffic, plus the baseline's buffer energy.
MemoryOrg all_on_chip_org(const CalibrationTable& table, std::uint32_t banks = kDefaultBanks);
EvalReport evaluate_all_on_chip(const Workload& w, const CostParams& params, CostMode mode,
                                const CalibrationTable& table);

// Percent savings of b relative to a (1 - b/a); nullopt when a's metric is 0.
struct Savings {
  std::optional<double> energy;
  std::optional<double> onchip_energy;
  std::optional<double> area;
  std::optional<double> onchip_area;
};

Savings compare(const EvalReport& a, const EvalReport& b);

nlohmann::ordered_json to_json(const EvalReport& r);
// Restores aggregates and per-block totals (enough for compare).
EvalReport report_from_json(const nlohmann::json& doc);
// One row per block x op.
std::string to_csv(const EvalReport& r);
nlohmann::ordered_json to_json(const Savings& s);

// Observations of every anchored block of `orgs` under `w`, for fitting.
std::vector<AnchorObservation> observe_anchors(const CalibrationTable& table, const Workload& w,
                                               const std::vector<MemoryOrg>& orgs,
                                               const ScheduleOptions& opts);

// Fits model parameters against the six reference organizations sized
// from `w`.
FitResult calibrate(const CalibrationTable& table, const Workload& w,
                    std::uint32_t banks = kDefaultBanks);

}  // namespace capstore
