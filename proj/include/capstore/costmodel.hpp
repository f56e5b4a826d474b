#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "capstore/memsizer.hpp"

namespace capstore {

// Parametric energy/area model. Internal energy unit is pJ, power is mW,
// time is cycles * clock_period_ns (mW * ns = pJ).
//
//   e_read  = dyn_coeff * port_factor(ports) * capacity^dyn_exponent
//   e_write = write_factor * e_read
//   p_leak  = leak_port_factor(ports) * (leak_base + leak_per_byte * powered_bytes)
//   e_wake  = wake_energy_per_byte * group_bytes
//   area    = area_base + area_port_factor(ports) * (area_per_byte * capacity
//                                                  + area_gated_per_byte * gated_bytes)
//
// A port factor p is given for a 3-port block; other port counts scale
// linearly from 1 (single port).
struct CostParams {
  double dyn_coeff_pj = 1.0;
  double dyn_exponent = 0.5;
  double dyn_port_factor = 2.0;
  double write_factor = 1.0;

  double leak_base_mw = 0.0;
  double leak_per_byte_mw = 0.0;
  double leak_port_factor = 1.0;

  double wake_energy_per_byte_pj = 0.0;
  std::uint64_t wake_latency_cycles = 0;

  double area_base_mm2 = 0.0;
  double area_per_byte_mm2 = 0.0;
  double area_gated_per_byte_mm2 = 0.0;
  double area_port_factor = 1.0;

  double clock_period_ns = 1.0;
  double offchip_access_pj = 0.0;
  double accel_energy_per_cycle_pj = 0.0;
  double accel_area_mm2 = 0.0;

  double e_read(std::uint64_t capacity, std::uint32_t ports, std::uint32_t banks) const;
  double e_write(std::uint64_t capacity, std::uint32_t ports, std::uint32_t banks) const;
  double p_leak(std::uint64_t powered_bytes, std::uint32_t ports) const;
  double e_wake(std::uint64_t group_bytes) const;
  double area(std::uint64_t capacity, std::uint32_t ports, bool gated, std::uint32_t sectors) const;

  // e_read = e_write = 1 pJ for every block; no leakage, wakeup, or system costs.
  static CostParams unit();

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

double scale_by_ports(double factor_at_3, std::uint32_t ports);

double dynamic_energy(const MemBlock& block, std::uint64_t reads, std::uint64_t writes,
                      const CostParams& p);
// Leakage over `cycles`. Ungated blocks are always fully powered.
double static_energy(const MemBlock& block, std::uint64_t active_bytes, std::uint64_t cycles,
                     const CostParams& p);
double wakeup_energy(const MemBlock& block, std::uint64_t groups_woken, const CostParams& p);

struct Anchor {
  double area_mm2 = 0.0;
  double energy_mj = 0.0;
};

// System-level constants shipped with a calibration set.
struct SystemConstants {
  double clock_period_ns = 1.0;
  double offchip_access_pj = 0.0;
  double accel_energy_per_cycle_pj = 0.0;
  double accel_area_mm2 = 0.0;
  std::uint64_t wake_latency_cycles = 0;
  double wake_energy_per_byte_pj = 0.0;
  double write_factor = 1.0;
};

// The monolithic all-on-chip memory used as the comparison baseline.
struct BaselineSpec {
  std::string label = "ALL-ON-CHIP";
  std::uint64_t capacity = 8u * 1024u * 1024u;
  // On-chip buffer energy present only in the all-on-chip design.
  double buffer_energy_mj = 0.0;
};

struct CalibrationTable {
  std::string technology;
  std::map<std::pair<std::string, BlockRole>, Anchor> anchors;
  std::optional<BaselineSpec> baseline;
  SystemConstants system;

  bool has(const std::string& org, BlockRole role) const;
  std::vector<std::string> org_labels() const;  // sorted
  double org_energy_mj(const std::string& org) const;
  double org_area_mm2(const std::string& org) const;
};

// Returns the anchor verbatim; MissingAnchorError if absent.
Anchor replay_lookup(const CalibrationTable& table, const std::string& org, BlockRole role);

CalibrationTable load_calibration(const nlohmann::json& doc);
CalibrationTable load_calibration_file(const std::string& path);
nlohmann::ordered_json to_json(const CalibrationTable& table);

// Copies the system constants into a parameter set.
CostParams with_system(CostParams p, const SystemConstants& sys);

nlohmann::ordered_json to_json(const CostParams& p);
CostParams params_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Calibration fit.

// What the model needs to know about one anchored block to predict its
// energy and area under the reference workload.
struct AnchorObservation {
  std::string org;
  BlockRole role = BlockRole::Shared;
  std::uint64_t capacity = 0;
  std::uint32_t ports = 1;
  std::uint32_t banks = kDefaultBanks;
  std::uint32_t sectors = 1;
  bool gated = false;
  double reads = 0;               // summed over executions
  double writes = 0;
  double cycles = 0;              // powered cycles (compute + stalls)
  double active_byte_cycles = 0;  // sum of powered bytes * cycles
  double woken_bytes = 0;         // sum of groups woken * group bytes
  Anchor anchor;
};

// Energy prediction (mJ) for an observation under `p`.
double predict_energy_mj(const AnchorObservation& obs, const CostParams& p);

struct AreaSample {
  std::uint64_t capacity = 0;
  std::uint32_t ports = 1;
  bool gated = false;
  double area_mm2 = 0;
};

struct AreaFit {
  double base_mm2 = 0;
  double per_byte_mm2 = 0;
  double gated_per_byte_mm2 = 0;
  double port_factor = 1;
  std::vector<double> rel_residuals;
};

// Non-negative least squares on relative area residuals, grid-searching
// the port factor. Needs at least two distinct capacities.
AreaFit fit_area(std::span<const AreaSample> samples);

struct AnchorResidual {
  std::string org;
  BlockRole role = BlockRole::Shared;
  double area_anchor = 0, area_model = 0, area_rel = 0;
  double energy_anchor = 0, energy_model = 0, energy_rel = 0;
};

struct FitResult {
  CostParams params;
  std::vector<AnchorResidual> residuals;
  std::vector<std::pair<std::string, double>> model_org_energy_mj;  // anchor order, descending
  bool ordering_preserved = false;
  double energy_rms_rel = 0;
  double area_rms_rel = 0;
};

// Fits the dynamic/leakage coefficients and the area model to the anchors.
// Among all grid candidates, the best-residual one that reproduces the
// anchors' org-energy ordering is returned.
FitResult fit_params(const CalibrationTable& table, std::span<const AnchorObservation> obs);

nlohmann::ordered_json to_json(const FitResult& fit);

}  // namespace capstore
