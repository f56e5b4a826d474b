#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace capstore {

enum class MemComponent { Weight, Data, Accumulator };

inline constexpr std::array<MemComponent, 3> kAllComponents = {
    MemComponent::Weight, MemComponent::Data, MemComponent::Accumulator};

std::string_view component_name(MemComponent c);  // "weight" | "data" | "acc"

// Canonical inference operations, in execution order.
enum class OpKind { C1, PC, CCFC, SumSquash, UpdateSum };

inline constexpr std::array<OpKind, 5> kCanonicalOrder = {
    OpKind::C1, OpKind::PC, OpKind::CCFC, OpKind::SumSquash, OpKind::UpdateSum};

std::string_view op_name(OpKind k);  // "C1", "PC", "CC-FC", "SumSquash", "UpdateSum"
std::optional<OpKind> parse_op_name(std::string_view name);

// Ops executed once per routing iteration.
constexpr bool is_routing_op(OpKind k) {
  return k == OpKind::SumSquash || k == OpKind::UpdateSum;
}

// One value per memory component.
struct PerComponent {
  std::uint64_t weight = 0;
  std::uint64_t data = 0;
  std::uint64_t acc = 0;

  std::uint64_t& operator[](MemComponent c);
  std::uint64_t operator[](MemComponent c) const;
  std::uint64_t total() const { return weight + data + acc; }

  friend bool operator==(const PerComponent&, const PerComponent&) = default;
};

struct WorkloadOp {
  OpKind kind = OpKind::C1;
  PerComponent footprint;  // resident bytes
  PerComponent reads;      // on-chip read accesses, one execution
  PerComponent writes;     // on-chip write accesses, one execution
  std::uint64_t cycles = 0;
  std::uint32_t repeat = 1;

  std::string_view name() const { return op_name(kind); }
  std::uint64_t total_footprint() const { return footprint.total(); }

  friend bool operator==(const WorkloadOp&, const WorkloadOp&) = default;
};

// Ordered operation list. Workloads read from files always hold the five
// canonical ops; synthetic workloads used for sizing may hold a prefix.
struct Workload {
  std::vector<WorkloadOp> ops;
  std::uint32_t routing_iterations = 3;
  std::string label;

  bool is_canonical() const;
  // Cycles summed over executions (repeat included).
  std::uint64_t total_cycles() const;

  friend bool operator==(const Workload&, const Workload&) = default;
};

// Parse and validate a workload profile document. Ops are reordered into
// canonical order and the routing ops get repeat = routing_iterations.
Workload load_workload(const nlohmann::json& doc);
Workload load_workload_file(const std::string& path);
nlohmann::ordered_json to_json(const Workload& w);

// Off-chip traffic per op, aligned with Workload::ops.
struct OffChipProfile {
  std::vector<std::uint64_t> reads;
  std::vector<std::uint64_t> writes;

  std::uint64_t total_reads() const;
  std::uint64_t total_writes() const;
};

// Off-chip reads of a feed-forward op are the weight and data fills it
// writes on chip; its off-chip writes are the data reads of the next
// feed-forward op. Routing ops never touch off-chip memory.
OffChipProfile offchip_accesses(const Workload& w);

struct Extreme {
  std::uint64_t bytes = 0;
  std::size_t op_index = 0;
};

struct FootprintStats {
  Extreme max_total;
  std::array<Extreme, 3> max;  // indexed by MemComponent
  std::array<Extreme, 3> min;

  const Extreme& max_of(MemComponent c) const { return max[static_cast<int>(c)]; }
  const Extreme& min_of(MemComponent c) const { return min[static_cast<int>(c)]; }
  std::uint64_t sum_of_minima() const;
  std::uint64_t sum_of_maxima() const;
};

// Extremes over ops; ties resolve to the earliest op.
FootprintStats footprint_stats(const Workload& w);

// ---------------------------------------------------------------------------
// Analytic workload generator.

struct ConvLayer {
  std::uint32_t kernel = 1;
  std::uint32_t stride = 1;
  std::uint32_t out_channels = 1;
};

struct CapsNetSpec {
  std::uint32_t input_height = 28;
  std::uint32_t input_width = 28;
  std::uint32_t input_channels = 1;
  ConvLayer conv1{9, 1, 256};
  // Primary capsules: a conv layer whose output channels are
  // capsule_types * capsule_dim.
  ConvLayer primary{9, 2, 256};
  std::uint32_t primary_capsule_dim = 8;
  std::uint32_t primary_capsule_types = 32;
  std::uint32_t class_in_capsules = 1152;
  std::uint32_t class_out_capsules = 10;
  std::uint32_t class_in_dim = 8;
  std::uint32_t class_out_dim = 16;
  std::uint32_t word_bytes = 1;
  std::uint32_t array_rows = 16;
  std::uint32_t array_cols = 16;
  std::uint32_t routing_iterations = 3;

  static CapsNetSpec mnist() { return {}; }
};

struct ReusePolicy {
  // Weight-stationary conv: only one output-channel tile of filters is
  // resident and inputs stream through a k-row band.
  bool weight_reuse_conv = true;
  // Class capsules reuse each input capsule across all output capsules, so
  // only one array-height batch of input capsules is resident.
  bool data_reuse_classcaps = true;
};

Workload generate_workload(const CapsNetSpec& spec, const ReusePolicy& policy = {});

}  // namespace capstore
