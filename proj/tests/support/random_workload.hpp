#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "capstore/memsizer.hpp"
#include "capstore/workload.hpp"

namespace capstore::testkit {

inline std::uint64_t uniform(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline PerComponent random_components(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

struct RandomWorkloadOptions {
  std::uint64_t max_footprint = 1u << 20;
  std::uint64_t max_accesses = 1u << 22;
  std::uint64_t max_cycles = 200000;
  // Keep every op (otherwise a random non-empty ordered subset).
  bool all_ops = true;
};

// Ops in canonical order, every footprint component >= 1 byte.
inline Workload random_workload(std::mt19937_64& rng, const RandomWorkloadOptions& opt = {}) {
  Workload w;
  w.routing_iterations = static_cast<std::uint32_t>(uniform(rng, 1, 5));
  w.label = "random";
  const OpKind kinds[] = {OpKind::C1, OpKind::PC, OpKind::CCFC, OpKind::SumSquash, OpKind::UpdateSum};
  for (OpKind k : kinds) {
    if (!opt.all_ops && uniform(rng, 0, 2) == 0) continue;
    WorkloadOp op;
    op.kind = k;
    op.footprint = random_components(rng, 1, opt.max_footprint);
    op.reads = random_components(rng, 0, opt.max_accesses);
    op.writes = random_components(rng, 0, opt.max_accesses);
    op.cycles = uniform(rng, 1, opt.max_cycles);
    op.repeat = is_routing_op(k) ? w.routing_iterations : 1;
    w.ops.push_back(op);
  }
  if (w.ops.empty()) {
    WorkloadOp op;
    op.kind = OpKind::PC;
    op.footprint = random_components(rng, 1, opt.max_footprint);
    op.cycles = 1;
    w.ops.push_back(op);
  }
  return w;
}

inline std::uint32_t random_pow2(std::mt19937_64& rng, unsigned max_log2) {
  return 1u << uniform(rng, 0, max_log2);
}

// A sized org for w, optionally gated with random sector counts.
inline MemoryOrg random_org(std::mt19937_64& rng, const Workload& w, bool gated) {
  const OrgKind kind = static_cast<OrgKind>(uniform(rng, 0, 2));
  const std::uint32_t banks = random_pow2(rng, 5);
  MemoryOrg org = size_org(kind, footprint_stats(w), banks);
  if (!gated) return org;
  SectorAssignment a;
  for (const auto& [role, s] : reference_sectors(kind)) a[role] = random_pow2(rng, 9);
  return apply_gating(org, a);
}

}  // namespace capstore::testkit
