#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "capstore/workload.hpp"

namespace capstore::testkit {

// Off-chip traffic by walking the op list by name: a layer op reads its
// weight and data fills from DRAM and writes back what the next layer op
// reads as data. Routing ops stay on chip.
inline std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>> offchip_walk(const Workload& w) {
  auto layer = [](const WorkloadOp& op) {
    const std::string n(op_name(op.kind));
    return n == "C1" || n == "PC" || n == "CC-FC";
  };
  std::vector<std::uint64_t> reads, writes;
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    std::uint64_t r = 0, wr = 0;
    if (layer(w.ops[i])) {
      r = w.ops[i].writes.weight + w.ops[i].writes.data;
      if (i + 1 < w.ops.size() && layer(w.ops[i + 1])) wr = w.ops[i + 1].reads.data;
    }
    reads.push_back(r);
    writes.push_back(wr);
  }
  return {reads, writes};
}

}  // namespace capstore::testkit
