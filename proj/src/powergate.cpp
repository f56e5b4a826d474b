#include "capstore/powergate.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "capstore/error.hpp"

namespace capstore {

std::string_view state_name(GroupState s) {
  switch (s) {
    case GroupState::On: return "ON";
    case GroupState::Draining: return "DRAINING";
    case GroupState::Off: return "OFF";
    case GroupState::Waking: return "WAKING";
  }
  return "?";
}

std::string_view event_name(PmuEventKind k) {
  switch (k) {
    case PmuEventKind::Request: return "request";
    case PmuEventKind::Ack: return "ack";
    case PmuEventKind::WakeComplete: return "wake_complete";
    case PmuEventKind::Access: return "access";
  }
  return "?";
}

std::string_view handshake_name(HandshakeKind k) {
  switch (k) {
    case HandshakeKind::SleepRequest: return "sleep_req";
    case HandshakeKind::SleepAck: return "sleep_ack";
    case HandshakeKind::WakeRequest: return "wake_req";
    case HandshakeKind::WakeAck: return "wake_ack";
  }
  return "?";
}

namespace {

[[noreturn]] void violation(const SectorGroup& g, const PmuEvent& e, std::string_view why) {
  throw ProtocolViolation(fmt::format("group {}: {} in state {} at cycle {}: {}", g.index,
                                      event_name(e.kind), state_name(g.state), e.cycle, why));
}

}  // namespace

SectorGroup step_fsm(const SectorGroup& group, const PmuEvent& event) {
  SectorGroup next = group;
  if (event.cycle < group.since) violation(group, event, "event precedes last transition");
  switch (event.kind) {
    case PmuEventKind::Access:
      if (group.state != GroupState::On) violation(group, event, "access to a powered-down group");
      return next;
    case PmuEventKind::Request:
      if (group.state == GroupState::On) {
        next.state = GroupState::Draining;
      } else if (group.state == GroupState::Off) {
        next.state = GroupState::Waking;
      } else {
        violation(group, event, "request while another is pending");
      }
      break;
    case PmuEventKind::Ack:
      if (group.state != GroupState::Draining) violation(group, event, "ack without pending sleep request");
      next.state = GroupState::Off;
      break;
    case PmuEventKind::WakeComplete:
      if (group.state != GroupState::Waking) violation(group, event, "wake completion without wake request");
      if (event.cycle - group.since < group.wake_latency) {
        violation(group, event, "wake latency has not elapsed");
      }
      next.state = GroupState::On;
      break;
  }
  next.since = event.cycle;
  return next;
}

std::uint32_t active_groups(std::uint64_t resident, const MemBlock& block) {
  if (!block.gated) return block.sectors;
  const std::uint64_t group = block.group_bytes();
  if (group == 0) return 0;
  const std::uint64_t need = (resident + group - 1) / group;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(need, block.sectors));
}

std::uint32_t utilization(const WorkloadOp& op, const MemoryOrg& org, std::size_t block_index) {
  const auto traffic = route_op(op, org);
  return active_groups(traffic.at(block_index).resident, org.blocks.at(block_index));
}

std::vector<std::size_t> execution_trace(const Workload& w) {
  std::vector<std::size_t> trace;
  std::size_t i = 0;
  while (i < w.ops.size()) {
    if (!is_routing_op(w.ops[i].kind)) {
      for (std::uint32_t r = 0; r < w.ops[i].repeat; ++r) trace.push_back(i);
      ++i;
      continue;
    }
    std::size_t end = i;
    std::uint32_t iters = 0;
    while (end < w.ops.size() && is_routing_op(w.ops[end].kind)) {
      iters = std::max(iters, w.ops[end].repeat);
      ++end;
    }
    for (std::uint32_t it = 0; it < iters; ++it) {
      for (std::size_t k = i; k < end; ++k) {
        if (it < w.ops[k].repeat) trace.push_back(k);
      }
    }
    i = end;
  }
  return trace;
}

std::uint64_t GateSchedule::total_woken() const {
  std::uint64_t n = 0;
  for (const auto& t : transitions) n += t.woken;
  return n;
}

std::uint64_t GateSchedule::total_slept() const {
  std::uint64_t n = 0;
  for (const auto& t : transitions) n += t.slept;
  return n;
}

std::uint64_t GateSchedule::woken_at(std::size_t boundary, std::size_t block) const {
  for (const auto& t : transitions) {
    if (t.boundary == boundary && t.block == block) return t.woken;
  }
  return 0;
}

GateSchedule build_schedule(const Workload& w, const MemoryOrg& org, const ScheduleOptions& opts) {
  GateSchedule s;
  s.wake_latency_cycles = opts.wake_latency_cycles;
  s.overlap_wakeup = opts.overlap_wakeup;
  for (const auto& b : org.blocks) s.sectors.push_back(b.sectors);

  for (const auto& op : w.ops) {
    s.ops.push_back(op.kind);
    const auto traffic = route_op(op, org);
    std::vector<std::uint32_t> row(org.blocks.size());
    for (std::size_t b = 0; b < org.blocks.size(); ++b) {
      row[b] = active_groups(traffic[b].resident, org.blocks[b]);
    }
    s.active.push_back(std::move(row));
  }

  // hold the routing loop at a single level
  for (std::size_t i = 0; i < w.ops.size();) {
    if (!is_routing_op(w.ops[i].kind)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < w.ops.size() && is_routing_op(w.ops[end].kind)) ++end;
    for (std::size_t b = 0; b < org.blocks.size(); ++b) {
      std::uint32_t level = 0;
      for (std::size_t k = i; k < end; ++k) level = std::max(level, s.active[k][b]);
      for (std::size_t k = i; k < end; ++k) s.active[k][b] = level;
    }
    i = end;
  }

  s.boundary_stall.assign(w.ops.empty() ? 0 : w.ops.size() - 1, 0);
  const auto trace = execution_trace(w);
  std::vector<bool> entered(w.ops.size(), false);
  std::uint64_t t = 0;
  std::uint64_t last_exec_cycles = 0;

  for (std::size_t k = 0; k < trace.size(); ++k) {
    const std::size_t op = trace[k];
    if (!entered[op] && op > 0) {
      const std::size_t boundary = op - 1;
      bool any_wake = false;
      for (std::size_t b = 0; b < org.blocks.size(); ++b) {
        if (!org.blocks[b].gated) continue;
        const std::uint32_t prev = s.active[boundary][b];
        const std::uint32_t next = s.active[op][b];
        if (prev == next) continue;
        Transition tr{boundary, b, next > prev ? next - prev : 0, prev > next ? prev - next : 0};
        s.transitions.push_back(tr);
        for (std::uint32_t g = prev; g > next; --g) {
          s.handshake.push_back({boundary, b, g - 1, HandshakeKind::SleepRequest, t});
          s.handshake.push_back({boundary, b, g - 1, HandshakeKind::SleepAck, t});
        }
        any_wake = any_wake || tr.woken > 0;
      }
      if (any_wake) {
        const std::uint64_t lat = opts.wake_latency_cycles;
        const std::uint64_t hidden = opts.overlap_wakeup ? std::min(lat, last_exec_cycles) : 0;
        const std::uint64_t stall = lat - hidden;
        for (std::size_t b = 0; b < org.blocks.size(); ++b) {
          if (!org.blocks[b].gated) continue;
          for (std::uint32_t g = s.active[boundary][b]; g < s.active[op][b]; ++g) {
            s.handshake.push_back({boundary, b, g, HandshakeKind::WakeRequest, t - hidden});
            s.handshake.push_back({boundary, b, g, HandshakeKind::WakeAck, t + stall});
          }
        }
        s.boundary_stall[boundary] = stall;
        t += stall;
      }
    }
    entered[op] = true;
    t += w.ops[op].cycles;
    last_exec_cycles = w.ops[op].cycles;
  }

  s.compute_cycles = w.total_cycles();
  s.latency_cycles = t;
  return s;
}

namespace {

PmuEventKind to_pmu(HandshakeKind k) {
  switch (k) {
    case HandshakeKind::SleepRequest:
    case HandshakeKind::WakeRequest: return PmuEventKind::Request;
    case HandshakeKind::SleepAck: return PmuEventKind::Ack;
    case HandshakeKind::WakeAck: break;
  }
  return PmuEventKind::WakeComplete;
}

}  // namespace

SimulationResult simulate_schedule(const GateSchedule& schedule, const Workload& w,
                                   const MemoryOrg& org) {
  SimulationResult res;
  if (w.ops.empty()) return res;

  std::vector<std::vector<SectorGroup>> groups(org.blocks.size());
  for (std::size_t b = 0; b < org.blocks.size(); ++b) {
    const auto& blk = org.blocks[b];
    for (std::uint32_t g = 0; g < blk.sectors; ++g) {
      SectorGroup sg;
      sg.index = g;
      sg.bytes = blk.group_bytes();
      sg.wake_latency = schedule.wake_latency_cycles;
      sg.state = g < schedule.active[0][b] ? GroupState::On : GroupState::Off;
      groups[b].push_back(sg);
    }
  }

  auto apply = [&](std::size_t block, std::uint32_t group, const PmuEvent& e) {
    if (block >= groups.size() || group >= groups[block].size()) {
      res.violations.push_back(fmt::format("event for unknown group {}/{}", block, group));
      return;
    }
    try {
      groups[block][group] = step_fsm(groups[block][group], e);
    } catch (const ProtocolViolation& v) {
      res.violations.push_back(fmt::format("{} block: {}", role_name(org.blocks[block].role), v.what()));
    }
  };

  const auto trace = execution_trace(w);
  std::vector<bool> entered(w.ops.size(), false);
  std::uint64_t t = 0;
  for (const std::size_t op : trace) {
    if (!entered[op] && op > 0) {
      const std::size_t boundary = op - 1;
      for (const auto& h : schedule.handshake) {
        if (h.boundary != boundary) continue;
        const bool is_request = h.kind == HandshakeKind::SleepRequest || h.kind == HandshakeKind::WakeRequest;
        (is_request ? res.requests : res.acks) += 1;
        apply(h.block, h.group, {to_pmu(h.kind), h.cycle});
      }
      t += schedule.boundary_stall.at(boundary);
    }
    entered[op] = true;
    for (std::size_t b = 0; b < org.blocks.size(); ++b) {
      for (std::uint32_t g = 0; g < schedule.active[op][b]; ++g) {
        ++res.accesses;
        apply(b, g, {PmuEventKind::Access, t});
      }
    }
    t += w.ops[op].cycles;
  }

  for (std::size_t b = 0; b < groups.size(); ++b) {
    for (const auto& g : groups[b]) {
      if (g.state == GroupState::Draining || g.state == GroupState::Waking) {
        res.violations.push_back(fmt::format("{} block group {} left in {}", role_name(org.blocks[b].role),
                                             g.index, state_name(g.state)));
      }
    }
  }
  if (t != schedule.latency_cycles) {
    res.violations.push_back(fmt::format("replayed latency {} != scheduled {}", t, schedule.latency_cycles));
  }
  return res;
}

nlohmann::ordered_json to_json(const GateSchedule& s, const MemoryOrg& org) {
  nlohmann::ordered_json j;
  j["org"] = org.label;
  j["wake_latency_cycles"] = s.wake_latency_cycles;
  j["overlap_wakeup"] = s.overlap_wakeup;
  j["compute_cycles"] = s.compute_cycles;
  j["latency_cycles"] = s.latency_cycles;

  auto& act = j["active_groups"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.ops.size(); ++i) {
    nlohmann::ordered_json row;
    row["op"] = std::string(op_name(s.ops[i]));
    for (std::size_t b = 0; b < org.blocks.size(); ++b) {
      row[std::string(role_name(org.blocks[b].role))] = s.active[i][b];
    }
    act.push_back(std::move(row));
  }

  auto& tl = j["timeline"] = nlohmann::ordered_json::array();
  std::uint64_t cumulative = 0;
  for (std::size_t b = 0; b + 1 < s.ops.size(); ++b) {
    cumulative += s.boundary_stall[b];
    for (const auto& tr : s.transitions) {
      if (tr.boundary != b) continue;
      nlohmann::ordered_json e;
      e["boundary"] = fmt::format("{}->{}", op_name(s.ops[b]), op_name(s.ops[b + 1]));
      e["block"] = std::string(role_name(org.blocks[tr.block].role));
      e["woken"] = tr.woken;
      e["slept"] = tr.slept;
      e["stall_cycles"] = s.boundary_stall[b];
      e["cumulative_wake_cycles"] = cumulative;
      tl.push_back(std::move(e));
    }
  }
  j["handshake_events"] = s.handshake.size();
  return j;
}

}  // namespace capstore
