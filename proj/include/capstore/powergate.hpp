#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "capstore/memsizer.hpp"
#include "capstore/workload.hpp"

namespace capstore {

// ---------------------------------------------------------------------------
// Sector-group sleep FSM.
//
//   ON --request--> DRAINING --ack--> OFF --request--> WAKING --wake_complete--> ON
//
// A wake request is acknowledged by wake_complete, which may only arrive
// once the wake latency has elapsed. Accesses are legal only in ON.

enum class GroupState { On, Draining, Off, Waking };
enum class PmuEventKind { Request, Ack, WakeComplete, Access };

std::string_view state_name(GroupState s);
std::string_view event_name(PmuEventKind k);

struct PmuEvent {
  PmuEventKind kind = PmuEventKind::Access;
  std::uint64_t cycle = 0;
};

struct SectorGroup {
  std::uint32_t index = 0;
  std::uint64_t bytes = 0;  // banks * sector_bytes
  GroupState state = GroupState::On;
  std::uint64_t since = 0;  // cycle of the last state change
  std::uint64_t wake_latency = 0;
};

// Throws ProtocolViolation for an event that is illegal in group.state.
SectorGroup step_fsm(const SectorGroup& group, const PmuEvent& event);

// ---------------------------------------------------------------------------
// Utilization and schedules.

// Sector groups needed to hold `resident` bytes, filled from group 0 upward
// and clamped to S. Ungated blocks always report S.
std::uint32_t active_groups(std::uint64_t resident, const MemBlock& block);

// Active groups of block `block_index` while `op` runs on `org`.
std::uint32_t utilization(const WorkloadOp& op, const MemoryOrg& org, std::size_t block_index);

// Op indices in execution order: feed-forward ops in sequence, then the
// routing ops interleaved once per routing iteration.
std::vector<std::size_t> execution_trace(const Workload& w);

struct Transition {
  std::size_t boundary = 0;  // between op `boundary` and op `boundary + 1`
  std::size_t block = 0;
  std::uint32_t woken = 0;
  std::uint32_t slept = 0;
};

enum class HandshakeKind { SleepRequest, SleepAck, WakeRequest, WakeAck };
std::string_view handshake_name(HandshakeKind k);

struct HandshakeEvent {
  std::size_t boundary = 0;
  std::size_t block = 0;
  std::uint32_t group = 0;
  HandshakeKind kind = HandshakeKind::SleepRequest;
  std::uint64_t cycle = 0;
};

struct ScheduleOptions {
  std::uint64_t wake_latency_cycles = 0;
  // Issue wake requests before the previous op ends so the latency hides
  // behind its tail; only the uncovered remainder stalls.
  bool overlap_wakeup = false;
};

struct GateSchedule {
  std::vector<OpKind> ops;
  std::vector<std::vector<std::uint32_t>> active;  // [op][block]
  std::vector<std::uint32_t> sectors;              // S per block
  std::vector<Transition> transitions;
  std::vector<HandshakeEvent> handshake;
  std::vector<std::uint64_t> boundary_stall;  // size ops - 1
  std::uint64_t wake_latency_cycles = 0;
  bool overlap_wakeup = false;
  std::uint64_t compute_cycles = 0;
  std::uint64_t latency_cycles = 0;

  std::uint64_t stall_cycles() const { return latency_cycles - compute_cycles; }
  std::uint64_t total_woken() const;
  std::uint64_t total_slept() const;
  std::uint64_t woken_at(std::size_t boundary, std::size_t block) const;
};

// Transitions happen only at op boundaries. The routing ops share one
// activity level (the larger of the two) so the routing loop never toggles
// sectors. Throws InfeasibleError if an op does not fit the org.
GateSchedule build_schedule(const Workload& w, const MemoryOrg& org,
                            const ScheduleOptions& opts = {});

struct SimulationResult {
  std::uint64_t accesses = 0;
  std::uint64_t requests = 0;
  std::uint64_t acks = 0;  // sleep acks + wake completions
  std::vector<std::string> violations;

  bool clean() const { return violations.empty() && requests == acks; }
};

// Replays the schedule through one FSM per sector group, issuing an access
// to every active group at the start of every execution.
SimulationResult simulate_schedule(const GateSchedule& schedule, const Workload& w,
                                   const MemoryOrg& org);

nlohmann::ordered_json to_json(const GateSchedule& s, const MemoryOrg& org);

}  // namespace capstore
