// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "capstore/costmodel.hpp"
#include "capstore/dse.hpp"
#include "capstore/memsizer.hpp"
#include "capstore/powergate.hpp"
#include "capstore/simulator.hpp"
#include "capstore/workload.hpp"
#include "oracles.hpp"
#include "random_workload.hpp"

using namespace capstore;

namespace {

const std::string kData = CAPSTORE_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Workload reference() { return load_workload_file(kData + "/reference_workload.json"); }
CalibrationTable table() { return load_calibration_file(kData + "/calibration_anchors.json"); }

CostParams replay_params(const CalibrationTable& t) { return with_system(CostParams{}, t.system); }

EvalReport replay(const Workload& w, const MemoryOrg& org, const CalibrationTable& t) {
  const CostParams p = replay_params(t);
  return evaluate(w, org, build_schedule(w, org, {p.wake_latency_cycles, false}), p, CostMode::Replay, &t);
}

const std::vector<std::string> kOrder = {"SMP", "PG-SMP", "HY", "PG-HY", "SEP", "PG-SEP"};

bool strictly_descending(const std::map<std::string, double>& e) {
  for (std::size_t i = 1; i < kOrder.size(); ++i) {
    if (!(e.at(kOrder[i - 1]) > e.at(kOrder[i]))) return false;
  }
  return true;
}

Outcome ac1_sizing() {
  const auto stats = footprint_stats(reference());
  const MemoryOrg smp = size_smp(stats);
  const MemoryOrg sep = size_sep(stats);
  const MemoryOrg hy = size_hy(stats);
  const MemoryOrg pgsmp = apply_gating(smp, reference_sectors(OrgKind::SMP));
  const MemoryOrg pgsep = apply_gating(sep, reference_sectors(OrgKind::SEP));
  const MemoryOrg pghy = apply_gating(hy, reference_sectors(OrgKind::HY));

  using Row = std::tuple<const MemoryOrg*, BlockRole, std::uint64_t, std::uint32_t>;
  const std::vector<Row> expect = {
      {&smp, BlockRole::Shared, 471040, 1},         {&pgsmp, BlockRole::Shared, 471040, 256},
      {&sep, BlockRole::Weight, 110592, 1},         {&sep, BlockRole::Data, 25600, 1},
      {&sep, BlockRole::Accumulator, 460800, 1},    {&pgsep, BlockRole::Weight, 110592, 64},
      {&pgsep, BlockRole::Data, 25600, 16},         {&pgsep, BlockRole::Accumulator, 460800, 128},
      {&hy, BlockRole::Shared, 264192, 1},          {&hy, BlockRole::Weight, 1024, 1},
      {&hy, BlockRole::Data, 1024, 1},              {&hy, BlockRole::Accumulator, 204800, 1},
      {&pghy, BlockRole::Shared, 264192, 128},      {&pghy, BlockRole::Weight, 1024, 1},
      {&pghy, BlockRole::Data, 1024, 1},            {&pghy, BlockRole::Accumulator, 204800, 1}};
  int bad = 0;
  std::string first;
  for (const auto& [org, role, cap, s] : expect) {
    const MemBlock* b = org->find(role);
    if (!b || b->capacity != cap || b->sectors != s || b->banks != 16) {
      if (bad++ == 0) first = fmt::format(" first mismatch {} {}", org->label, role_name(role));
    }
  }
  return {bad == 0, fmt::format("{} block checks, {} mismatches{}", expect.size(), bad, first)};
}

Outcome ac2_hybrid_identity() {
  const auto ref = footprint_stats(reference());
  bool ok = size_hy(ref).total_capacity() == 471040 && size_smp(ref).total_capacity() == 471040;
  std::mt19937_64 rng(2024);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = footprint_stats(testkit::random_workload(rng));
    if (size_hy(s).total_capacity() != size_smp(s).total_capacity()) ++bad;
  }
  return {ok && bad == 0, fmt::format("reference {}, random mismatches {}/1000", ok ? "ok" : "FAIL", bad)};
}

Outcome ac3_replay_saving() {
  const Workload w = reference();
  const CalibrationTable t = table();
  const auto stats = footprint_stats(w);
  const Savings s = compare(replay(w, *reference_org("SMP", stats), t), replay(w, *reference_org("PG-SEP", stats), t));
  const double v = s.onchip_energy.value_or(NAN);
  return {std::fabs(v - 86.0) <= 1.0, fmt::format("on-chip energy reduction {:.2f}% (target 86 +/- 1)", v)};
}

Outcome ac4_replay_ordering() {
  const Workload w = reference();
  const CalibrationTable t = table();
  std::map<std::string, double> e;
  for (const auto& org : reference_orgs(footprint_stats(w))) e[org.label] = replay(w, org, t).onchip_energy_mj;
  std::string detail;
  for (const auto& l : kOrder) detail += fmt::format("{}={:.4f} ", l, e[l]);
  return {strictly_descending(e), detail};
}

Outcome ac5_offchip_oracle() {
  std::mt19937_64 rng(55);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const Workload w = testkit::random_workload(rng, {.all_ops = (i % 4 != 0)});
    const auto p = offchip_accesses(w);
    const auto [r, wr] = testkit::offchip_walk(w);
    if (p.reads != r || p.writes != wr) ++bad;
  }
  return {bad == 0, fmt::format("mismatches {}/1000", bad)};
}

// Every request in the handshake has exactly one matching ack for the same
// group at the same boundary.
bool paired(const GateSchedule& s) {
  std::map<std::tuple<std::size_t, std::size_t, std::uint32_t, int>, int> balance;
  for (const auto& h : s.handshake) {
    const bool sleep = h.kind == HandshakeKind::SleepRequest || h.kind == HandshakeKind::SleepAck;
    const bool req = h.kind == HandshakeKind::SleepRequest || h.kind == HandshakeKind::WakeRequest;
    balance[{h.boundary, h.block, h.group, sleep ? 0 : 1}] += req ? 1 : -1;
    if (balance[{h.boundary, h.block, h.group, sleep ? 0 : 1}] < 0) return false;
  }
  for (const auto& [k, v] : balance) {
    if (v != 0) return false;
  }
  return true;
}

Outcome ac6_gating_safety() {
  std::mt19937_64 rng(66);
  int bad = 0;
  std::uint64_t accesses = 0, requests = 0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    const Workload w = testkit::random_workload(rng, {.all_ops = (i % 3 != 0)});
    const MemoryOrg org = testkit::random_org(rng, w, true);
    const GateSchedule s = build_schedule(w, org, {testkit::uniform(rng, 0, 100), i % 2 == 0});
    const SimulationResult r = simulate_schedule(s, w, org);
    accesses += r.accesses;
    requests += r.requests;
    if (!r.clean() || !paired(s)) ++bad;
  }
  return {bad == 0, fmt::format("{} cases, {} group accesses, {} requests, {} failing", cases, accesses, requests, bad)};
}

Outcome ac7_gating_dominance() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  const int cases = 2000;
  for (int i = 0; i < cases; ++i) {
    const Workload w = testkit::random_workload(rng);
    const MemoryOrg gated = testkit::random_org(rng, w, true);
    const MemoryOrg plain = size_org(gated.kind, footprint_stats(w), gated.blocks[0].banks);
    CostParams p;
    p.dyn_coeff_pj = u(rng);
    p.dyn_exponent = u(rng);
    p.dyn_port_factor = 1 + 3 * u(rng);
    p.leak_base_mw = u(rng);
    p.leak_per_byte_mw = 1e-3 * u(rng);
    p.leak_port_factor = 1 + 3 * u(rng);
    p.offchip_access_pj = 1000 * u(rng);
    p.accel_energy_per_cycle_pj = 1000 * u(rng);
    p.wake_energy_per_byte_pj = 0;
    const ScheduleOptions none{0, false};
    const EvalReport a = evaluate(w, plain, build_schedule(w, plain, none), p, CostMode::Model);
    const EvalReport b = evaluate(w, gated, build_schedule(w, gated, none), p, CostMode::Model);
    if (!(b.grand_total_mj <= a.grand_total_mj)) ++bad;
  }
  return {bad == 0, fmt::format("{} cases, {} violations", cases, bad)};
}

Outcome ac8_fit() {
  const Workload w = reference();
  const CalibrationTable t = table();
  const FitResult fit = calibrate(t, w);
  std::map<std::string, double> e;
  for (const auto& org : reference_orgs(footprint_stats(w))) {
    const GateSchedule s = build_schedule(w, org, {fit.params.wake_latency_cycles, false});
    e[org.label] = evaluate(w, org, s, fit.params, CostMode::Model).onchip_energy_mj;
  }
  std::cout << "    residuals (org block: energy model/anchor, area model/anchor)\n";
  for (const auto& r : fit.residuals) {
    std::cout << fmt::format("      {:<7} {:<6} E {:.4f}/{:.4f} ({:+.1f}%)  A {:.4f}/{:.4f} ({:+.1f}%)\n", r.org,
                             role_name(r.role), r.energy_model, r.energy_anchor, 100 * r.energy_rel, r.area_model,
                             r.area_anchor, 100 * r.area_rel);
  }
  std::string detail = fmt::format("{} residuals, energy rms {:.3f}; model ", fit.residuals.size(), fit.energy_rms_rel);
  for (const auto& l : kOrder) detail += fmt::format("{}={:.4f} ", l, e[l]);
  return {strictly_descending(e) && fit.residuals.size() == 16, detail};
}

Outcome ac9_dse() {
  const Workload w = reference();
  const CalibrationTable t = table();
  const CostParams p = replay_params(t);
  SweepContext ctx{&w, &p, CostMode::Replay, &t, {p.wake_latency_cycles, false}, 0};
  const SweepResult r = run_sweep(SweepSpec::reference(), ctx);
  bool smp_on_frontier = false;
  for (const auto& f : r.frontier.frontier) smp_on_frontier = smp_on_frontier || f.org.label == "SMP";
  bool smp_dominated_by_sep = false;
  for (const auto& a : r.points) {
    for (const auto& b : r.points) {
      if (a.org.label == "SEP" && b.org.label == "SMP") smp_dominated_by_sep = dominates(a, b);
    }
  }
  const bool ok = r.points.size() == 6 && r.best().org.label == "PG-SEP" && !smp_on_frontier && smp_dominated_by_sep;
  return {ok, fmt::format("{} configs, selected {}, frontier size {}, SMP {}", r.points.size(), r.best().config,
                          r.frontier.frontier.size(), smp_on_frontier ? "ON frontier" : "excluded")};
}

Outcome ac10_baseline() {
  const Workload w = reference();
  const CalibrationTable t = table();
  std::ifstream in(kData + "/baseline_report.json");
  const EvalReport base = report_from_json(nlohmann::json::parse(in));
  const EvalReport hier = replay(w, *reference_org("SMP", footprint_stats(w)), t);
  const double v = compare(base, hier).energy.value_or(NAN);
  return {std::fabs(v - 66.0) <= 2.0 && std::fabs(base.onchip_energy_mj - 38.6733) < 1e-9,
          fmt::format("baseline {:.4f} mJ (memory {:.4f}), hierarchy {:.4f} mJ, saving {:.2f}% (target 66 +/- 2)",
                      base.grand_total_mj, base.onchip_energy_mj, hier.grand_total_mj, v)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1 sizing golden", 1.0, ac1_sizing},
      {"AC2 hybrid identity", 0, ac2_hybrid_identity},
      {"AC3 replay on-chip saving", 1.0, ac3_replay_saving},
      {"AC4 replay ordering", 0, ac4_replay_ordering},
      {"AC5 off-chip oracle", 0, ac5_offchip_oracle},
      {"AC6 power-gating safety", 30.0, ac6_gating_safety},
      {"AC7 gating dominance", 0, ac7_gating_dominance},
      {"AC8 model fit sanity", 0, ac8_fit},
      {"AC9 DSE correctness", 5.0, ac9_dse},
      {"AC10 baseline comparison", 0, ac10_baseline},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format(" [over {:.0f} s budget]", c.budget_s);
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("{} {}: {} ({:.3f} s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail, secs);
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
