#include "capstore/dse.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "capstore/error.hpp"
#include "capstore/powergate.hpp"

namespace capstore {

std::string_view gating_name(Gating g) {
  switch (g) {
    case Gating::Off: return "off";
    case Gating::On: return "on";
    case Gating::Both: return "both";
  }
  return "?";
}

std::optional<Gating> parse_gating(std::string_view s) {
  if (s == "off") return Gating::Off;
  if (s == "on") return Gating::On;
  if (s == "both") return Gating::Both;
  return std::nullopt;
}

std::vector<std::uint32_t> default_sector_candidates() {
  std::vector<std::uint32_t> v;
  for (std::uint32_t s = 1; s <= 512; s *= 2) v.push_back(s);
  return v;
}

std::vector<BlockRole> gateable_roles(OrgKind kind) {
  std::vector<BlockRole> roles;
  for (const auto& [role, s] : reference_sectors(kind)) roles.push_back(role);
  return roles;
}

SweepSpec SweepSpec::reference() {
  SweepSpec spec;
  for (OrgKind k : spec.kinds) {
    for (const auto& [role, s] : reference_sectors(k)) spec.sectors[k][role] = {s};
  }
  return spec;
}

std::vector<std::uint32_t> SweepSpec::candidates(OrgKind kind, BlockRole role) const {
  auto k = sectors.find(kind);
  if (k != sectors.end()) {
    auto r = k->second.find(role);
    if (r != k->second.end()) return r->second;
  }
  return default_sector_candidates();
}

void SweepSpec::validate() const {
  if (kinds.empty()) throw InputError("sweep: no organization kinds");
  if (banks.empty()) throw InputError("sweep: no bank candidates");
  for (auto n : banks) {
    if (n == 0) throw InputError("sweep: bank count must be positive");
  }
  for (const auto& [kind, roles] : sectors) {
    for (const auto& [role, list] : roles) {
      if (list.empty()) {
        throw InputError(fmt::format("sweep: empty sector list for {} {}", kind_name(kind),
                                     role_name(role)));
      }
      for (auto s : list) {
        if (s == 0) {
          throw InputError(fmt::format("sweep: sector count 0 for {} {}", kind_name(kind),
                                       role_name(role)));
        }
      }
    }
  }
  if (energy_weight < 0 || area_weight < 0 || energy_weight + area_weight <= 0) {
    throw InputError("sweep: objective weights must be non-negative and not both zero");
  }
}

SweepSpec sweep_from_json(const nlohmann::json& doc) {
  SweepSpec spec;
  try {
    if (doc.contains("kinds")) {
      spec.kinds.clear();
      for (const auto& k : doc["kinds"]) {
        auto kind = parse_kind(k.get<std::string>());
        if (!kind) throw InputError("sweep: unknown kind " + k.get<std::string>());
        if (std::find(spec.kinds.begin(), spec.kinds.end(), *kind) == spec.kinds.end()) {
          spec.kinds.push_back(*kind);
        }
      }
      std::sort(spec.kinds.begin(), spec.kinds.end());
    }
    if (doc.contains("gating")) {
      auto g = parse_gating(doc["gating"].get<std::string>());
      if (!g) throw InputError("sweep: gating must be off, on or both");
      spec.gating = *g;
    }
    if (doc.contains("sectors")) {
      for (const auto& [kname, roles] : doc["sectors"].items()) {
        auto kind = parse_kind(kname);
        if (!kind) throw InputError("sweep: unknown kind " + kname);
        const auto allowed = gateable_roles(*kind);
        for (const auto& [rname, list] : roles.items()) {
          auto role = parse_role(rname);
          if (!role || std::find(allowed.begin(), allowed.end(), *role) == allowed.end()) {
            throw InputError(fmt::format("sweep: {} has no gateable {} block", kname, rname));
          }
          for (const auto& s : list) {
            if (!s.is_number_unsigned()) {
              throw InputError(fmt::format("sweep: sector counts for {} {} must be positive integers",
                                           kname, rname));
            }
          }
          spec.sectors[*kind][*role] = list.get<std::vector<std::uint32_t>>();
        }
      }
    }
    if (doc.contains("banks")) {
      for (const auto& n : doc["banks"]) {
        if (!n.is_number_unsigned()) throw InputError("sweep: banks must be positive integers");
      }
      spec.banks = doc["banks"].get<std::vector<std::uint32_t>>();
    }
    if (doc.contains("weights")) {
      spec.energy_weight = doc["weights"].value("energy", spec.energy_weight);
      spec.area_weight = doc["weights"].value("area", spec.area_weight);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("sweep: ") + e.what());
  }
  spec.validate();
  return spec;
}

SweepSpec load_sweep_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sweep spec " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
  return sweep_from_json(doc);
}

nlohmann::ordered_json to_json(const SweepSpec& spec) {
  nlohmann::ordered_json j;
  j["kinds"] = nlohmann::ordered_json::array();
  for (auto k : spec.kinds) j["kinds"].push_back(std::string(kind_name(k)));
  j["gating"] = std::string(gating_name(spec.gating));
  j["sectors"] = nlohmann::ordered_json::object();
  for (const auto& [kind, roles] : spec.sectors) {
    auto& jk = j["sectors"][std::string(kind_name(kind))];
    for (const auto& [role, list] : roles) jk[std::string(role_name(role))] = list;
  }
  j["banks"] = spec.banks;
  j["weights"] = {{"energy", spec.energy_weight}, {"area", spec.area_weight}};
  return j;
}

std::string config_id(const MemoryOrg& org) {
  const std::uint32_t banks = org.blocks.empty() ? kDefaultBanks : org.blocks.front().banks;
  std::string id = fmt::format("{}/N{}", org.label, banks);
  if (org.label.starts_with("PG-")) {
    std::string s;
    for (BlockRole role : gateable_roles(org.kind)) {
      const MemBlock* b = org.find(role);
      if (!b) continue;
      if (!s.empty()) s += '-';
      s += fmt::format("{}{}", role_name(role).front(), b->sectors);
    }
    id += "/" + s;
  }
  return id;
}

namespace {

// Cartesian product of the candidate lists, last role varying fastest.
void product(const std::vector<std::vector<std::uint32_t>>& lists, std::size_t at,
             std::vector<std::uint32_t>& cur, std::vector<std::vector<std::uint32_t>>& out) {
  if (at == lists.size()) {
    out.push_back(cur);
    return;
  }
  for (auto s : lists[at]) {
    cur.push_back(s);
    product(lists, at + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::vector<MemoryOrg> enumerate(const SweepSpec& spec, const FootprintStats& stats) {
  spec.validate();
  std::vector<OrgKind> kinds = spec.kinds;
  std::sort(kinds.begin(), kinds.end());
  kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());

  std::vector<MemoryOrg> out;
  for (OrgKind kind : kinds) {
    for (std::uint32_t banks : sorted_unique(spec.banks)) {
      const MemoryOrg base = size_org(kind, stats, banks);
      if (spec.gating != Gating::On) out.push_back(base);
      if (spec.gating == Gating::Off) continue;

      const auto roles = gateable_roles(kind);
      std::vector<std::vector<std::uint32_t>> lists;
      for (BlockRole r : roles) lists.push_back(sorted_unique(spec.candidates(kind, r)));
      std::vector<std::vector<std::uint32_t>> tuples;
      std::vector<std::uint32_t> cur;
      product(lists, 0, cur, tuples);
      for (const auto& t : tuples) {
        SectorAssignment a;
        for (std::size_t i = 0; i < roles.size(); ++i) a[roles[i]] = t[i];
        out.push_back(apply_gating(base, a));
      }
    }
  }
  if (out.empty()) throw InputError("sweep: design space is empty");
  return out;
}

bool is_reference_config(const MemoryOrg& org) {
  for (const auto& b : org.blocks) {
    if (b.banks != kDefaultBanks) return false;
  }
  if (!org.label.starts_with("PG-")) return !org.power_gated;
  const auto ref = reference_sectors(org.kind);
  for (const auto& b : org.blocks) {
    auto it = ref.find(b.role);
    const std::uint32_t want = it == ref.end() ? 1 : it->second;
    if (b.sectors != want) return false;
  }
  return true;
}

bool dominates(const DesignPoint& a, const DesignPoint& b) {
  return a.area_mm2 <= b.area_mm2 && a.energy_mj <= b.energy_mj &&
         (a.area_mm2 < b.area_mm2 || a.energy_mj < b.energy_mj);
}

ParetoSet pareto(const std::vector<DesignPoint>& points) {
  ParetoSet set;
  set.dominated.assign(points.size(), false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size() && !set.dominated[i]; ++j) {
      if (j != i && dominates(points[j], points[i])) set.dominated[i] = true;
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!set.dominated[i]) {
      set.frontier.push_back(points[i]);
      set.frontier.back().dominated = false;
    }
  }
  std::stable_sort(set.frontier.begin(), set.frontier.end(),
                   [](const DesignPoint& a, const DesignPoint& b) { return a.area_mm2 < b.area_mm2; });
  return set;
}

void score_points(std::vector<DesignPoint>& points, double energy_weight, double area_weight) {
  double max_e = 0, max_a = 0;
  for (const auto& p : points) {
    max_e = std::max(max_e, p.energy_mj);
    max_a = std::max(max_a, p.area_mm2);
  }
  for (auto& p : points) {
    const double e = max_e > 0 ? p.energy_mj / max_e : 0.0;
    const double a = max_a > 0 ? p.area_mm2 / max_a : 0.0;
    p.score = energy_weight * e + area_weight * a;
  }
}

SweepResult run_sweep(const SweepSpec& spec, const SweepContext& ctx) {
  if (!ctx.workload || !ctx.params) throw InputError("sweep: missing workload or parameters");
  if (ctx.mode == CostMode::Replay && !ctx.table) {
    throw InputError("sweep: replay mode needs a calibration table");
  }
  const Workload& w = *ctx.workload;
  const auto orgs = enumerate(spec, footprint_stats(w));

  std::vector<DesignPoint> points(orgs.size());
  std::vector<std::exception_ptr> errors(orgs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < orgs.size(); i = next++) {
      try {
        const MemoryOrg& org = orgs[i];
        if (ctx.mode == CostMode::Replay && !is_reference_config(org)) {
          throw MissingAnchorError(
              fmt::format("no calibration anchor for {} (replay covers reference configs only)",
                          config_id(org)));
        }
        const GateSchedule s = build_schedule(w, org, ctx.schedule);
        const EvalReport r = evaluate(w, org, s, *ctx.params, ctx.mode, ctx.table);
        DesignPoint& p = points[i];
        p.config = config_id(org);
        p.org = org;
        p.area_mm2 = r.onchip_area_mm2;
        p.energy_mj = r.onchip_energy_mj;
        p.total_energy_mj = r.grand_total_mj;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  unsigned n = ctx.threads ? ctx.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, orgs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepResult result;
  result.mode = ctx.mode;
  score_points(points, spec.energy_weight, spec.area_weight);
  result.frontier = pareto(points);
  for (std::size_t i = 0; i < points.size(); ++i) points[i].dominated = result.frontier.dominated[i];
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].score < points[result.selected].score) result.selected = i;
  }
  result.points = std::move(points);
  return result;
}

namespace {

std::string sector_cell(const MemoryOrg& org, BlockRole role) {
  const MemBlock* b = org.find(role);
  return b ? std::to_string(b->sectors) : "";
}

void csv_rows(std::ostringstream& out, const std::vector<DesignPoint>& points) {
  out << "config,kind,gating,banks,S_shared,S_weight,S_data,S_acc,area_mm2,energy_mJ,"
         "total_energy_mJ,score,dominated\n";
  for (const auto& p : points) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", p.config, kind_name(p.org.kind),
                       p.org.label.starts_with("PG-") ? "on" : "off",
                       p.org.blocks.empty() ? 0u : p.org.blocks.front().banks,
                       sector_cell(p.org, BlockRole::Shared), sector_cell(p.org, BlockRole::Weight),
                       sector_cell(p.org, BlockRole::Data),
                       sector_cell(p.org, BlockRole::Accumulator), p.area_mm2, p.energy_mj,
                       p.total_energy_mj, p.score, p.dominated ? 1 : 0);
  }
}

}  // namespace

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream out;
  csv_rows(out, r.points);
  return out.str();
}

std::string frontier_csv(const SweepResult& r) {
  std::ostringstream out;
  csv_rows(out, r.frontier.frontier);
  return out.str();
}

nlohmann::ordered_json summary_json(const SweepResult& r) {
  nlohmann::ordered_json j;
  const auto& best = r.best();
  j["mode"] = std::string(mode_name(r.mode));
  j["configurations"] = r.points.size();
  j["selected"] = {{"config", best.config},
                   {"org", best.org.label},
                   {"area_mm2", best.area_mm2},
                   {"energy_mJ", best.energy_mj},
                   {"total_energy_mJ", best.total_energy_mj},
                   {"score", best.score}};
  j["frontier"] = nlohmann::ordered_json::array();
  for (const auto& p : r.frontier.frontier) {
    j["frontier"].push_back({{"config", p.config}, {"area_mm2", p.area_mm2}, {"energy_mJ", p.energy_mj}});
  }
  return j;
}

}  // namespace capstore
