#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "capstore/costmodel.hpp"
#include "capstore/error.hpp"

namespace capstore {
namespace {

constexpr double kPicoToMilli = 1e-9;

struct NnlsSolution {
  Eigen::VectorXd x;
  double residual = std::numeric_limits<double>::infinity();
};

// Exact NNLS for a handful of unknowns: enumerate passive sets, solve the
// unconstrained problem on each, keep the best feasible one. Ties go to the
// smaller passive set.
NnlsSolution nnls_small(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(a.cols());
  Eigen::VectorXd norms(n);
  for (int j = 0; j < n; ++j) norms[j] = a.col(j).norm();

  NnlsSolution best;
  int best_size = n + 1;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    bool usable = true;
    for (int j = 0; j < n; ++j) {
      if (!(mask & (1u << j))) continue;
      if (norms[j] == 0.0) usable = false;
      idx.push_back(j);
    }
    if (!usable) continue;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (!idx.empty()) {
      Eigen::MatrixXd sub(a.rows(), static_cast<int>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<int>(k)) = a.col(idx[k]) / norms[idx[k]];
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
      if (qr.rank() < static_cast<int>(idx.size())) continue;
      const Eigen::VectorXd y = qr.solve(b);
      bool feasible = true;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (!(y[static_cast<int>(k)] >= 0.0)) feasible = false;
        x[idx[k]] = y[static_cast<int>(k)] / norms[idx[k]];
      }
      if (!feasible) continue;
    }
    const double r = (a * x - b).squaredNorm();
    const int size = static_cast<int>(idx.size());
    const double tol = 1e-12 * std::max(1.0, best.residual);
    if (r < best.residual - tol || (std::abs(r - best.residual) <= tol && size < best_size)) {
      best.x = x;
      best.residual = r;
      best_size = size;
    }
  }
  return best;
}

double rel_weight(double anchor) { return anchor > 0.0 ? 1.0 / anchor : 1.0; }

const std::vector<double>& port_factor_grid() {
  static const std::vector<double> grid = {1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0,
                                           6.0,  8.0, 10.0, 12.0, 16.0, 20.0};
  return grid;
}

struct OrderCheck {
  std::vector<std::pair<std::string, double>> model_totals;
  bool preserved = true;
};

OrderCheck check_order(std::span<const AnchorObservation> obs, const std::vector<double>& pred) {
  std::vector<std::string> orgs;
  std::vector<double> anchor_total;
  std::vector<double> model_total;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto it = std::find(orgs.begin(), orgs.end(), obs[i].org);
    std::size_t k = static_cast<std::size_t>(it - orgs.begin());
    if (it == orgs.end()) {
      orgs.push_back(obs[i].org);
      anchor_total.push_back(0);
      model_total.push_back(0);
    }
    anchor_total[k] += obs[i].anchor.energy_mj;
    model_total[k] += pred[i];
  }
  std::vector<std::size_t> order(orgs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return anchor_total[x] > anchor_total[y]; });

  OrderCheck out;
  for (std::size_t i : order) out.model_totals.emplace_back(orgs[i], model_total[i]);
  for (std::size_t i = 0; i < orgs.size(); ++i) {
    for (std::size_t j = 0; j < orgs.size(); ++j) {
      if (anchor_total[i] > anchor_total[j] && !(model_total[i] > model_total[j])) out.preserved = false;
    }
  }
  return out;
}

void check_anchor_set(std::span<const AnchorObservation> obs) {
  if (obs.size() < 4) throw InputError("fit_params: need at least 4 anchors");
  bool single = false, multi = false, gated = false, ungated = false;
  bool distinct = false;
  for (const auto& o : obs) {
    (o.ports > 1 ? multi : single) = true;
    (o.gated ? gated : ungated) = true;
    distinct = distinct || o.capacity != obs[0].capacity;
  }
  if (!distinct) throw InputError("fit_params: degenerate anchor set (all capacities equal)");
  if (!single || !multi) throw InputError("fit_params: anchors must span single- and multi-port blocks");
  if (!gated || !ungated) throw InputError("fit_params: anchors must include gated and ungated blocks");
}

}  // namespace

double predict_energy_mj(const AnchorObservation& o, const CostParams& p) {
  const double e_r = p.e_read(o.capacity, o.ports, o.banks);
  const double e_w = p.e_write(o.capacity, o.ports, o.banks);
  const double leak = scale_by_ports(p.leak_port_factor, o.ports) *
                      (p.leak_base_mw * o.cycles + p.leak_per_byte_mw * o.active_byte_cycles) *
                      p.clock_period_ns;
  const double wake = p.wake_energy_per_byte_pj * o.woken_bytes;
  return (o.reads * e_r + o.writes * e_w + leak + wake) * kPicoToMilli;
}

AreaFit fit_area(std::span<const AreaSample> samples) {
  if (samples.size() < 2) throw InputError("fit_area: need at least 2 samples");
  bool distinct = false;
  for (const auto& s : samples) distinct = distinct || s.capacity != samples[0].capacity;
  if (!distinct) throw InputError("fit_area: degenerate sample set (all capacities equal)");

  static const std::vector<double> grid = {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0,
                                           8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0};
  const auto m = static_cast<int>(samples.size());
  AreaFit best;
  double best_r = std::numeric_limits<double>::infinity();
  for (double pf : grid) {
    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      const auto& s = samples[static_cast<std::size_t>(i)];
      const double w = rel_weight(s.area_mm2);
      const double f = scale_by_ports(pf, s.ports);
      const double bytes = static_cast<double>(s.capacity);
      a(i, 0) = w;
      a(i, 1) = w * f * bytes;
      a(i, 2) = w * f * (s.gated ? bytes : 0.0);
      b[i] = w * s.area_mm2;
    }
    const auto sol = nnls_small(a, b);
    if (sol.residual < best_r - 1e-15) {
      best_r = sol.residual;
      best.base_mm2 = sol.x[0];
      best.per_byte_mm2 = sol.x[1];
      best.gated_per_byte_mm2 = sol.x[2];
      best.port_factor = pf;
    }
  }
  for (const auto& s : samples) {
    const double bytes = static_cast<double>(s.capacity);
    const double model = best.base_mm2 + scale_by_ports(best.port_factor, s.ports) *
                                             (best.per_byte_mm2 * bytes +
                                              best.gated_per_byte_mm2 * (s.gated ? bytes : 0.0));
    best.rel_residuals.push_back((model - s.area_mm2) * rel_weight(s.area_mm2));
  }
  return best;
}

FitResult fit_params(const CalibrationTable& table, std::span<const AnchorObservation> obs) {
  check_anchor_set(obs);
  const CostParams base = with_system(CostParams{}, table.system);
  const auto m = static_cast<int>(obs.size());

  struct Candidate {
    CostParams params;
    double residual = std::numeric_limits<double>::infinity();
  };
  Candidate best_ordered;
  Candidate best_any;

  for (int step = 1; step <= 20; ++step) {
    const double gamma = 0.05 * step;
    for (double rho : port_factor_grid()) {
      for (double rho_leak : port_factor_grid()) {
        Eigen::MatrixXd a(m, 3);
        Eigen::VectorXd b(m);
        for (int i = 0; i < m; ++i) {
          const auto& o = obs[static_cast<std::size_t>(i)];
          const double w = rel_weight(o.anchor.energy_mj);
          const double cap_term = std::pow(static_cast<double>(o.capacity), gamma);
          const double pf = scale_by_ports(rho, o.ports);
          const double pl = scale_by_ports(rho_leak, o.ports);
          a(i, 0) = w * pf * cap_term * (o.reads + base.write_factor * o.writes) * kPicoToMilli;
          a(i, 1) = w * pl * o.cycles * base.clock_period_ns * kPicoToMilli;
          a(i, 2) = w * pl * o.active_byte_cycles * base.clock_period_ns * kPicoToMilli;
          b[i] = w * (o.anchor.energy_mj - base.wake_energy_per_byte_pj * o.woken_bytes * kPicoToMilli);
        }
        const auto sol = nnls_small(a, b);
        if (!std::isfinite(sol.residual) || !(sol.x[0] > 0.0)) continue;

        CostParams p = base;
        p.dyn_exponent = gamma;
        p.dyn_port_factor = rho;
        p.leak_port_factor = rho_leak;
        p.dyn_coeff_pj = sol.x[0];
        p.leak_base_mw = sol.x[1];
        p.leak_per_byte_mw = sol.x[2];

        if (sol.residual < best_any.residual) best_any = {p, sol.residual};
        if (sol.residual < best_ordered.residual) {
          std::vector<double> pred;
          for (const auto& o : obs) pred.push_back(predict_energy_mj(o, p));
          if (check_order(obs, pred).preserved) best_ordered = {p, sol.residual};
        }
      }
    }
  }
  if (!std::isfinite(best_any.residual)) {
    throw InputError("fit_params: no admissible parameter set (dynamic coefficient would be zero)");
  }

  FitResult fit;
  fit.params = std::isfinite(best_ordered.residual) ? best_ordered.params : best_any.params;

  std::vector<AreaSample> samples;
  for (const auto& o : obs) samples.push_back({o.capacity, o.ports, o.gated, o.anchor.area_mm2});
  const AreaFit area = fit_area(samples);
  fit.params.area_base_mm2 = area.base_mm2;
  fit.params.area_per_byte_mm2 = area.per_byte_mm2;
  fit.params.area_gated_per_byte_mm2 = area.gated_per_byte_mm2;
  fit.params.area_port_factor = area.port_factor;

  std::vector<double> pred;
  double e_sq = 0, a_sq = 0;
  for (const auto& o : obs) {
    AnchorResidual r;
    r.org = o.org;
    r.role = o.role;
    r.energy_anchor = o.anchor.energy_mj;
    r.energy_model = predict_energy_mj(o, fit.params);
    r.energy_rel = (r.energy_model - r.energy_anchor) * rel_weight(r.energy_anchor);
    r.area_anchor = o.anchor.area_mm2;
    r.area_model = fit.params.area(o.capacity, o.ports, o.gated, o.sectors);
    r.area_rel = (r.area_model - r.area_anchor) * rel_weight(r.area_anchor);
    e_sq += r.energy_rel * r.energy_rel;
    a_sq += r.area_rel * r.area_rel;
    pred.push_back(r.energy_model);
    fit.residuals.push_back(r);
  }
  fit.energy_rms_rel = std::sqrt(e_sq / m);
  fit.area_rms_rel = std::sqrt(a_sq / m);
  auto order = check_order(obs, pred);
  fit.ordering_preserved = order.preserved;
  fit.model_org_energy_mj = std::move(order.model_totals);
  return fit;
}

nlohmann::ordered_json to_json(const FitResult& fit) {
  nlohmann::ordered_json j;
  j["params"] = to_json(fit.params);
  j["ordering_preserved"] = fit.ordering_preserved;
  j["energy_rms_rel"] = fit.energy_rms_rel;
  j["area_rms_rel"] = fit.area_rms_rel;
  auto& totals = j["model_org_energy_mJ"] = nlohmann::ordered_json::array();
  for (const auto& [org, e] : fit.model_org_energy_mj) totals.push_back({{"org", org}, {"energy_mJ", e}});
  auto& res = j["residuals"] = nlohmann::ordered_json::array();
  for (const auto& r : fit.residuals) {
    res.push_back({{"org", r.org},
                   {"block", std::string(role_name(r.role))},
                   {"area_anchor_mm2", r.area_anchor},
                   {"area_model_mm2", r.area_model},
                   {"area_rel_residual", r.area_rel},
                   {"energy_anchor_mJ", r.energy_anchor},
                   {"energy_model_mJ", r.energy_model},
                   {"energy_rel_residual", r.energy_rel}});
  }
  return j;
}

}  // namespace capstore
