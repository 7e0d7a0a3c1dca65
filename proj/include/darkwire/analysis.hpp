#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "darkwire/optimize.hpp"

namespace darkwire {

// ---------------------------------------------------------------------------
// Sensitivity

struct SensitivityEntry {
  int index = 0;  // 1-based
  std::string name;
  double value = 0.0;       // theta at the base point
  double derivative = 0.0;  // dP/d(ln theta)
  double halved = 0.0;      // same with step h/2
  bool unscalable = false;  // theta is zero or infinite
  double raw_derivative = 0.0;  // dP/dtheta, only for unscalable entries with theta = 0
};

struct SensitivityReport {
  double base_power = 0.0;
  double gamma_ab = 0.0;  // pinned during differencing
  double step = 1e-4;
  std::vector<SensitivityEntry> entries;

  const SensitivityEntry& at(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw Error("no sensitivity entry '" + name + "'");
  }

  /// Largest |D(h) - D(h/2)| / max(|D(h)|, floor) over scalable entries,
  /// with floor = 1e-6 |P|. At an optimized configuration the on-site
  /// energies are stationary, so their differences are pure truncation
  /// error; `skip_energies` leaves them out.
  double richardson_spread(bool skip_energies = false) const {
    const double floor = 1e-6 * std::abs(base_power);
    double worst = 0.0;
    for (const auto& e : entries) {
      if (e.unscalable || (skip_energies && e.name.rfind("eps_", 0) == 0)) continue;
      worst = std::max(worst, std::abs(e.derivative - e.halved) / std::max(std::abs(e.derivative), floor));
    }
    return worst;
  }
};

/// A scalar model parameter that can be read and overwritten.
struct Knob {
  std::string name;
  std::function<double(const ModelParams&)> get;
  std::function<void(ModelParams&, double)> set;
};

namespace detail {

inline Knob flat_rate_knob(const std::string& label, const std::string& process) {
  return {"gamma_" + label,
          [process](const ModelParams& m) {
            const auto* p = find_process(m, process);
            return p ? flat_of(*p).gamma : 0.0;
          },
          [process](ModelParams& m, double v) { flat_of(*find_process(m, process)).gamma = v; }};
}

/// Inverse temperature beta = 1 / (k_B T), in 1/eV.
inline double beta_of(double t) {
  return t > 0.0 ? 1.0 / (k_boltzmann * t) : std::numeric_limits<double>::infinity();
}
inline double temperature_of(double beta) { return 1.0 / (k_boltzmann * beta); }

inline Knob flat_beta_knob(const std::string& label, const std::string& process) {
  return {"beta_" + label,
          [process](const ModelParams& m) {
            const auto* p = find_process(m, process);
            return p ? beta_of(flat_of(*p).temperature) : 0.0;
          },
          [process](ModelParams& m, double v) { flat_of(*find_process(m, process)).temperature = temperature_of(v); }};
}

inline DrudeLorentz& drude_of(ModelParams& m, const std::string& process) {
  auto* p = find_process(m, process);
  if (!p) throw Error("no process '" + process + "'");
  auto* d = std::get_if<DrudeLorentz>(&p->spectrum);
  if (!d) throw Error("process '" + process + "' is not Drude-Lorentz");
  return *d;
}

inline const DrudeLorentz& drude_of(const ModelParams& m, const std::string& process) {
  return drude_of(const_cast<ModelParams&>(m), process);
}

}  // namespace detail

/// Parameter list: interior energies, EC processes, per-site phonon baths,
/// injection, extraction, optical, J; optionally a shared non-radiative rate.
inline std::vector<Knob> sensitivity_knobs(const ModelParams& model, bool include_nonrad = false) {
  namespace pn = process_names;
  using detail::drude_of;
  const int n = model.n_sites();
  std::vector<Knob> k;
  for (int i = 1; i + 1 < n; ++i) {
    k.push_back({"eps_" + std::to_string(i + 1),
                 [i](const ModelParams& m) { return m.chain.onsite_energies[i]; },
                 [i](ModelParams& m, double v) { m.chain.onsite_energies[i] = v; }});
  }
  k.push_back(detail::flat_beta_knob("alpha_beta", pn::alpha_beta));
  k.push_back(detail::flat_rate_knob("alpha_beta", pn::alpha_beta));
  k.push_back(detail::flat_beta_knob("beta_g", pn::beta_g));
  k.push_back(detail::flat_rate_knob("beta_g", pn::beta_g));
  for (int i = 0; i < n; ++i) {
    const std::string proc = pn::phonon(i), s = std::to_string(i + 1);
    k.push_back({"beta_ph_" + s, [proc](const ModelParams& m) { return detail::beta_of(drude_of(m, proc).temperature); },
                 [proc](ModelParams& m, double v) { drude_of(m, proc).temperature = detail::temperature_of(v); }});
    k.push_back({"Gamma_" + s, [proc](const ModelParams& m) { return drude_of(m, proc).width; },
                 [proc](ModelParams& m, double v) { drude_of(m, proc).width = v; }});
    k.push_back({"omega0_" + s, [proc](const ModelParams& m) { return drude_of(m, proc).omega0; },
                 [proc](ModelParams& m, double v) { drude_of(m, proc).omega0 = v; }});
    k.push_back({"gamma_ph_" + s, [proc](const ModelParams& m) { return drude_of(m, proc).gamma_phonon; },
                 [proc](ModelParams& m, double v) { drude_of(m, proc).gamma_phonon = v; }});
  }
  k.push_back(detail::flat_beta_knob("inj", pn::injection));
  k.push_back(detail::flat_rate_knob("inj", pn::injection));
  k.push_back(detail::flat_beta_knob("N_alpha", pn::n_alpha));
  k.push_back(detail::flat_rate_knob("N_alpha", pn::n_alpha));
  k.push_back(detail::flat_beta_knob("em", pn::optical));
  k.push_back(detail::flat_rate_knob("em", pn::optical));
  k.push_back({"J", [](const ModelParams& m) { return coupling_constant(m.chain.coupling); },
               [](ModelParams& m, double v) { set_coupling_constant(m.chain.coupling, v); }});
  if (include_nonrad) {
    k.push_back({"gamma_nr",
                 [](const ModelParams& m) {
                   const auto* p = find_process(m, process_names::nonrad(0));
                   return p ? flat_of(*p).gamma : 0.0;
                 },
                 [n](ModelParams& m, double v) {
                   double t = 300.0;
                   if (const auto* e = find_process(m, process_names::n_alpha)) t = flat_of(*e).temperature;
                   for (int i = 0; i < n; ++i) {
                     if (auto* p = find_process(m, process_names::nonrad(i))) {
                       flat_of(*p).gamma = v;
                     } else {
                       m.processes.push_back({process_names::nonrad(i), LocalDecay{i}, Flat{v, t}});
                     }
                   }
                 }});
  }
  return k;
}

struct SensitivityOptions {
  double step = 1e-4;  // in ln(theta)
  bool include_nonrad = false;
};

/// Central differences of the power in log parameters at the given energies.
/// The alpha<->beta rate is first optimized and then held fixed.
inline SensitivityReport sensitivity(const ModelParams& params, const std::vector<double>& energies,
                                     const SensitivityOptions& opts = {}) {
  ModelParams base = params;
  base.chain.onsite_energies = energies;
  const auto reading = evaluate_power(base);
  if (!(reading.power > 0.0)) throw Error("sensitivity: power not positive at the base point");
  base = with_gamma_ab(base, reading.gamma_ab);

  SensitivityReport rep;
  rep.gamma_ab = reading.gamma_ab;
  rep.step = opts.step;
  auto power_with = [&](const Knob& k, double v) {
    ModelParams m = base;
    k.set(m, v);
    return evaluate_power(m).power;
  };
  rep.base_power = evaluate_power(base).power;

  const auto knobs = sensitivity_knobs(base, opts.include_nonrad);
  rep.entries.resize(knobs.size());
  for (std::size_t i = 0; i < knobs.size(); ++i) {
    const Knob& k = knobs[i];
    SensitivityEntry& e = rep.entries[i];
    e.index = static_cast<int>(i) + 1;
    e.name = k.name;
    e.value = k.get(base);
    if (!(e.value > 0.0) || !std::isfinite(e.value)) {
      // ln(theta) undefined: log derivative is zero; report raw slope from zero.
      e.unscalable = true;
      if (e.value == 0.0) e.raw_derivative = (power_with(k, opts.step) - rep.base_power) / opts.step;
      continue;
    }
    auto central = [&](double h) {
      return (power_with(k, e.value * std::exp(h)) - power_with(k, e.value * std::exp(-h))) / (2.0 * h);
    };
    e.derivative = central(opts.step);
    e.halved = central(0.5 * opts.step);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  std::vector<double> coords;
  std::vector<double> values;
  std::string error;
};

struct SweepResult {
  std::string name;
  std::vector<std::string> axes;     // with units
  std::vector<std::string> columns;  // with units
  std::vector<SweepRow> rows;
  std::map<std::string, std::string> metadata;

  int column(const std::string& c) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == c) return static_cast<int>(k);
    throw Error("no column '" + c + "'");
  }
  double value(std::size_t row, const std::string& c) const { return rows.at(row).values.at(column(c)); }
};

/// Per-point seed derived from a global seed and the point index.
inline std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline void check_grid(const std::vector<double>& grid, const std::string& what) {
  if (grid.empty()) throw Error(what + " grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw Error(what + " grid must be strictly increasing");
}

namespace detail {

inline void ensemble_metadata(SweepResult& r, const EnsembleOptions& o) {
  r.metadata["ensemble_count"] = std::to_string(o.count);
  r.metadata["seed"] = std::to_string(o.seed);
  std::string m;
  for (auto k : o.methods) m += (m.empty() ? "" : "+") + to_string(k);
  r.metadata["methods"] = m;
  r.metadata["max_evaluations"] = std::to_string(o.local.max_evaluations);
}

inline double emission_at(const ModelParams& model, const std::vector<double>& energies, double gamma_ab) {
  ModelParams m = with_gamma_ab(model, gamma_ab);
  m.chain.onsite_energies = energies;
  const auto basis = diagonalize(m.chain);
  return emission(basis, steady_state(assemble_rates(m, basis))).total_emission;
}

const std::vector<std::string> ensemble_columns = {
    "linear_power [eV^2]", "optimized_power [eV^2]", "enhancement [1]", "mean_pr_linear [1]",
    "total_emission_linear [1]", "total_emission_optimized [1]"};

/// One ensemble point: rebuild the model, optimize and collect diagnostics.
inline std::vector<double> ensemble_point(const PhysicalParams& p, EnsembleOptions o, std::uint64_t seed) {
  o.seed = seed;
  const ModelParams model = build_model(p);
  const auto prob = make_problem(model);
  const auto ens = run_ensemble(prob, o);
  const auto& best = ens.best();
  if (!best.error.empty()) throw Error(best.error);
  const double pr = mean_participation_ratio(diagonalize(model.chain));
  auto gamma_at = [&](const std::vector<double>& e) {
    ModelParams m = model;
    m.chain.onsite_energies = e;
    return evaluate_power(m).gamma_ab;
  };
  const double em_lin = ens.linear_objective > 0.0
                            ? emission_at(model, ens.linear_energies, gamma_at(ens.linear_energies))
                            : std::nan("");
  const double em_opt = best.final_objective > 0.0
                            ? emission_at(model, best.final_energies, gamma_at(best.final_energies))
                            : std::nan("");
  return {ens.linear_objective, best.final_objective, enhancement(best.final_objective, ens.linear_objective),
          pr, em_lin, em_opt};
}

template <class Setup>
SweepResult ensemble_sweep(const std::string& name, const std::string& axis, const std::vector<double>& grid,
                           const EnsembleOptions& opts, Setup setup) {
  check_grid(grid, axis);
  SweepResult r;
  r.name = name;
  r.axes = {axis};
  r.columns = ensemble_columns;
  ensemble_metadata(r, opts);
  r.rows.resize(grid.size());
  EnsembleOptions inner = opts;
  inner.jobs = 1;
  parallel_for(static_cast<int>(grid.size()), opts.jobs, [&](int k) {
    SweepRow& row = r.rows[k];
    row.coords = {grid[k]};
    try {
      row.values = ensemble_point(setup(grid[k]), inner, point_seed(opts.seed, k));
    } catch (const std::exception& e) {
      row.values.assign(r.columns.size(), std::nan(""));
      row.error = e.what();
    }
  });
  return r;
}

}  // namespace detail

/// Ensemble optimization at each hopping strength.
inline SweepResult sweep_J(const PhysicalParams& base, const std::vector<double>& grid, const EnsembleOptions& opts) {
  return detail::ensemble_sweep("J", "J [eV]", grid, opts, [&](double J) {
    PhysicalParams p = base;
    p.J = J;
    return p;
  });
}

/// Ensemble optimization at each gradient; the phonon peak is retuned to
/// omega0 = sqrt(dE^2 - Gamma^2) and the top energy eps_e is held fixed.
inline SweepResult sweep_dE(const PhysicalParams& base, const std::vector<double>& grid,
                            const EnsembleOptions& opts) {
  return detail::ensemble_sweep("dE", "dE [eV]", grid, opts, [&](double dE) {
    PhysicalParams p = base;
    p.delta_e = dE;
    p.omega0.reset();
    p.onsite_energies.reset();
    if (!(dE > p.Gamma)) throw Error("omega0 imaginary: dE must exceed Gamma");
    return p;
  });
}

enum class PhononAxis { omega0, Gamma, temperature };

inline PhononAxis parse_phonon_axis(const std::string& s) {
  if (s == "omega0") return PhononAxis::omega0;
  if (s == "Gamma") return PhononAxis::Gamma;
  if (s == "Tph") return PhononAxis::temperature;
  throw Error("unknown phonon axis '" + s + "'");
}

/// omega0 and Gamma: power of two fixed configurations at each grid point,
/// with the other phonon parameter held at its base value. Tph: an ensemble
/// per temperature, reporting the min/max over the best five optima.
inline SweepResult sweep_phonon(const PhysicalParams& base, PhononAxis which, const std::vector<double>& grid,
                                const std::vector<double>& linear_energies,
                                const std::vector<double>& spiked_energies, const EnsembleOptions& opts = {}) {
  SweepResult r;
  if (which == PhononAxis::temperature) {
    check_grid(grid, "Tph");
    r.name = "Tph";
    r.axes = {"Tph [K]"};
    r.columns = {"linear_power [eV^2]", "best_power [eV^2]", "band_min [eV^2]", "band_max [eV^2]", "enhancement [1]"};
    detail::ensemble_metadata(r, opts);
    r.metadata["band"] = "best 5 optima";
    r.rows.resize(grid.size());
    EnsembleOptions inner = opts;
    inner.jobs = 1;
    parallel_for(static_cast<int>(grid.size()), opts.jobs, [&](int k) {
      SweepRow& row = r.rows[k];
      row.coords = {grid[k]};
      try {
        PhysicalParams p = base;
        p.t_ph = grid[k];
        inner.seed = point_seed(opts.seed, k);
        const auto ens = run_ensemble(make_problem(build_model(p)), inner);
        const std::size_t top = std::min<std::size_t>(5, ens.runs.size());
        double lo = ens.runs[0].final_objective, hi = lo;
        for (std::size_t i = 0; i < top; ++i) {
          lo = std::min(lo, ens.runs[i].final_objective);
          hi = std::max(hi, ens.runs[i].final_objective);
        }
        row.values = {ens.linear_objective, ens.best().final_objective, lo, hi, ens.best_enhancement()};
      } catch (const std::exception& e) {
        row.values.assign(r.columns.size(), std::nan(""));
        row.error = e.what();
      }
    });
    return r;
  }

  const bool w0 = which == PhononAxis::omega0;
  check_grid(grid, w0 ? "omega0" : "Gamma");
  r.name = w0 ? "omega0" : "Gamma";
  r.axes = {w0 ? "omega0 [eV]" : "Gamma [eV]"};
  r.columns = {"linear_power [eV^2]", "spiked_power [eV^2]", "spiked_over_linear [1]"};
  if (w0) r.columns.push_back("omega0_over_dE [1]");
  r.rows.resize(grid.size());
  parallel_for(static_cast<int>(grid.size()), opts.jobs, [&](int k) {
    SweepRow& row = r.rows[k];
    row.coords = {grid[k]};
    try {
      PhysicalParams p = base;
      p.omega0 = effective_omega0(base);
      if (w0) {
        p.omega0 = grid[k];
      } else {
        p.Gamma = grid[k];
      }
      ModelParams m = build_model(p);
      m.chain.onsite_energies = linear_energies;
      const double lin = evaluate_power(m).power;
      m.chain.onsite_energies = spiked_energies;
      const double spk = evaluate_power(m).power;
      row.values = {lin, spk, lin > 0.0 ? spk / lin : std::nan("")};
      if (w0) row.values.push_back(grid[k] / base.delta_e);
    } catch (const std::exception& e) {
      row.values.assign(r.columns.size(), std::nan(""));
      row.error = e.what();
    }
  });
  return r;
}

/// Enhancement on a radiative x non-radiative loss grid.
inline SweepResult loss_grid(const PhysicalParams& base, const std::vector<double>& gamma_em_grid,
                             const std::vector<double>& gamma_nr_grid, const EnsembleOptions& opts) {
  SweepResult r;
  r.name = "loss-grid";
  r.axes = {"gamma_em [eV]", "gamma_nr [eV]"};
  r.columns = detail::ensemble_columns;
  detail::ensemble_metadata(r, opts);
  for (const auto* g : {&gamma_em_grid, &gamma_nr_grid})
    if (g->empty()) throw Error("loss grid axis is empty");
  check_grid(gamma_em_grid, "gamma_em");
  check_grid(gamma_nr_grid, "gamma_nr");
  const int n_nr = static_cast<int>(gamma_nr_grid.size());
  const int cells = static_cast<int>(gamma_em_grid.size()) * n_nr;
  r.rows.resize(cells);
  EnsembleOptions inner = opts;
  inner.jobs = 1;
  parallel_for(cells, opts.jobs, [&](int c) {
    SweepRow& row = r.rows[c];
    const double em = gamma_em_grid[c / n_nr], nr = gamma_nr_grid[c % n_nr];
    row.coords = {em, nr};
    try {
      PhysicalParams p = base;
      p.gamma_em = em;
      p.gamma_nr = nr;
      row.values = detail::ensemble_point(p, inner, point_seed(opts.seed, c));
    } catch (const std::exception& e) {
      row.values.assign(r.columns.size(), std::nan(""));
      row.error = e.what();
    }
  });
  return r;
}

/// Linear-chain power against gradient for each phonon coupling. The top
/// energy is fixed; omega0 follows dE, and for dE <= Gamma takes the value
/// of the smallest grid gradient above Gamma.
inline SweepResult zero_bias_study(const PhysicalParams& base, const std::vector<double>& gamma_phonon_values,
                                   const std::vector<double>& dE_grid, int jobs = 1) {
  check_grid(dE_grid, "dE");
  if (gamma_phonon_values.empty()) throw Error("no phonon couplings given");
  double w_floor = std::nan("");
  for (double dE : dE_grid) {
    if (dE > base.Gamma) {
      w_floor = tied_omega0(dE, base.Gamma);
      break;
    }
  }
  SweepResult r;
  r.name = "zero-bias";
  r.axes = {"gamma_phonon [eV]", "dE [eV]"};
  r.columns = {"power [eV^2]", "gamma_ab [eV]", "omega0 [eV]"};
  const int n_de = static_cast<int>(dE_grid.size());
  const int cells = static_cast<int>(gamma_phonon_values.size()) * n_de;
  r.rows.resize(cells);
  parallel_for(cells, jobs, [&](int c) {
    SweepRow& row = r.rows[c];
    const double gph = gamma_phonon_values[c / n_de], dE = dE_grid[c % n_de];
    row.coords = {gph, dE};
    try {
      PhysicalParams p = base;
      p.gamma_phonon = gph;
      p.delta_e = dE;
      p.onsite_energies.reset();
      if (dE > base.Gamma) {
        p.omega0 = tied_omega0(dE, base.Gamma);
      } else {
        if (!std::isfinite(w_floor)) throw Error("no grid gradient exceeds Gamma to fix omega0");
        p.omega0 = w_floor;
      }
      const auto reading = evaluate_power(build_model(p));
      row.values = {reading.power, reading.gamma_ab, *p.omega0};
    } catch (const std::exception& e) {
      row.values.assign(r.columns.size(), std::nan(""));
      row.error = e.what();
    }
  });
  return r;
}

/// Grid coordinate (along `axis`) maximizing `column` among rows whose
/// other coordinate equals `fixed` (2-D sweeps) or over all rows.
inline double argmax_along(const SweepResult& r, const std::string& column, int axis = 0,
                           std::optional<double> fixed = std::nullopt) {
  const int c = r.column(column);
  double best = -std::numeric_limits<double>::infinity(), at = std::nan("");
  for (const auto& row : r.rows) {
    if (fixed && row.coords.at(1 - axis) != *fixed) continue;
    const double v = row.values[c];
    if (std::isfinite(v) && v > best) {
      best = v;
      at = row.coords[axis];
    }
  }
  return at;
}

}  // namespace darkwire
