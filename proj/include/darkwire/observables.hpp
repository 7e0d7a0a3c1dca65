#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "darkwire/environment.hpp"
#include "darkwire/hamiltonian.hpp"
#include "darkwire/steadystate.hpp"

namespace darkwire {

struct PowerReading {
  double current = 0.0;  // eV (e = 1)
  double voltage = 0.0;  // eV
  double power = 0.0;    // eV^2
  double gamma_ab = 0.0;
  bool flat = false;  // max_power found nothing above 1e-300
};

struct EmissionReport {
  std::vector<double> chi;     // per chain eigenstate
  double ground_coupling = 0;  // sum_n chi_n, the g-side total
  double total_emission = 0;   // sum_n P_n chi_n
};

/// chi_n = |<g|A_em|phi_n>|^2 = (sum_j c_nj)^2 for each chain eigenstate.
inline std::vector<double> brightness(const EigenBasis& basis) {
  std::vector<double> chi(basis.n_sites);
  for (int n = 0; n < basis.n_sites; ++n) {
    const double s = basis.vectors.col(n).head(basis.n_sites).sum();
    chi[n] = s * s;
  }
  return chi;
}

inline EmissionReport emission(const EigenBasis& basis, const Populations& pop) {
  EmissionReport r;
  r.chi = brightness(basis);
  for (int n = 0; n < basis.n_sites; ++n) {
    r.ground_coupling += r.chi[n];
    r.total_emission += pop.p[n] * r.chi[n];
  }
  return r;
}

/// Population of site i: sum_n |c_ni|^2 P_n.
inline double site_population(const EigenBasis& basis, const Populations& pop, int site) {
  double s = 0.0;
  for (int n = 0; n < basis.n_sites; ++n) s += basis.overlap(n, site) * basis.overlap(n, site) * pop.p[n];
  return s;
}

inline PowerReading power_from_populations(const Populations& pop, int n_sites, double gamma_ab, double eps_alpha,
                                           double eps_beta, double t_cold) {
  const double pa = pop.p[n_sites + 1];
  const double pb = pop.p[n_sites + 2];
  PowerReading r;
  r.gamma_ab = gamma_ab;
  r.current = gamma_ab * pa;
  if (!(pb > 0.0)) {
    if (r.current == 0.0) return r;
    throw Error("voltage undefined: beta population is zero");
  }
  r.voltage = eps_alpha - eps_beta + k_boltzmann * t_cold * std::log(pa / pb);
  r.power = r.current * r.voltage;
  return r;
}

/// Bracket for the alpha<->beta rate scan, log10(eV).
inline constexpr double log_gamma_ab_min = -6.0;
inline constexpr double log_gamma_ab_max = 0.0;

/// Rates split as W(gamma_ab) = W_fixed + gamma_ab * W_unit, so that the
/// eigenbasis and all other processes are assembled once per configuration.
/// The alpha<->beta generator is rank one, (e_beta - e_alpha) v^T, so each
/// rate after the first costs a Sherman-Morrison update instead of a solve.
class PowerScan {
 public:
  PowerScan(const ModelParams& params, const EigenBasis& basis) : n_sites_(basis.n_sites) {
    const int k = alpha_beta_index(params);
    if (k < 0) throw Error("model has no alpha<->beta process");
    const EnvProcess& ab = params.processes[k];
    t_cold_ = flat_of(ab).temperature;
    eps_alpha_ = params.chain.eps_alpha;
    eps_beta_ = params.chain.eps_beta;
    pinned_ = params.optimize_gamma_ab ? -1.0 : flat_of(ab).gamma;

    const int d = basis.dim();
    fixed_ = assemble_rates(params, basis, {false, {k}}).W;
    EnvProcess unit = ab;
    flat_of(unit).gamma = 1.0;
    unit_ = Eigen::MatrixXd::Zero(d, d);
    detail::add_process_rates(unit, basis, unit_);
    unit_.diagonal().setZero();

    const Eigen::MatrixXd w_ref = rates(gamma_ref_);
    check_connectivity(w_ref, n_sites_);
    Eigen::MatrixXd A = generator_from_rates(w_ref);
    A.row(n_sites_).setOnes();
    const auto lu = A.partialPivLu();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    b[n_sites_] = 1.0;
    x0_ = lu.solve(b);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    u[basis.beta()] = 1.0;
    u[basis.alpha()] = -1.0;
    y_ = lu.solve(u);
    v_ = Eigen::VectorXd::Zero(d);
    v_[basis.alpha()] = unit_(basis.beta(), basis.alpha());
    v_[basis.beta()] = -unit_(basis.alpha(), basis.beta());
    vx0_ = v_.dot(x0_);
    vy_ = v_.dot(y_);
  }

  Eigen::MatrixXd rates(double gamma_ab) const { return fixed_ + gamma_ab * unit_; }

  Populations populations(double gamma_ab) const {
    const double delta = gamma_ab - gamma_ref_;
    Populations out;
    out.p = x0_ - (delta * vx0_ / (1.0 + delta * vy_)) * y_;
    const double scale = std::max(1.0, out.p.cwiseAbs().maxCoeff());
    if (out.p.minCoeff() < -1e-12 * scale) throw Error("steady state has negative populations");
    out.p = out.p.cwiseMax(0.0);
    out.p /= out.p.sum();
    return out;
  }

  /// Full re-solve at this rate (no rank-one update).
  Populations populations_direct(double gamma_ab) const { return steady_state_of(rates(gamma_ab), n_sites_); }

  PowerReading power(double gamma_ab) const {
    return power_from_populations(populations(gamma_ab), n_sites_, gamma_ab, eps_alpha_, eps_beta_, t_cold_);
  }

  /// Coarse decade scan, then golden-section refinement in log10(gamma_ab)
  /// to 1e-4 relative in gamma_ab.
  PowerReading max_power() const {
    auto at = [&](double x) { return power(std::pow(10.0, x)); };
    PowerReading best;
    best.power = -std::numeric_limits<double>::infinity();
    double best_x = log_gamma_ab_min;
    for (double x = log_gamma_ab_min; x <= log_gamma_ab_max + 1e-12; x += 1.0) {
      const auto r = at(x);
      if (r.power > best.power) {
        best = r;
        best_x = x;
      }
    }
    if (!(best.power > 1e-300)) {
      PowerReading z;
      z.flat = true;
      return z;
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::max(log_gamma_ab_min, best_x - 1.0), b = std::min(log_gamma_ab_max, best_x + 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    auto rc = at(c), rd = at(d);
    const double tol = 1e-4 / std::log(10.0);
    while (b - a > tol) {
      if (rc.power >= rd.power) {
        b = d;
        d = c;
        rd = rc;
        c = b - phi * (b - a);
        rc = at(c);
      } else {
        a = c;
        c = d;
        rc = rd;
        d = a + phi * (b - a);
        rd = at(d);
      }
    }
    for (const auto& r : {rc, rd})
      if (r.power > best.power) best = r;
    return best;
  }

  /// max_power() unless the model pins gamma_ab.
  PowerReading evaluate() const { return pinned_ >= 0.0 ? power(pinned_) : max_power(); }

  int n_sites() const { return n_sites_; }

 private:
  int n_sites_;
  double t_cold_ = 300.0, eps_alpha_ = 0.0, eps_beta_ = 0.0, pinned_ = -1.0;
  double gamma_ref_ = 1e-3;
  Eigen::MatrixXd fixed_, unit_;
  Eigen::VectorXd x0_, y_, v_;
  double vx0_ = 0.0, vy_ = 0.0;
};

/// Power at a given alpha<->beta rate; rebuilds rates with that rate in place.
inline PowerReading power(const ModelParams& params, const EigenBasis& basis, double gamma_ab) {
  return PowerScan(params, basis).power(gamma_ab);
}

inline PowerReading max_power(const ModelParams& params, const EigenBasis& basis) {
  return PowerScan(params, basis).max_power();
}

/// Power of a model, optimizing gamma_ab unless it is pinned.
inline PowerReading evaluate_power(const ModelParams& params) {
  const auto basis = diagonalize(params.chain);
  return PowerScan(params, basis).evaluate();
}

// ---------------------------------------------------------------------------
// Steady-state current

/// Rate used for alpha<->beta and beta<->g in the current objective.
inline constexpr double default_fast_ec_rate = 0.1;

/// EC processes become one-way (T = 0) with fast alpha->beta->g. Phonon,
/// optical and injection baths are unchanged.
inline ModelParams current_setup(ModelParams m, double fast_rate = default_fast_ec_rate) {
  const int n = m.n_sites();
  for (auto& p : m.processes) {
    if (is_pair(p.op, Label::at_site(n - 1), Label::alpha())) {
      flat_of(p).temperature = 0.0;
    } else if (is_pair(p.op, Label::alpha(), Label::beta()) || is_pair(p.op, Label::beta(), Label::ground())) {
      flat_of(p).temperature = 0.0;
      flat_of(p).gamma = fast_rate;
    }
  }
  m.optimize_gamma_ab = false;
  return m;
}

/// gamma_N_alpha * P_N at steady state, for a model already passed through current_setup().
inline double steady_current(const ModelParams& params, const EigenBasis& basis) {
  const int n = params.n_sites();
  double gamma_na = 0.0;
  for (const auto& p : params.processes)
    if (is_pair(p.op, Label::at_site(n - 1), Label::alpha())) gamma_na = flat_of(p).gamma;
  if (gamma_na == 0.0) return 0.0;
  const auto pop = steady_state(assemble_rates(params, basis));
  return gamma_na * site_population(basis, pop, n - 1);
}

inline double enhancement(double p_opt, double p_linear) {
  if (p_linear == 0.0) throw Error("enhancement: zero baseline");
  return p_opt / p_linear;
}

}  // namespace darkwire
