#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "darkwire/hamiltonian.hpp"
#include "darkwire/model.hpp"

namespace darkwire {

/// Thermal occupation 1/(exp(omega/kT) - 1) for omega > 0. Zero at T = 0,
/// +inf at omega = 0 with T > 0 (callers use limit forms there).
inline double bose_einstein(double omega, double temperature) {
  if (temperature <= 0.0) return 0.0;
  if (omega == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::expm1(omega / (k_boltzmann * temperature));
}

inline double heaviside(double omega) { return omega > 0.0 ? 1.0 : (omega < 0.0 ? 0.0 : 0.5); }

/// Emission for omega > 0 (n + 1), absorption for omega < 0 (n at |omega|).
/// Evaluated at |omega| on both sides so that S(w)/S(-w) = exp(w/kT).
inline double spectral_density(const DrudeLorentz& s, double omega) {
  const double a = std::abs(omega);
  const double detune = a - s.omega0;
  const double lorentz = M_PI * s.width * s.gamma_phonon / (s.width * s.width + detune * detune);
  if (a == 0.0) return s.temperature > 0.0 ? k_boltzmann * s.temperature * lorentz : 0.0;
  return a * lorentz * (bose_einstein(a, s.temperature) + heaviside(omega));
}

inline double spectral_density(const Flat& s, double omega) {
  if (omega == 0.0) return 0.0;
  return s.gamma * (bose_einstein(std::abs(omega), s.temperature) + heaviside(omega));
}

inline double spectral_density(const SpectralDensity& s, double omega) {
  return std::visit([omega](const auto& x) { return spectral_density(x, omega); }, s);
}

/// <phi_m | A | phi_n> for the operator described by `pattern`. Real because
/// the eigenvectors are real.
inline double operator_matrix_element(const OperatorPattern& pattern, const EigenBasis& basis, int m, int n) {
  const auto& v = basis.vectors;
  const int ns = basis.n_sites;
  const int g = basis.ground();
  return std::visit(
      [&](const auto& op) -> double {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, LocalDephase>) {
          return v(op.site, m) * v(op.site, n);
        } else if constexpr (std::is_same_v<T, CollectiveOptical>) {
          const double sm = v.col(m).head(ns).sum();
          const double sn = v.col(n).head(ns).sum();
          return v(g, m) * sn + sm * v(g, n);
        } else if constexpr (std::is_same_v<T, TwoLevel>) {
          const int a = op.a.index(ns), b = op.b.index(ns);
          return v(a, m) * v(b, n) + v(b, m) * v(a, n);
        } else {
          return v(op.site, m) * v(g, n) + v(g, m) * v(op.site, n);
        }
      },
      pattern);
}

/// Rate matrix of the Pauli master equation over eigenstates. W(n, m) is the
/// rate m -> n; the generator L has zero column sums.
struct RateModel {
  int n_sites = 0;
  Eigen::MatrixXd W;
  Eigen::MatrixXd L;
  std::vector<std::string> process_names;
  std::vector<Eigen::MatrixXd> components;  // per process, when requested

  int dim() const { return n_sites + 3; }
};

inline Eigen::MatrixXd generator_from_rates(const Eigen::MatrixXd& W) {
  Eigen::MatrixXd L = W;
  L.diagonal().setZero();
  const Eigen::RowVectorXd out = L.colwise().sum();
  L.diagonal() = -out.transpose();
  return L;
}

namespace detail {

/// Adds one process's golden-rule rates into W (scaled by `factor`).
inline void add_process_rates(const EnvProcess& proc, const EigenBasis& basis, Eigen::MatrixXd& W,
                              double factor = 1.0) {
  const int d = basis.dim();
  const int ns = basis.n_sites;
  const auto& e = basis.energies;
  const auto& v = basis.vectors;

  auto add = [&](int n, int m, double elem) {
    if (n == m || elem == 0.0) return;
    W(n, m) += factor * spectral_density(proc.spectrum, e[m] - e[n]) * elem * elem;
  };

  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, LocalDephase>) {
          for (int m = 0; m < ns; ++m)
            for (int n = 0; n < ns; ++n) add(n, m, v(op.site, m) * v(op.site, n));
        } else if constexpr (std::is_same_v<T, CollectiveOptical>) {
          const int g = basis.ground();
          for (int k = 0; k < ns; ++k) {
            const double s = v.col(k).head(ns).sum();
            add(g, k, s);
            add(k, g, s);
          }
        } else {
          for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n) add(n, m, operator_matrix_element(op, basis, m, n));
        }
      },
      proc.op);
}

}  // namespace detail

struct AssembleOptions {
  bool keep_components = false;
  /// Process indices to leave out (e.g. the alpha<->beta process during a rate scan).
  std::vector<int> skip;
};

/// W(n, m) = sum_mu S_mu(e_m - e_n) |<phi_m|A_mu|phi_n>|^2.
inline RateModel assemble_rates(const ModelParams& params, const EigenBasis& basis,
                                const AssembleOptions& opts = {}) {
  const int d = basis.dim();
  const int ns = basis.n_sites;
  RateModel rm;
  rm.n_sites = ns;
  rm.W = Eigen::MatrixXd::Zero(d, d);

  auto skipped = [&](int k) { return std::find(opts.skip.begin(), opts.skip.end(), k) != opts.skip.end(); };

  if (opts.keep_components) {
    for (int k = 0; k < static_cast<int>(params.processes.size()); ++k) {
      if (skipped(k)) continue;
      const auto& p = params.processes[k];
      Eigen::MatrixXd Wk = Eigen::MatrixXd::Zero(d, d);
      detail::add_process_rates(p, basis, Wk);
      rm.W += Wk;
      rm.process_names.push_back(p.name);
      rm.components.push_back(std::move(Wk));
    }
  } else {
    // Local baths sharing a spectrum collapse to S(w_mn) * sum_i c_mi^2 c_ni^2.
    std::vector<const SpectralDensity*> group_spec;
    std::vector<std::vector<int>> group_sites;
    for (int k = 0; k < static_cast<int>(params.processes.size()); ++k) {
      if (skipped(k)) continue;
      const auto& p = params.processes[k];
      rm.process_names.push_back(p.name);
      if (const auto* ld = std::get_if<LocalDephase>(&p.op)) {
        std::size_t gi = 0;
        while (gi < group_spec.size() && !(*group_spec[gi] == p.spectrum)) ++gi;
        if (gi == group_spec.size()) {
          group_spec.push_back(&p.spectrum);
          group_sites.emplace_back();
        }
        group_sites[gi].push_back(ld->site);
        continue;
      }
      detail::add_process_rates(p, basis, rm.W);
    }
    const auto& e = basis.energies;
    for (std::size_t gi = 0; gi < group_spec.size(); ++gi) {
      const auto& sites = group_sites[gi];
      Eigen::MatrixXd sq(ns, static_cast<int>(sites.size()));
      for (int c = 0; c < static_cast<int>(sites.size()); ++c)
        for (int n = 0; n < ns; ++n) {
          const double x = basis.overlap(n, sites[c]);
          sq(n, c) = x * x;
        }
      const Eigen::MatrixXd overlap = sq * sq.transpose();
      for (int m = 0; m < ns; ++m)
        for (int n = 0; n < ns; ++n) {
          if (n == m || overlap(n, m) == 0.0) continue;
          rm.W(n, m) += spectral_density(*group_spec[gi], e[m] - e[n]) * overlap(n, m);
        }
    }
  }
  rm.W.diagonal().setZero();
  rm.L = generator_from_rates(rm.W);
  return rm;
}

}  // namespace darkwire
