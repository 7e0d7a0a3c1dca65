// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "darkwire/darkwire.hpp"

using namespace darkwire;

namespace {

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Verdict {
  bool pass;
  std::string detail;
};

int passed = 0, failed = 0;

void criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  (v.pass ? passed : failed)++;
  std::printf("AC%-2d %s  %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str(), dt);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Interior sites (1-based) at least dE above both neighbours.
std::vector<int> spikes(const std::vector<double>& e, double dE) {
  std::vector<int> s;
  for (std::size_t i = 1; i + 1 < e.size(); ++i)
    if (e[i] - e[i - 1] >= dE - 1e-12 && e[i] - e[i + 1] >= dE - 1e-12) s.push_back(static_cast<int>(i) + 1);
  return s;
}

bool has(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

Eigen::VectorXd rk4(const Eigen::MatrixXd& L, Eigen::VectorXd p, double t, int steps) {
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    const Eigen::VectorXd k1 = L * p;
    const Eigen::VectorXd k2 = L * (p + 0.5 * h * k1);
    const Eigen::VectorXd k3 = L * (p + 0.5 * h * k2);
    const Eigen::VectorXd k4 = L * (p + h * k3);
    p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return p;
}

/// Power and total emission of a configuration at its own optimal gamma_ab.
std::pair<double, double> power_and_emission(const ModelParams& model, const std::vector<double>& energies) {
  ModelParams m = model;
  m.chain.onsite_energies = energies;
  const auto basis = diagonalize(m.chain);
  const PowerScan scan(m, basis);
  const auto best = scan.max_power();
  return {best.power, emission(basis, scan.populations(best.gamma_ab)).total_emission};
}

EnsembleResult headline;  // shared by criteria 5, 6 and 11

}  // namespace

int main() {
  std::printf("acceptance suite, %d worker threads\n", jobs());

  criterion(1, "brightness sum rule", [] {
    std::mt19937_64 rng(1);
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
      const int n = 2 + static_cast<int>(rng() % 59);
      ChainSpec c;
      for (int i = 0; i < n; ++i) c.onsite_energies.push_back(2.0 * unit_uniform(rng));
      c.coupling = NearestNeighbor{0.3 * unit_uniform(rng)};
      double s = 0;
      for (double x : brightness(diagonalize(c))) s += x;
      worst = std::max(worst, std::abs(s - n));
    }
    return Verdict{worst < 1e-10, fmt("max |sum chi - N| = %.2e over 50 chains (tol 1e-10)", worst)};
  });

  criterion(2, "phonon rate factorization", [] {
    double worst = 0;
    for (int n : {2, 3, 5}) {
      PhysicalParams p;
      p.n_sites = n;
      p.eps_e = 0.65 + n * 0.05;
      const auto m = build_model(p);
      const auto basis = diagonalize(m.chain);
      const auto rm = assemble_rates(m, basis, {true, {}});
      for (std::size_t k = 0; k < rm.components.size(); ++k) {
        const auto* proc = find_process(m, rm.process_names[k]);
        const auto* ld = std::get_if<LocalDephase>(&proc->op);
        if (!ld) continue;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const double ca = basis.overlap(a, ld->site), cb = basis.overlap(b, ld->site);
            const double ref = spectral_density(proc->spectrum, basis.energies[a] - basis.energies[b]) * ca * ca * cb * cb;
            const double got = rm.components[k](b, a);
            worst = std::max(worst, std::abs(got - ref) / std::max(std::abs(ref), 1e-300));
          }
      }
    }
    return Verdict{worst < 1e-12, fmt("max relative deviation %.2e for N in {2,3,5} (tol 1e-12)", worst)};
  });

  criterion(3, "steady-state correctness", [] {
    std::mt19937_64 rng(3);
    double residual = 0, vs_oracle = 0, gibbs = 0;
    for (int k = 0; k < 20; ++k) {
      const int n = 2 + static_cast<int>(rng() % 9);
      const int d = n + 3;
      RateModel rm;
      rm.n_sites = n;
      rm.W = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (i != j) rm.W(i, j) = 0.05 + unit_uniform(rng);
      rm.L = generator_from_rates(rm.W);
      const auto pop = steady_state(rm);
      residual = std::max(residual, (rm.L * pop.p).cwiseAbs().maxCoeff());
      Eigen::VectorXd p0 = Eigen::VectorXd::Zero(d);
      p0[n] = 1.0;
      const Eigen::VectorXd late = rk4(rm.L, p0, 60.0, 6000);
      vs_oracle = std::max(vs_oracle, (late - pop.p).cwiseAbs().maxCoeff());

      // Single bath in detailed balance with random levels.
      Eigen::VectorXd e(d);
      for (int i = 0; i < d; ++i) e[i] = 0.3 * unit_uniform(rng);
      const double kT = k_boltzmann * 300.0;
      const Flat bath{1e-3, 300.0};
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (i != j) W(i, j) = spectral_density(bath, e[j] - e[i]);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          const double c = 0.5 + unit_uniform(rng);
          W(i, j) *= c;
          W(j, i) *= c;
        }
      Eigen::VectorXd boltz = (-e / kT).array().exp();
      boltz /= boltz.sum();
      gibbs = std::max(gibbs, (steady_state_of(W, n).p - boltz).cwiseAbs().maxCoeff());
    }
    const bool ok = residual < 1e-12 && vs_oracle < 1e-8 && gibbs < 1e-8;
    return Verdict{ok, fmt("residual %.1e (tol 1e-12), vs RK4 %.1e (tol 1e-8), Gibbs %.1e (tol 1e-8) over 20 models",
                           residual, vs_oracle, gibbs)};
  });

  criterion(4, "detailed balance of spectra", [] {
    double worst = 0;
    for (double t : {77.0, 300.0, 6000.0}) {
      const DrudeLorentz dl{1.4e-3, 0.02, tied_omega0(0.05, 0.02), t};
      const Flat fl{1e-3, t};
      for (int k = 0; k <= 200; ++k) {
        const double w = 1e-3 * std::pow(500.0, k / 200.0);
        const double expect = std::exp(w / (k_boltzmann * t));
        for (const SpectralDensity& s : {SpectralDensity(dl), SpectralDensity(fl)})
          worst = std::max(worst, std::abs(spectral_density(s, w) / spectral_density(s, -w) / expect - 1.0));
      }
    }
    return Verdict{worst < 1e-10, fmt("max relative error %.2e on w in [1e-3, 0.5] eV, T in {77, 300, 6000} K", worst)};
  });

  criterion(5, "N=20 headline enhancement", [] {
    const auto prob = make_problem(default_params());
    EnsembleOptions o;
    o.count = 101;
    o.seed = 0;
    o.jobs = jobs();
    headline = run_ensemble(prob, o);
    const double enh = headline.best_enhancement();
    return Verdict{enh >= 10.0, fmt("best enhancement %.2f over 101 sequential starts (gate >= 10, expected band [15, 40]%s)",
                                    enh, enh >= 15 && enh <= 40 ? "" : ", outside band")};
  });

  criterion(6, "spike and darkness signature", [] {
    const auto& best = headline.best().final_energies;
    const auto sp = spikes(best, 0.05);
    ModelParams m = default_params();
    m.chain.onsite_energies = best;
    const auto chi = brightness(diagonalize(m.chain));
    const int bright = static_cast<int>(std::count_if(chi.begin(), chi.end(), [](double x) { return x > 2.0; }));
    const int dark = static_cast<int>(std::count_if(chi.begin(), chi.end(), [](double x) { return x < 0.1; }));
    const double em_opt = power_and_emission(m, best).second;
    const double em_lin = power_and_emission(m, headline.linear_energies).second;
    std::string where;
    for (int s : sp) where += (where.empty() ? "" : ",") + std::to_string(s);
    const bool ok = sp.size() >= 3 && bright >= 4 && dark >= 10 && em_opt < em_lin;
    return Verdict{ok, fmt("%zu spikes at {%s} (>= 3), %d states chi > 2 (>= 4), %d states chi < 0.1 (>= 10), "
                           "emission %.3e vs linear %.3e",
                           sp.size(), where.c_str(), bright, dark, em_opt, em_lin)};
  });

  criterion(7, "N=10 spikes at sites 5 and 9", [] {
    const auto prob = make_problem(build_model(resized(PhysicalParams{}, 10)));
    EnsembleOptions o;
    o.count = 101;
    o.jobs = jobs();
    const auto r = run_ensemble(prob, o);
    int good = 0;
    for (int k = 0; k < 10; ++k) {
      const auto sp = spikes(r.runs[k].final_energies, 0.05);
      good += has(sp, 5) && has(sp, 9) ? 1 : 0;
    }
    return Verdict{good >= 6, fmt("%d of top 10 optima spike at 5 and 9 (>= 6); best enhancement %.2f", good,
                                  r.best_enhancement())};
  });

  criterion(8, "loss grid corners", [] {
    EnsembleOptions o;
    o.count = 20;
    o.jobs = jobs();
    const auto r = loss_grid(PhysicalParams{}, {1e-3, 1e-2}, {0.0, 1e-2, 1e-1}, o);
    auto enh = [&](double em, double nr) {
      for (const auto& row : r.rows)
        if (row.coords[0] == em && row.coords[1] == nr) {
          if (!row.error.empty()) throw Error("cell (" + format_number(em) + ", " + format_number(nr) + "): " + row.error);
          return row.values[r.column("enhancement [1]")];
        }
      throw Error("missing cell");
    };
    const double lossless = enh(1e-2, 0.0);
    const double lossy_a = enh(1e-3, 1e-2), lossy_b = enh(1e-2, 1e-1);
    const bool ok = lossless > 1e3 && lossy_a < 2 && lossy_b < 2;
    return Verdict{ok, fmt("gamma_em=1e-2, gamma_nr=0: %.3g (> 1e3); gamma_nr = 10 gamma_em: %.3g at 1e-3/1e-2, "
                           "%.3g at 1e-2/1e-1 (< 2); 20 starts per cell",
                           lossless, lossy_a, lossy_b)};
  });

  criterion(9, "zero-bias crossover", [] {
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(0.005 * k);
    const auto r = zero_bias_study(PhysicalParams{}, {0.0, 1.4e-3}, grid, jobs());
    const double a0 = argmax_along(r, "power [eV^2]", 1, 0.0);
    const double a1 = argmax_along(r, "power [eV^2]", 1, 1.4e-3);
    return Verdict{a0 == 0.0 && a1 > 0.0,
                   fmt("argmax dE = %.3f eV without phonons (expect 0), %.3f eV with gamma_phonon = 1.4e-3 (expect > 0)", a0, a1)};
  });

  criterion(10, "grouped scaling", [] {
    std::vector<double> enh, pw;
    std::string detail;
    for (int n : {20, 40, 60}) {
      EnsembleOptions o;
      o.count = 101;
      o.jobs = jobs();
      const auto r = run_grouped({4, 1, n}, PhysicalParams{}, o);
      enh.push_back(r.best_enhancement());
      pw.push_back(r.best().final_objective);
      detail += fmt("N=%d: enhancement %.1f, power %.3e; ", n, enh.back(), pw.back());
    }
    const bool ok = enh[0] < enh[1] && enh[1] < enh[2] && pw[0] > pw[1] && pw[1] > pw[2];
    return Verdict{ok, detail + "enhancement increasing, power decreasing"};
  });

  criterion(11, "sensitivity ranking", [] {
    const auto m = default_params();
    const auto lin = sensitivity(m, headline.linear_energies);
    const auto opt = sensitivity(m, headline.best().final_energies);
    auto is_environment = [](const std::string& n) {
      return n.find("_ph_") != std::string::npos || n.rfind("Gamma_", 0) == 0 || n.rfind("omega0_", 0) == 0 ||
             n.find("alpha_beta") != std::string::npos || n.find("beta_g") != std::string::npos;
    };
    const double em_lin = std::abs(lin.at("gamma_em").derivative);
    double top_env = 0;
    std::string top_name;
    for (const auto& e : lin.entries)
      if (is_environment(e.name) && std::abs(e.derivative) > top_env) {
        top_env = std::abs(e.derivative);
        top_name = e.name;
      }
    // Normalized by the power of each configuration: dlnP/dln(gamma_em).
    const double norm_lin = em_lin / lin.base_power;
    const double norm_opt = std::abs(opt.at("gamma_em").derivative) / opt.base_power;
    const double spread_lin = lin.richardson_spread();
    const double spread_opt = opt.richardson_spread(true);
    const bool ok = em_lin > top_env && norm_opt < norm_lin && spread_lin < 1e-2 && spread_opt < 1e-2;
    return Verdict{ok, fmt("|dP/dln gamma_em| %.3e > largest phonon/EC %.3e (%s); dlnP/dln gamma_em %.3f linear -> %.3f "
                           "optimized; Richardson %.1e linear, %.1e optimized excluding stationary energies (< 1e-2)",
                           em_lin, top_env, top_name.c_str(), norm_lin, norm_opt, spread_lin, spread_opt)};
  });

  criterion(12, "L-BFGS artifact", [] {
    const auto prob = make_problem(build_model(resized(PhysicalParams{}, 10)));
    std::vector<double> J;
    for (int k = 0; k <= 20; ++k) J.push_back(0.06 + 0.005 * k);
    const auto curve = single_lbfgs_demo(prob, J, {}, jobs());
    double jump = 0, at = 0;
    for (std::size_t k = 1; k < curve.size(); ++k) {
      const double a = curve[k - 1].enhancement, b = curve[k].enhancement;
      const double ratio = std::max(a, b) / std::min(a, b);
      if (ratio > jump) {
        jump = ratio;
        at = 0.5 * (J[k - 1] + J[k]);
      }
    }
    EnsembleOptions o;
    o.count = 101;
    o.jobs = jobs();
    const auto ens = sweep_J(resized(PhysicalParams{}, 10), J, o);
    const int c = ens.column("enhancement [1]");
    double smooth = 0;
    for (std::size_t k = 1; k < ens.rows.size(); ++k) {
      const double a = ens.rows[k - 1].values[c], b = ens.rows[k].values[c];
      smooth = std::max(smooth, std::max(a, b) / std::min(a, b));
    }
    const bool ok = jump > 3.0 && std::abs(at - 0.1) <= 0.02 && smooth < 1.5;
    return Verdict{ok, fmt("largest single-run adjacent ratio %.2f at J = %.4f eV (need > 3 near 0.1); ensemble max "
                           "adjacent ratio %.2f (need < 1.5)",
                           jump, at, smooth)};
  });

  std::printf("%d of %d criteria passed\n", passed, passed + failed);
  return 0;
}
