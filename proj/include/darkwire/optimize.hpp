#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "darkwire/minimize.hpp"
#include "darkwire/observables.hpp"
#include "darkwire/parallel.hpp"

namespace darkwire {

enum class Objective { power, current };
enum class Method { nelder_mead, quasi_newton, sequential, single_lbfgs };

inline std::string to_string(Objective o) { return o == Objective::power ? "power" : "current"; }

inline std::string to_string(Method m) {
  switch (m) {
    case Method::nelder_mead: return "nelder-mead";
    case Method::quasi_newton: return "bfgs";
    case Method::sequential: return "sequential";
    case Method::single_lbfgs: return "lbfgs";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "nelder-mead" || s == "nm") return Method::nelder_mead;
  if (s == "bfgs" || s == "quasi-newton") return Method::quasi_newton;
  if (s == "sequential") return Method::sequential;
  if (s == "lbfgs") return Method::single_lbfgs;
  throw Error("unknown method '" + s + "'");
}

/// Affine map from free parameters to the full on-site energy vector:
/// energies = offset, then energies[t] += x[p] for every t in targets[p].
struct EnergyMap {
  std::vector<double> offset;
  std::vector<std::vector<int>> targets;

  int n_free() const { return static_cast<int>(targets.size()); }

  std::vector<double> apply(const Eigen::VectorXd& x) const {
    std::vector<double> e = offset;
    for (int p = 0; p < n_free(); ++p)
      for (int t : targets[p]) e[t] += x[p];
    return e;
  }
};

struct OptProblem {
  ModelParams base;  // its chain energies are the linear reference
  EnergyMap map;
  Eigen::VectorXd x_linear;
  Objective objective = Objective::power;
  double bound = 1.0;  // eV, box half-width around x_linear
  double fast_ec_rate = default_fast_ec_rate;  // current objective only
};

/// Free energies are sites 2..N-1 (first and last fixed) unless given (0-based).
inline OptProblem make_problem(const ModelParams& base, Objective objective = Objective::power,
                               std::optional<std::vector<int>> free_sites = std::nullopt) {
  const int n = base.n_sites();
  std::vector<int> free;
  if (free_sites) {
    free = *free_sites;
  } else {
    for (int i = 1; i + 1 < n; ++i) free.push_back(i);
  }
  OptProblem prob;
  prob.base = base;
  prob.objective = objective;
  prob.map.offset = base.chain.onsite_energies;
  prob.x_linear.resize(static_cast<int>(free.size()));
  for (std::size_t p = 0; p < free.size(); ++p) {
    if (free[p] < 0 || free[p] >= n) throw Error("free site index out of range");
    prob.map.offset[free[p]] = 0.0;
    prob.map.targets.push_back({free[p]});
    prob.x_linear[static_cast<int>(p)] = base.chain.onsite_energies[free[p]];
  }
  return prob;
}

/// Transport objective for a full energy vector. Throws on evaluation failure.
inline double objective_value(const ModelParams& model, Objective objective, const std::vector<double>& energies) {
  ChainSpec chain = model.chain;
  chain.onsite_energies = energies;
  const auto basis = diagonalize(chain);
  if (objective == Objective::power) return PowerScan(model, basis).evaluate().power;
  return steady_current(model, basis);
}

/// Callable objective over the free parameters of a problem. Points outside
/// the box or failing to evaluate score -inf.
class ObjectiveFn {
 public:
  explicit ObjectiveFn(const OptProblem& prob)
      : prob_(prob), model_(prob.objective == Objective::current ? current_setup(prob.base, prob.fast_ec_rate) : prob.base) {}

  double operator()(const Eigen::VectorXd& x) const {
    if (((x - prob_.x_linear).cwiseAbs().array() > prob_.bound).any()) return -inf();
    try {
      const double v = objective_value(model_, prob_.objective, prob_.map.apply(x));
      return std::isfinite(v) ? v : -inf();
    } catch (const Error&) {
      ++failures_;
      return -inf();
    }
  }

  double at_energies(const std::vector<double>& e) const { return objective_value(model_, prob_.objective, e); }
  int failures() const { return failures_; }
  const ModelParams& model() const { return model_; }

 private:
  static double inf() { return std::numeric_limits<double>::infinity(); }
  const OptProblem& prob_;
  ModelParams model_;
  mutable int failures_ = 0;
};

struct OptRun {
  int start_index = 0;
  std::uint64_t seed = 0;
  Method method = Method::sequential;
  std::vector<double> start_energies;
  std::vector<double> final_energies;
  double start_objective = 0.0;
  double final_objective = 0.0;
  std::vector<minimize::TracePoint> trace;  // best objective so far (maximized)
  int evaluations = 0;
  int failed_evaluations = 0;
  std::string error;
};

struct LocalOptions {
  int max_evaluations = 5000;  // per algorithm stage
  minimize::Options tuning{};
};

/// Maximizes the objective from `start` (free-parameter vector).
inline OptRun run_local(const OptProblem& prob, const Eigen::VectorXd& start, Method method,
                        const LocalOptions& opts = {}) {
  ObjectiveFn fn(prob);
  OptRun run;
  run.method = method;
  run.start_energies = prob.map.apply(start);
  run.start_objective = fn(start);
  if (!std::isfinite(run.start_objective)) {
    run.error = "objective not evaluable at start";
    run.final_energies = run.start_energies;
    run.final_objective = run.start_objective;
    return run;
  }
  // Minimize -objective / |objective(start)| so step sizes are scale-free.
  const double scale = run.start_objective != 0.0 ? std::abs(run.start_objective) : 1.0;
  auto neg = [&](const Eigen::VectorXd& x) { return -fn(x) / scale; };
  minimize::Options o = opts.tuning;
  o.max_evaluations = opts.max_evaluations;

  Eigen::VectorXd x = start;
  double best = -1.0 * run.start_objective / scale;
  int it_offset = 0;
  auto absorb = [&](const minimize::Result& r) {
    for (const auto& tp : r.trace) run.trace.push_back({tp.iteration + it_offset, -tp.value * scale});
    it_offset += r.iterations + 1;
    run.evaluations += r.evaluations;
    if (r.value <= best) {
      best = r.value;
      x = r.x;
    }
  };
  switch (method) {
    case Method::nelder_mead: absorb(minimize::nelder_mead(neg, x, o)); break;
    case Method::quasi_newton: absorb(minimize::bfgs(neg, x, o)); break;
    case Method::single_lbfgs: absorb(minimize::lbfgs(neg, x, o)); break;
    case Method::sequential:
      absorb(minimize::nelder_mead(neg, x, o));
      absorb(minimize::bfgs(neg, x, o));
      break;
  }
  // Best-so-far is monotone by construction; enforce across stage boundaries.
  for (std::size_t k = 1; k < run.trace.size(); ++k)
    run.trace[k].value = std::max(run.trace[k].value, run.trace[k - 1].value);
  run.final_energies = prob.map.apply(x);
  run.final_objective = -best * scale;
  run.failed_evaluations = fn.failures();
  return run;
}

// ---------------------------------------------------------------------------
// Ensembles

/// Deterministic uniform [0, 1) from a 64-bit engine, independent of the
/// standard library's distribution implementation.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline constexpr double start_noise = 0.01;  // eV

/// First start is the linear configuration; the rest add independent
/// uniform[-0.01, 0.01] eV noise to every free parameter. Starts for a
/// smaller count are a prefix of those for a larger one.
inline std::vector<Eigen::VectorXd> perturbed_starts(const OptProblem& prob, int count, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> starts;
  if (count < 1) throw Error("perturbed_starts: count must be >= 1");
  std::mt19937_64 rng(seed);
  starts.push_back(prob.x_linear);
  for (int k = 1; k < count; ++k) {
    Eigen::VectorXd x = prob.x_linear;
    for (int i = 0; i < x.size(); ++i) x[i] += start_noise * (2.0 * unit_uniform(rng) - 1.0);
    starts.push_back(std::move(x));
  }
  return starts;
}

struct EnsembleResult {
  double linear_objective = 0.0;
  std::vector<double> linear_energies;
  std::vector<OptRun> runs;  // ranked, best first

  const OptRun& best() const {
    if (runs.empty()) throw Error("empty ensemble");
    return runs.front();
  }
  double best_enhancement() const { return enhancement(best().final_objective, linear_objective); }
  int failures() const {
    return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const OptRun& r) { return !r.error.empty(); }));
  }
};

struct EnsembleOptions {
  int count = 101;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::sequential};
  int jobs = 1;
  LocalOptions local{};
};

inline void rank_runs(std::vector<OptRun>& runs) {
  std::stable_sort(runs.begin(), runs.end(), [](const OptRun& a, const OptRun& b) {
    const bool fa = std::isfinite(a.final_objective), fb = std::isfinite(b.final_objective);
    if (fa != fb) return fa;
    return a.final_objective > b.final_objective;
  });
}

inline EnsembleResult run_ensemble(const OptProblem& prob, const EnsembleOptions& opts) {
  const auto starts = perturbed_starts(prob, opts.count, opts.seed);
  const int n_methods = static_cast<int>(opts.methods.size());
  const int n_tasks = static_cast<int>(starts.size()) * n_methods;

  EnsembleResult out;
  out.linear_energies = prob.map.apply(prob.x_linear);
  out.linear_objective = ObjectiveFn(prob).at_energies(out.linear_energies);
  out.runs.resize(n_tasks);
  parallel_for(n_tasks, opts.jobs, [&](int t) {
    const int s = t / n_methods;
    const Method m = opts.methods[t % n_methods];
    OptRun run;
    try {
      run = run_local(prob, starts[s], m, opts.local);
    } catch (const std::exception& e) {
      run.method = m;
      run.error = e.what();
      run.start_energies = prob.map.apply(starts[s]);
      run.final_objective = -std::numeric_limits<double>::infinity();
    }
    run.start_index = s;
    run.seed = opts.seed;
    out.runs[t] = std::move(run);
  });
  rank_runs(out.runs);
  return out;
}

// ---------------------------------------------------------------------------
// Grouped optimization

struct GroupProblem {
  int n_group = 4;
  int n_edge = 1;
  int n_sites = 20;
};

/// Chain lengths whose interior tiles exactly with the group.
inline std::vector<int> valid_group_lengths(const GroupProblem& gp, int up_to) {
  std::vector<int> ok;
  for (int n = 2 + 2 * gp.n_edge + gp.n_group; n <= up_to; n += gp.n_group) ok.push_back(n);
  return ok;
}

/// Base parameters for a grouped chain of n_sites: the last site energy is
/// kept and the per-site optical rate becomes (20/N) gamma_em.
inline PhysicalParams grouped_physical(PhysicalParams base, int n_sites) {
  base.onsite_energies.reset();
  base.positions.reset();
  base = resized(base, n_sites);
  base.scale_gamma_em = true;
  return base;
}

/// Sites 1 and N fixed; n_edge sites at each end free; the block between
/// them is one group of n_group free energies repeated down the chain with
/// an offset of -n_group * dE per copy.
inline OptProblem make_grouped_problem(const GroupProblem& gp, const PhysicalParams& physical,
                                       Objective objective = Objective::power) {
  const int n = gp.n_sites;
  const int interior = n - 2 - 2 * gp.n_edge;
  if (gp.n_group < 1 || gp.n_edge < 0 || interior < gp.n_group || interior % gp.n_group != 0) {
    std::string lens;
    for (int v : valid_group_lengths(gp, 100)) lens += (lens.empty() ? "" : ", ") + std::to_string(v);
    throw Error("group of " + std::to_string(gp.n_group) + " does not tile the interior of N=" + std::to_string(n) +
                "; valid N: " + lens);
  }
  const PhysicalParams p = grouped_physical(physical, n);
  const ModelParams base = build_model(p);
  const auto& lin = base.chain.onsite_energies;

  OptProblem prob;
  prob.base = base;
  prob.objective = objective;
  prob.map.offset.assign(lin.begin(), lin.end());
  std::vector<double> x;
  auto free_site = [&](int site) {
    prob.map.offset[site] = 0.0;
    prob.map.targets.push_back({site});
    x.push_back(lin[site]);
  };
  for (int k = 1; k <= gp.n_edge; ++k) free_site(k);
  for (int k = 1; k <= gp.n_edge; ++k) free_site(n - 1 - k);
  const int first = 1 + gp.n_edge;
  const int copies = interior / gp.n_group;
  for (int r = 0; r < gp.n_group; ++r) {
    std::vector<int> sites;
    for (int c = 0; c < copies; ++c) {
      const int site = first + c * gp.n_group + r;
      sites.push_back(site);
      prob.map.offset[site] = -c * gp.n_group * p.delta_e;
    }
    prob.map.targets.push_back(sites);
    x.push_back(lin[first + r]);
  }
  prob.x_linear = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<int>(x.size()));
  return prob;
}

inline EnsembleResult run_grouped(const GroupProblem& gp, const PhysicalParams& physical,
                                  const EnsembleOptions& opts, Objective objective = Objective::power) {
  return run_ensemble(make_grouped_problem(gp, physical, objective), opts);
}

// ---------------------------------------------------------------------------
// Single-run gradient demonstration

struct CurvePoint {
  double J = 0.0;
  double linear_objective = 0.0;
  double optimized_objective = 0.0;
  double enhancement = 0.0;
  std::vector<double> energies;
};

/// One L-BFGS run from the clean linear start at every J.
inline std::vector<CurvePoint> single_lbfgs_demo(const OptProblem& prob, const std::vector<double>& J_values,
                                                 const LocalOptions& opts = {}, int jobs = 1) {
  std::vector<CurvePoint> curve(J_values.size());
  parallel_for(static_cast<int>(J_values.size()), jobs, [&](int k) {
    OptProblem pj = prob;
    set_coupling_constant(pj.base.chain.coupling, J_values[k]);
    const auto run = run_local(pj, pj.x_linear, Method::single_lbfgs, opts);
    CurvePoint& c = curve[k];
    c.J = J_values[k];
    c.linear_objective = run.start_objective;
    c.optimized_objective = run.final_objective;
    c.enhancement = enhancement(run.final_objective, run.start_objective);
    c.energies = run.final_energies;
  });
  return curve;
}

}  // namespace darkwire
