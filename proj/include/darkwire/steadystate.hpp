#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "darkwire/environment.hpp"

namespace darkwire {

/// Eigenstate populations: chain states 0..N-1, then g, alpha, beta.
struct Populations {
  Eigen::VectorXd p;
  double residual = 0.0;  // ||L p||_inf before clamping
};

namespace detail {

/// Strongly connected components of the directed graph with edge m -> n
/// whenever W(n, m) > 0 (Tarjan, iterative).
inline std::vector<int> scc_labels(const Eigen::MatrixXd& W, int& n_components) {
  const int d = static_cast<int>(W.rows());
  std::vector<int> index(d, -1), low(d, 0), comp(d, -1), stack;
  std::vector<bool> on_stack(d, false);
  int counter = 0;
  n_components = 0;
  struct Frame {
    int v;
    int next;
  };
  for (int root = 0; root < d; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const int v = f.v;
      bool descended = false;
      while (f.next < d) {
        const int w = f.next++;
        if (w == v || !(W(w, v) > 0.0)) continue;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = n_components;
        } while (w != v);
        ++n_components;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  return comp;
}

inline std::string state_name(int k, int n_sites) {
  if (k < n_sites) return "phi_" + std::to_string(k + 1);
  if (k == n_sites) return "g";
  return k == n_sites + 1 ? "alpha" : "beta";
}

}  // namespace detail

/// Checks that the population flow has a single trapping class and that it
/// contains g; otherwise the steady state is not unique (or bypasses g).
inline void check_connectivity(const Eigen::MatrixXd& W, int n_sites) {
  const int d = static_cast<int>(W.rows());
  int nc = 0;
  const auto comp = detail::scc_labels(W, nc);
  std::vector<bool> closed(nc, true);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      if (n != m && W(n, m) > 0.0 && comp[n] != comp[m]) closed[comp[m]] = false;
  const int gc = comp[n_sites];
  int n_closed = 0;
  for (int c = 0; c < nc; ++c) n_closed += closed[c] ? 1 : 0;
  if (n_closed == 1 && closed[gc]) return;

  std::ostringstream msg;
  msg << "disconnected state space: population trapped away from g in {";
  bool first = true;
  for (int k = 0; k < d; ++k) {
    if (closed[comp[k]] && comp[k] != gc) {
      msg << (first ? "" : ", ") << detail::state_name(k, n_sites);
      first = false;
    }
  }
  msg << "}";
  throw Error(msg.str());
}

/// Solves L p = 0 with sum(p) = 1 by replacing the ground-state row of L by
/// the normalisation constraint.
inline Populations steady_state_of(const Eigen::MatrixXd& W, int n_sites, bool check = true) {
  if (check) check_connectivity(W, n_sites);
  const Eigen::MatrixXd L = generator_from_rates(W);
  const int d = static_cast<int>(L.rows());
  Eigen::MatrixXd A = L;
  A.row(n_sites).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  b[n_sites] = 1.0;
  Populations out;
  out.p = A.fullPivLu().solve(b);
  out.residual = (L * out.p).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, out.p.cwiseAbs().maxCoeff());
  if (out.p.minCoeff() < -1e-12 * scale) {
    throw Error("steady state has negative populations (min " + std::to_string(out.p.minCoeff()) + ")");
  }
  out.p = out.p.cwiseMax(0.0);
  out.p /= out.p.sum();
  return out;
}

inline Populations steady_state(const RateModel& rm) { return steady_state_of(rm.W, rm.n_sites); }

/// Propagates dP/dt = L P to t_final with the exact propagator exp(L t),
/// built by Taylor expansion on a short interval and repeated squaring.
/// Column-stochastic at every stage, so norm and positivity are preserved
/// independently of stiffness.
inline Populations evolve(const RateModel& rm, const Populations& p0, double t_final) {
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw Error("evolve: t_final must be finite and >= 0");
  const Eigen::MatrixXd& L = rm.L;
  const double exit_max = (-L.diagonal()).maxCoeff();
  Populations out{p0.p, 0.0};
  if (t_final == 0.0 || exit_max <= 0.0) {
    out.residual = (L * out.p).cwiseAbs().maxCoeff();
    return out;
  }
  int squarings = 0;
  double h = t_final;
  while (exit_max * h > 0.25) {
    h *= 0.5;
    ++squarings;
  }
  if (h == 0.0 || !std::isfinite(h)) throw Error("evolve: step size underflow");

  const int d = static_cast<int>(L.rows());
  const Eigen::MatrixXd Lh = L * h;
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  for (int k = 1; k < 30; ++k) {
    term = term * Lh / static_cast<double>(k);
    K += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  auto clean = [](Eigen::MatrixXd& M) {
    M = M.cwiseMax(0.0);
    const Eigen::RowVectorXd cs = M.colwise().sum();
    for (int c = 0; c < M.cols(); ++c) M.col(c) /= cs[c];
  };
  clean(K);
  for (int s = 0; s < squarings; ++s) {
    K = K * K;
    clean(K);
  }
  out.p = K * p0.p;
  out.p = out.p.cwiseMax(0.0);
  out.p /= out.p.sum();
  out.residual = (L * out.p).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace darkwire
