#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

#include "darkwire/model.hpp"

namespace darkwire {

/// Single-excitation Hamiltonian on the (N+3)-state basis (sites, g, alpha, beta).
struct SystemHamiltonian {
  int n_sites = 0;
  Eigen::MatrixXd matrix;

  int dim() const { return n_sites + 3; }
  Eigen::Ref<const Eigen::MatrixXd> chain_block() const { return matrix.topLeftCorner(n_sites, n_sites); }
};

inline SystemHamiltonian build_hamiltonian(const ChainSpec& spec) {
  const int n = spec.n_sites();
  SystemHamiltonian h{n, Eigen::MatrixXd::Zero(n + 3, n + 3)};
  for (int j = 0; j < n; ++j) h.matrix(j, j) = spec.onsite_energies[j];
  h.matrix(n, n) = spec.eps_g;
  h.matrix(n + 1, n + 1) = spec.eps_alpha;
  h.matrix(n + 2, n + 2) = spec.eps_beta;

  if (const auto* nn = std::get_if<NearestNeighbor>(&spec.coupling)) {
    for (int j = 0; j + 1 < n; ++j) {
      h.matrix(j, j + 1) = nn->J / 2.0;
      h.matrix(j + 1, j) = nn->J / 2.0;
    }
  } else {
    const auto& dd = std::get<DistanceDependent>(spec.coupling);
    if (static_cast<int>(dd.positions.size()) != n) throw Error("distance-dependent coupling needs N positions");
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double r2 = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double d = dd.positions[i][k] - dd.positions[j][k];
          r2 += d * d;
        }
        if (r2 == 0.0)
          throw Error("sites " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " coincide");
        const double r = std::sqrt(r2);
        const double v = dd.J / (2.0 * r * r * r);
        h.matrix(i, j) = v;
        h.matrix(j, i) = v;
      }
    }
  }
  return h;
}

/// Eigenstates of the system Hamiltonian. Columns 0..N-1 are chain
/// eigenstates in ascending energy; columns N, N+1, N+2 are g, alpha, beta.
struct EigenBasis {
  int n_sites = 0;
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // vectors(label, state)

  int dim() const { return n_sites + 3; }
  int ground() const { return n_sites; }
  int alpha() const { return n_sites + 1; }
  int beta() const { return n_sites + 2; }

  /// <phi_n | i> for chain state n and site i.
  double overlap(int n, int i) const { return vectors(i, n); }
  Eigen::Ref<const Eigen::MatrixXd> chain_vectors() const { return vectors.topLeftCorner(n_sites, n_sites); }
};

inline EigenBasis diagonalize(const SystemHamiltonian& h) {
  const int n = h.n_sites;
  const Eigen::MatrixXd block = h.chain_block();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
  if (solver.info() != Eigen::Success) throw Error("eigensolver did not converge");

  Eigen::MatrixXd vecs = solver.eigenvectors();
  const Eigen::VectorXd vals = solver.eigenvalues();

  // Fix signs: the largest-magnitude component (lowest site on ties) is positive.
  std::vector<int> peak(n);
  for (int k = 0; k < n; ++k) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(vecs(i, k)) > std::abs(vecs(best, k)) + 1e-12) best = i;
    peak[k] = best;
    if (vecs(best, k) < 0) vecs.col(k) *= -1.0;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(vals[a] - vals[b]) > 1e-12 * scale) return vals[a] < vals[b];
    const double ca = std::abs(vecs(0, a)), cb = std::abs(vecs(0, b));
    if (std::abs(ca - cb) > 1e-12) return ca > cb;
    return peak[a] < peak[b];
  });

  EigenBasis basis;
  basis.n_sites = n;
  basis.energies.resize(n + 3);
  basis.vectors = Eigen::MatrixXd::Zero(n + 3, n + 3);
  for (int k = 0; k < n; ++k) {
    basis.energies[k] = vals[order[k]];
    basis.vectors.block(0, k, n, 1) = vecs.col(order[k]);
  }
  for (int k = n; k < n + 3; ++k) {
    basis.energies[k] = h.matrix(k, k);
    basis.vectors(k, k) = 1.0;
  }
  return basis;
}

inline EigenBasis diagonalize(const ChainSpec& spec) { return diagonalize(build_hamiltonian(spec)); }

/// 1 / sum_i |<phi_n|i>|^4 over chain sites.
inline double participation_ratio(const EigenBasis& basis, int n) {
  if (n < 0 || n >= basis.n_sites) throw Error("participation_ratio: state index out of range");
  double s = 0.0;
  for (int i = 0; i < basis.n_sites; ++i) {
    const double c2 = basis.overlap(n, i) * basis.overlap(n, i);
    s += c2 * c2;
  }
  return 1.0 / s;
}

inline double mean_participation_ratio(const EigenBasis& basis) {
  double s = 0.0;
  for (int n = 0; n < basis.n_sites; ++n) s += participation_ratio(basis, n);
  return s / basis.n_sites;
}

}  // namespace darkwire
