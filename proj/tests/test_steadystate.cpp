#include <gtest/gtest.h>

#include <random>

#include "darkwire/steadystate.hpp"

using namespace darkwire;

namespace {

RateModel from_rates(const Eigen::MatrixXd& W, int n_sites) {
  RateModel rm;
  rm.n_sites = n_sites;
  rm.W = W;
  rm.W.diagonal().setZero();
  rm.L = generator_from_rates(rm.W);
  return rm;
}

/// Classical fourth-order Runge-Kutta with a fixed step.
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

/// Dormand-Prince 5(4) with step control on the max-norm local error.
Eigen::VectorXd dormand_prince(const Eigen::MatrixXd& L, Eigen::VectorXd y, double t_end, double tol) {
  const double a[7][6] = {{},
                          {1. / 5},
                          {3. / 40, 9. / 40},
                          {44. / 45, -56. / 15, 32. / 9},
                          {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
                          {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
                          {35. / 384, 0, 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84}};
  const double e[7] = {71. / 57600, 0, -71. / 16695, 71. / 1920, -17253. / 339200, 22. / 525, -1. / 40};
  double t = 0, h = 1e-3 * t_end;
  std::vector<Eigen::VectorXd> k(7);
  while (t < t_end) {
    h = std::min(h, t_end - t);
    k[0] = L * y;
    for (int s = 1; s < 7; ++s) {
      Eigen::VectorXd ys = y;
      for (int j = 0; j < s; ++j) ys += h * a[s][j] * k[j];
      k[s] = L * ys;
    }
    Eigen::VectorXd next = y, err = Eigen::VectorXd::Zero(y.size());
    for (int j = 0; j < 6; ++j) next += h * a[6][j] * k[j];
    for (int j = 0; j < 7; ++j) err += h * e[j] * k[j];
    const double ratio = err.cwiseAbs().maxCoeff() / tol;
    if (ratio <= 1.0) {
      t += h;
      y = next;
    }
    h *= std::clamp(0.9 * std::pow(std::max(ratio, 1e-10), -0.2), 0.2, 5.0);
  }
  return y;
}

Eigen::MatrixXd random_rates(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::MatrixXd W(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) W(i, j) = i == j ? 0.0 : u(rng);
  return W;
}

}  // namespace

TEST(SteadyState, GibbsForDetailedBalance) {
  const Eigen::VectorXd e = (Eigen::VectorXd(5) << 0.3, 0.1, 0.0, 0.25, 0.05).finished();
  const double kT = 0.07;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(5, 5);
  for (int m = 0; m < 5; ++m)
    for (int n = m + 1; n < 5; ++n) {
      const double k = u(rng);
      W(n, m) = k * std::exp(-(e[n] - e[m]) / (2 * kT));
      W(m, n) = k * std::exp(-(e[m] - e[n]) / (2 * kT));
    }
  const auto pop = steady_state_of(W, 2);
  Eigen::VectorXd boltz = (-e / kT).array().exp();
  boltz /= boltz.sum();
  EXPECT_LT((pop.p - boltz).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(pop.residual, 1e-14);
}

TEST(SteadyState, CycleHasInverseRateOccupation) {
  // One site; one-way cycle site -> alpha -> beta -> g -> site. p_k is proportional to 1 / (exit rate of k).
  const std::array<double, 4> exit = {3.0, 0.5, 1.7, 0.2};
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
  W(2, 0) = exit[0];
  W(3, 2) = exit[2];
  W(1, 3) = exit[3];
  W(0, 1) = exit[1];
  const auto pop = steady_state_of(W, 1);
  double z = 0;
  for (double r : exit) z += 1.0 / r;
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(pop.p[k], 1.0 / exit[k] / z, 1e-15);
}

TEST(SteadyState, RandomGeneratorIsStationary) {
  const auto rm = from_rates(random_rates(9, 4), 6);
  const auto pop = steady_state(rm);
  EXPECT_NEAR(pop.p.sum(), 1.0, 1e-15);
  EXPECT_LT((rm.L * pop.p).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(pop.p.minCoeff(), 0.0);
}

TEST(SteadyState, DisconnectedSpaceThrows) {
  Eigen::MatrixXd W = random_rates(6, 2);
  W.col(4).setZero();  // alpha has no exit
  W(4, 3) = 0.0;
  try {
    steady_state_of(W, 3);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
  Eigen::MatrixXd W2 = random_rates(6, 2);
  W2.row(0).setZero();  // phi_1 unreachable but transient: still a single closed class
  EXPECT_NO_THROW(steady_state_of(W2, 3));
}

TEST(Evolve, MatchesRungeKutta) {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const auto rm = from_rates(random_rates(7, seed), 4);
    Populations p0;
    p0.p = Eigen::VectorXd::Zero(7);
    p0.p[4] = 1.0;
    for (double t : {0.3, 2.0, 5.0}) {
      const auto p = evolve(rm, p0, t);
      const Eigen::VectorXd ref = rk4(rm.L, p0.p, t, 20000);
      EXPECT_LT((p.p - ref).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed << " t " << t;
    }
  }
}

TEST(Evolve, RelaxesToSteadyState) {
  const auto rm = from_rates(random_rates(7, 3), 4);
  Populations p0;
  p0.p = Eigen::VectorXd::Zero(7);
  p0.p[4] = 1.0;
  const auto late = evolve(rm, p0, 200.0);
  EXPECT_LT((late.p - steady_state(rm).p).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(evolve(rm, p0, -1.0), Error);
  EXPECT_EQ(evolve(rm, p0, 0.0).p, p0.p);
}

TEST(SteadyState, DefaultChainMatchesLongTimeIntegration) {
  const auto m = with_gamma_ab(default_params(), 2.58e-5);
  const auto basis = diagonalize(m.chain);
  const auto rm = assemble_rates(m, basis);
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(23);
  p0[20] = 1.0;
  const Eigen::VectorXd late = dormand_prince(rm.L, p0, 1e6 / rm.W.maxCoeff(), 1e-12);
  const auto pop = steady_state(rm);
  EXPECT_LT((late - pop.p).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(pop.residual, 1e-12);
}

TEST(Evolve, DefaultChainStaysNormalised) {
  const auto m = with_gamma_ab(default_params(), 1e-4);
  const auto basis = diagonalize(m.chain);
  const auto rm = assemble_rates(m, basis);
  Populations p0;
  p0.p = Eigen::VectorXd::Zero(23);
  p0.p[20] = 1.0;
  const auto p = evolve(rm, p0, 1e6);
  EXPECT_NEAR(p.p.sum(), 1.0, 1e-12);
  EXPECT_LT((p.p - steady_state(rm).p).cwiseAbs().maxCoeff(), 1e-8);
  const double t = 3000.0;
  const Eigen::VectorXd ref = dormand_prince(rm.L, p0.p, t, 1e-13);
  EXPECT_LT((evolve(rm, p0, t).p - ref).cwiseAbs().maxCoeff(), 1e-10);
}
