#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dqedmd/dynamics.hpp"
#include "dqedmd/edmd.hpp"
#include "dqedmd/quantizer.hpp"
#include "dqedmd/regularized.hpp"
#include "dqedmd/rng.hpp"

using namespace dqedmd;

namespace {

std::vector<quantizer::QuantizerSpec> box_specs(double half_width, int b) {
  return {quantizer::QuantizerSpec::make(-half_width, half_width, b),
          quantizer::QuantizerSpec::make(-half_width, half_width, b)};
}

struct QuantizedPairs {
  Eigen::MatrixXd Phi, PhiPrime, PhiBar, PhiBarPrime;
  double eps = 0.0;
};

// identity-dictionary snapshot pairs from a trajectory set, quantized with a
// fresh dither stream per trajectory
QuantizedPairs quantize_pairs(const dynamics::TrajectorySet& set,
                              double half_width, int b, std::uint64_t seed) {
  const auto specs = box_specs(half_width, b);
  dynamics::TrajectorySet decoded = set;
  for (std::size_t m = 0; m < set.size(); ++m) {
    quantizer::DitherStream dither(rng::derive_seed(seed, m, 1));
    decoded[m] = quantizer::quantize_trajectory(specs, set[m], dither).decoded;
  }
  QuantizedPairs out;
  std::tie(out.Phi, out.PhiPrime) = dynamics::build_snapshot_pairs(set);
  std::tie(out.PhiBar, out.PhiBarPrime) = dynamics::build_snapshot_pairs(decoded);
  out.eps = specs[0].resolution;
  return out;
}

dynamics::TrajectorySet linear_trajectories(int n_traj, int steps,
                                            std::uint64_t seed) {
  Eigen::Matrix2d A;
  A << 0.9, 0.1, 0.0, 0.8;
  dynamics::SimConfig cfg;
  cfg.steps = steps;
  cfg.n_trajectories = n_traj;
  cfg.seed = seed;
  return dynamics::simulate_trajectories(dynamics::SystemModel::linear_map(A),
                                         cfg);
}

double objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& PhiBar,
                 const Eigen::MatrixXd& PhiBarPrime,
                 const regularized::RegularizationParams& params) {
  const double T = static_cast<double>(PhiBar.cols());
  return (PhiBarPrime - A * PhiBar).squaredNorm() / T -
         (A * params.beta).trace() -
         (A.transpose() * A * params.gamma).trace();
}

}  // namespace

TEST_CASE("closed-form regularizer for the identity dictionary") {
  SUBCASE("zero resolution degenerates to the no-op regularizer") {
    const auto params = regularized::dmd_regularizer(0.0, 3);
    CHECK(params.gamma == Eigen::MatrixXd::Zero(3, 3));
    CHECK(params.beta == Eigen::MatrixXd::Zero(3, 3));
  }

  SUBCASE("quarter-resolution worked example") {
    const auto params = regularized::dmd_regularizer(0.25, 2);
    CHECK(params.gamma(0, 0) == doctest::Approx(0.00520833).epsilon(1e-6));
    CHECK(params.gamma(0, 0) == 0.0625 / 12.0);
    CHECK(params.gamma(1, 1) == params.gamma(0, 0));
    CHECK(params.gamma(0, 1) == 0.0);
    CHECK(params.beta == Eigen::MatrixXd::Zero(2, 2));
  }

  SUBCASE("halving the resolution scales gamma by exactly one quarter") {
    for (double eps : {0.25, 0.1375, 1.0, 3.7e-3}) {
      const auto full = regularized::dmd_regularizer(eps, 4);
      const auto half = regularized::dmd_regularizer(eps / 2.0, 4);
      CHECK(4.0 * half.gamma == full.gamma);
    }
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(regularized::dmd_regularizer(-0.1, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(regularized::dmd_regularizer(0.25, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("zero params reduce the recovery to the plain least-squares fit") {
  const auto set = linear_trajectories(5, 40, 11);
  const auto [Phi, PhiPrime] = dynamics::build_snapshot_pairs(set);
  regularized::RegularizationParams params;
  params.beta = Eigen::MatrixXd::Zero(2, 2);
  params.gamma = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd K_star =
      regularized::recover_regularized(Phi, PhiPrime, params);
  const auto [K_plain, report] = edmd::fit_least_squares(Phi, PhiPrime);
  CHECK((K_star - K_plain).norm() <= 1e-10 * K_plain.norm());
}

TEST_CASE("corrected recovery beats the naive quantized fit") {
  Eigen::Matrix2d A;
  A << 0.9, 0.1, 0.0, 0.8;
  const auto set = linear_trajectories(50, 200, 2026);  // T = 10^4

  int wins = 0;
  const int n_seeds = 15;
  for (int s = 0; s < n_seeds; ++s) {
    const auto q =
        quantize_pairs(set, 1.1, 4, rng::derive_seed(909, static_cast<std::uint64_t>(s), 0));
    const auto [K_naive, report] = edmd::fit_least_squares(q.PhiBar, q.PhiBarPrime);
    const Eigen::MatrixXd K_rec = regularized::recover_regularized(
        q.PhiBar, q.PhiBarPrime, regularized::dmd_regularizer(q.eps, 2));
    if ((K_rec - A).norm() < (K_naive - A).norm()) ++wins;
  }
  CHECK(wins >= 13);
}

TEST_CASE("the recovered operator minimizes the regularized objective") {
  const auto set = linear_trajectories(20, 100, 5);
  const auto q = quantize_pairs(set, 1.1, 6, 77);

  regularized::RegularizationParams params = regularized::dmd_regularizer(q.eps, 2);
  // exercise the beta term too; any small matrix keeps S positive definite
  params.beta(0, 1) = 2e-4;
  params.beta(1, 0) = -1e-4;

  const Eigen::MatrixXd K_star =
      regularized::recover_regularized(q.PhiBar, q.PhiBarPrime, params);
  const double base = objective(K_star, q.PhiBar, q.PhiBarPrime, params);

  rng::Stream stream(31);
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXd delta(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) delta(r, c) = stream.uniform(-1.0, 1.0);
    delta *= 1e-3 * K_star.norm() / delta.norm();
    CHECK(base <= objective(K_star + delta, q.PhiBar, q.PhiBarPrime, params));
  }
}

TEST_CASE("recovery refuses a regularizer that destroys definiteness") {
  const auto set = linear_trajectories(5, 40, 21);
  const auto [Phi, PhiPrime] = dynamics::build_snapshot_pairs(set);
  try {
    regularized::recover_regularized(Phi, PhiPrime,
                                     regularized::dmd_regularizer(10.0, 2));
    FAIL("expected a positive-definiteness failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("too coarse") != std::string::npos);
  }
}

TEST_CASE("recovery validates shapes") {
  const Eigen::MatrixXd M2 = Eigen::MatrixXd::Random(2, 30);
  const Eigen::MatrixXd M3 = Eigen::MatrixXd::Random(3, 30);
  regularized::RegularizationParams p2 = regularized::dmd_regularizer(0.1, 2);
  CHECK_THROWS_AS(regularized::recover_regularized(M2, M3, p2),
                  std::invalid_argument);
  CHECK_THROWS_AS(regularized::recover_regularized(M3, M3, p2),
                  std::invalid_argument);
  CHECK_THROWS_AS(regularized::recover_regularized(
                      Eigen::MatrixXd(2, 0), Eigen::MatrixXd(2, 0), p2),
                  std::invalid_argument);
}

TEST_CASE("gram deviation report") {
  SUBCASE("pass-through data deviates only by the predicted inflation term") {
    const Eigen::MatrixXd Phi = Eigen::MatrixXd::Random(2, 50);
    const auto report = regularized::gram_inflation_check(Phi, Phi, 0.25);
    CHECK(report.deviation == Eigen::MatrixXd::Zero(2, 2));
    CHECK(report.expected == 0.0625 / 12.0);
    CHECK(report.max_diag_deviation == report.expected);
    CHECK(report.max_offdiag == 0.0);
  }

  SUBCASE("dithered data matches the predicted inflation at large T") {
    // interior states keep the dither saturation-free, so the error model
    // E[e e^T] = eps^2/12 I applies exactly
    const int T = 100000;
    rng::Stream states(424201);
    Eigen::MatrixXd Phi(2, T);
    for (int t = 0; t < T; ++t) {
      Phi(0, t) = states.uniform(-0.2, 0.2);
      Phi(1, t) = states.uniform(-0.2, 0.2);
    }
    const auto specs = box_specs(1.1, 4);
    quantizer::DitherStream dither(424202);
    const auto rec = quantizer::quantize_trajectory(specs, Phi, dither);
    REQUIRE(rec.saturation_count == 0);

    const double eps = specs[0].resolution;
    const auto report = regularized::gram_inflation_check(Phi, rec.decoded, eps);
    CHECK(report.expected == doctest::Approx(eps * eps / 12.0));
    CHECK(report.max_diag_deviation <= 0.05 * report.expected);
    CHECK(report.max_offdiag <= 0.10 * report.expected);
  }

  SUBCASE("doubling T shrinks the deviation like the central limit theorem") {
    const auto specs = box_specs(1.1, 4);
    const double eps = specs[0].resolution;
    const int T = 20000;
    double sum_small = 0.0, sum_large = 0.0;
    for (int s = 0; s < 20; ++s) {
      for (int scale : {1, 2}) {
        const int n = T * scale;
        rng::Stream states(rng::derive_seed(515, static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(scale)));
        Eigen::MatrixXd Phi(2, n);
        for (int t = 0; t < n; ++t) {
          Phi(0, t) = states.uniform(-0.2, 0.2);
          Phi(1, t) = states.uniform(-0.2, 0.2);
        }
        quantizer::DitherStream dither(rng::derive_seed(
            616, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(scale)));
        const auto rec = quantizer::quantize_trajectory(specs, Phi, dither);
        const auto report =
            regularized::gram_inflation_check(Phi, rec.decoded, eps);
        const double dev =
            std::max(report.max_diag_deviation, report.max_offdiag);
        (scale == 1 ? sum_small : sum_large) += dev;
      }
    }
    const double ratio = sum_small / sum_large;
    CHECK(ratio >= 1.15);
    CHECK(ratio <= 1.75);
  }

  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(regularized::gram_inflation_check(
                        Eigen::MatrixXd::Zero(2, 10),
                        Eigen::MatrixXd::Zero(2, 11), 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(regularized::gram_inflation_check(
                        Eigen::MatrixXd(2, 0), Eigen::MatrixXd(2, 0), 0.1),
                    std::invalid_argument);
  }
}

TEST_CASE("operator perturbation accounting") {
  SUBCASE("pass-through data has no perturbation") {
    const auto set = linear_trajectories(5, 40, 61);
    const auto [Phi, PhiPrime] = dynamics::build_snapshot_pairs(set);
    const auto [K, report] = edmd::fit_least_squares(Phi, PhiPrime);
    const auto d =
        regularized::perturbation_diagnostics(Phi, PhiPrime, Phi, PhiPrime, K, K);
    CHECK(d.phi_eps_norm == 0.0);
    CHECK(d.psi_eps_norm == 0.0);
    CHECK(d.pi_eps_norm == 0.0);
    CHECK(d.k_eps_norm == 0.0);
    CHECK(d.bound_rhs == 0.0);
  }

  SUBCASE("the perturbation identity reproduces the operator gap") {
    const auto set = linear_trajectories(10, 60, 63);
    const auto q = quantize_pairs(set, 1.1, 6, 64);
    const auto [K, r1] = edmd::fit_least_squares(q.Phi, q.PhiPrime);
    const auto [Ktilde, r2] = edmd::fit_least_squares(q.PhiBar, q.PhiBarPrime);

    const Eigen::MatrixXd PhiEps = q.PhiBar - q.Phi;
    const Eigen::MatrixXd PhiEpsPrime = q.PhiBarPrime - q.PhiPrime;
    const Eigen::MatrixXd Psi = PhiEps * q.Phi.transpose() +
                                q.Phi * PhiEps.transpose() +
                                PhiEps * PhiEps.transpose();
    const Eigen::MatrixXd Pi = PhiEpsPrime * q.Phi.transpose() +
                               q.PhiPrime * PhiEps.transpose() +
                               PhiEpsPrime * PhiEps.transpose();
    const Eigen::MatrixXd Gbar = q.PhiBar * q.PhiBar.transpose();
    const Eigen::MatrixXd identity_rhs =
        (Pi - K * Psi) * Gbar.inverse();
    CHECK((Ktilde - K - identity_rhs).norm() <= 1e-8 * K.norm());

    const auto d = regularized::perturbation_diagnostics(
        q.Phi, q.PhiPrime, q.PhiBar, q.PhiBarPrime, K, Ktilde);
    CHECK(d.phi_eps_norm == PhiEps.norm());
    CHECK(d.psi_eps_norm == Psi.norm());
    CHECK(d.pi_eps_norm == Pi.norm());
    CHECK(d.k_eps_norm == (Ktilde - K).norm());
    CHECK(d.bound_rhs ==
          doctest::Approx((Psi.norm() + Pi.norm() / K.norm()) *
                          Gbar.inverse().norm())
              .epsilon(1e-9));
  }

  SUBCASE("the bound holds on pendulum data across word lengths") {
    dynamics::SimConfig cfg;
    cfg.steps = 200;
    cfg.n_trajectories = 10;
    cfg.seed = 303;
    const auto set = dynamics::simulate_trajectories(
        dynamics::SystemModel::pendulum(), cfg);
    const auto [Phi, PhiPrime] = dynamics::build_snapshot_pairs(set);
    const auto [K, report] = edmd::fit_least_squares(Phi, PhiPrime);

    for (int b : {6, 8, 10}) {
      for (std::uint64_t trial = 0; trial < 2; ++trial) {
        const auto q = quantize_pairs(set, 2.0, b,
                                      rng::derive_seed(707, static_cast<std::uint64_t>(b), trial));
        const auto [Ktilde, r2] =
            edmd::fit_least_squares(q.PhiBar, q.PhiBarPrime);
        const auto d = regularized::perturbation_diagnostics(
            q.Phi, q.PhiPrime, q.PhiBar, q.PhiBarPrime, K, Ktilde);
        CHECK(d.k_eps_norm / K.norm() <= d.bound_rhs * (1.0 + 1e-6));
      }
    }
  }

  SUBCASE("the operator gap follows the resolution") {
    // short records keep the per-path dither term dominant over the
    // quadratic Gram bias, so the gap tracks eps roughly linearly
    dynamics::SimConfig cfg;
    cfg.steps = 40;
    cfg.n_trajectories = 5;
    cfg.seed = 404;
    const auto set = dynamics::simulate_trajectories(
        dynamics::SystemModel::pendulum(), cfg);
    const auto [Phi, PhiPrime] = dynamics::build_snapshot_pairs(set);
    const auto [K, report] = edmd::fit_least_squares(Phi, PhiPrime);

    std::vector<std::pair<double, double>> pairs;
    for (int b = 4; b <= 12; ++b) {
      std::vector<double> gaps;
      double eps = 0.0;
      for (std::uint64_t trial = 0; trial < 5; ++trial) {
        const auto q = quantize_pairs(set, 2.0, b,
                                      rng::derive_seed(808, static_cast<std::uint64_t>(b), trial));
        eps = q.eps;
        const auto [Ktilde, r2] =
            edmd::fit_least_squares(q.PhiBar, q.PhiBarPrime);
        gaps.push_back((Ktilde - K).norm());
      }
      std::sort(gaps.begin(), gaps.end());
      pairs.emplace_back(eps, gaps[2]);
    }
    const double slope = regularized::loglog_slope(pairs);
    CHECK(slope >= 0.7);
    CHECK(slope <= 1.5);
  }

  SUBCASE("rank deficiency is detected") {
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Random(2, 30);
    Eigen::MatrixXd PhiBar = Phi;
    PhiBar.row(1) = PhiBar.row(0);  // quantized lifts collapse to rank 1
    const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(
        regularized::perturbation_diagnostics(Phi, Phi, PhiBar, PhiBar, K, K),
        std::runtime_error);
  }

  SUBCASE("operator shape mismatch is rejected") {
    const Eigen::MatrixXd Phi = Eigen::MatrixXd::Random(2, 30);
    CHECK_THROWS_AS(
        regularized::perturbation_diagnostics(Phi, Phi, Phi, Phi,
                                              Eigen::MatrixXd::Identity(3, 3),
                                              Eigen::MatrixXd::Identity(3, 3)),
        std::invalid_argument);
  }
}

TEST_CASE("log-log slope estimation") {
  SUBCASE("exact power laws") {
    std::vector<std::pair<double, double>> linear, quadratic;
    for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
      linear.emplace_back(eps, 3.0 * eps);
      quadratic.emplace_back(eps, 0.7 * eps * eps);
    }
    CHECK(regularized::loglog_slope(linear) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(regularized::loglog_slope(quadratic) ==
          doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("multiplicative noise perturbs the slope only mildly") {
    rng::Stream stream(99);
    std::vector<std::pair<double, double>> pairs;
    for (int b = 2; b <= 10; ++b) {
      const double eps = std::ldexp(2.0, -b);
      pairs.emplace_back(eps, 1.7 * eps * (1.0 + stream.uniform(-0.05, 0.05)));
    }
    const double slope = regularized::loglog_slope(pairs);
    CHECK(slope >= 0.9);
    CHECK(slope <= 1.1);
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(regularized::loglog_slope({{0.5, 1.0}, {0.25, 0.5}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        regularized::loglog_slope({{0.5, 1.0}, {0.25, 0.5}, {0.125, 0.0}}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        regularized::loglog_slope({{0.5, 1.0}, {0.5, 0.5}, {0.5, 0.25}}),
        std::invalid_argument);
  }
}
