#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dqedmd::dynamics {

// Two-dimensional benchmark systems. The linear kinds exist for oracle
// tests only and stay off the CLI system list: LinearField is a continuous
// field xdot = A x for integrator checks, LinearMap is the discrete map
// x_{t+1} = A x_t whose operator a DMD fit must reproduce exactly.
struct SystemModel {
  enum class Kind { Pendulum, VanDerPol, LinearField, LinearMap };

  Kind kind = Kind::Pendulum;
  std::string name = "pendulum";
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();

  static SystemModel pendulum();
  static SystemModel vanderpol();
  static SystemModel linear_field(const Eigen::Matrix2d& A);
  static SystemModel linear_map(const Eigen::Matrix2d& A);

  bool discrete() const { return kind == Kind::LinearMap; }
};

struct SimConfig {
  double dt = 0.01;
  int steps = 1000;        // T: transitions per trajectory
  int n_trajectories = 1;  // M
  std::vector<std::array<double, 2>> init_box = {{{-1.0, 1.0}}, {{-1.0, 1.0}}};
  std::uint64_t seed = 1;
};

// M trajectories, each holding T+1 states x_0 .. x_T as columns of a
// 2 x (T+1) matrix.
using TrajectorySet = std::vector<Eigen::MatrixXd>;

Eigen::Vector2d vector_field(const SystemModel& model,
                             const Eigen::Vector2d& x);

// Classical fourth-order Runge-Kutta update. Invalid for the discrete map.
Eigen::Vector2d rk4_step(const SystemModel& model, const Eigen::Vector2d& x,
                         double dt);

// One simulation step: rk4_step for continuous kinds, A x for LinearMap.
Eigen::Vector2d advance(const SystemModel& model, const Eigen::Vector2d& x,
                        double dt);

// Initial conditions i.i.d. uniform on init_box, each trajectory advanced T
// times. Per-trajectory RNG streams derive from (seed, trajectory index) so
// results do not depend on evaluation order.
TrajectorySet simulate_trajectories(const SystemModel& model,
                                    const SimConfig& cfg);

// Concatenated per-trajectory snapshot pairs: columns x_0..x_{T-1} into X
// and x_1..x_T into X'. No pair straddles a trajectory boundary.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_snapshot_pairs(
    const TrajectorySet& set);

}  // namespace dqedmd::dynamics
