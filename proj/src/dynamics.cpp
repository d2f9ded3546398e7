#include "dqedmd/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "dqedmd/rng.hpp"

namespace dqedmd::dynamics {

SystemModel SystemModel::pendulum() {
  SystemModel m;
  m.kind = Kind::Pendulum;
  m.name = "pendulum";
  return m;
}

SystemModel SystemModel::vanderpol() {
  SystemModel m;
  m.kind = Kind::VanDerPol;
  m.name = "vanderpol";
  return m;
}

SystemModel SystemModel::linear_field(const Eigen::Matrix2d& A) {
  SystemModel m;
  m.kind = Kind::LinearField;
  m.name = "linear_field";
  m.A = A;
  return m;
}

SystemModel SystemModel::linear_map(const Eigen::Matrix2d& A) {
  SystemModel m;
  m.kind = Kind::LinearMap;
  m.name = "linear_map";
  m.A = A;
  return m;
}

Eigen::Vector2d vector_field(const SystemModel& model,
                             const Eigen::Vector2d& x) {
  switch (model.kind) {
    case SystemModel::Kind::Pendulum:
      // pendulum with a small destabilizing velocity term
      return {x[1], 0.01 * x[1] - std::sin(x[0])};
    case SystemModel::Kind::VanDerPol:
      return {x[1], (1.0 - x[0] * x[0]) * x[1] - x[0]};
    case SystemModel::Kind::LinearField:
      return model.A * x;
    case SystemModel::Kind::LinearMap:
      break;
  }
  throw std::logic_error("vector_field: discrete map has no vector field");
}

Eigen::Vector2d rk4_step(const SystemModel& model, const Eigen::Vector2d& x,
                         double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  const Eigen::Vector2d k1 = vector_field(model, x);
  const Eigen::Vector2d k2 = vector_field(model, x + 0.5 * dt * k1);
  const Eigen::Vector2d k3 = vector_field(model, x + 0.5 * dt * k2);
  const Eigen::Vector2d k4 = vector_field(model, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::Vector2d advance(const SystemModel& model, const Eigen::Vector2d& x,
                        double dt) {
  if (model.discrete()) return model.A * x;
  return rk4_step(model, x, dt);
}

TrajectorySet simulate_trajectories(const SystemModel& model,
                                    const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("simulate: dt must be > 0");
  if (cfg.steps < 1) throw std::invalid_argument("simulate: steps must be >= 1");
  if (cfg.n_trajectories < 1)
    throw std::invalid_argument("simulate: n_trajectories must be >= 1");
  if (cfg.init_box.size() != 2)
    throw std::invalid_argument("simulate: init_box needs one interval per state component");
  for (const auto& iv : cfg.init_box)
    if (!(iv[1] > iv[0]))
      throw std::invalid_argument("simulate: empty init_box interval");

  TrajectorySet set(static_cast<std::size_t>(cfg.n_trajectories));
  for (int m = 0; m < cfg.n_trajectories; ++m) {
    rng::Stream init(
        rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(m), 0));
    Eigen::Vector2d x;
    for (int d = 0; d < 2; ++d) {
      const auto& iv = cfg.init_box[static_cast<std::size_t>(d)];
      x[d] = init.uniform(iv[0], iv[1]);
    }
    Eigen::MatrixXd traj(2, cfg.steps + 1);
    traj.col(0) = x;
    for (int t = 0; t < cfg.steps; ++t) {
      x = advance(model, x, cfg.dt);
      traj.col(t + 1) = x;
    }
    set[static_cast<std::size_t>(m)] = std::move(traj);
  }
  return set;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_snapshot_pairs(
    const TrajectorySet& set) {
  if (set.empty())
    throw std::invalid_argument("build_snapshot_pairs: empty trajectory set");
  Eigen::Index total = 0;
  for (const Eigen::MatrixXd& traj : set) {
    if (traj.cols() < 2)
      throw std::invalid_argument(
          "build_snapshot_pairs: trajectories need at least two states");
    total += traj.cols() - 1;
  }
  const Eigen::Index n = set.front().rows();
  Eigen::MatrixXd X(n, total), Xp(n, total);
  Eigen::Index col = 0;
  for (const Eigen::MatrixXd& traj : set) {
    const Eigen::Index pairs = traj.cols() - 1;
    X.middleCols(col, pairs) = traj.leftCols(pairs);
    Xp.middleCols(col, pairs) = traj.rightCols(pairs);
    col += pairs;
  }
  return {std::move(X), std::move(Xp)};
}

}  // namespace dqedmd::dynamics
