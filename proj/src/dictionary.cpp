#include "dqedmd/dictionary.hpp"

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "dqedmd/kernels.hpp"
#include "dqedmd/rng.hpp"

namespace dqedmd::dictionary {

Observable Observable::coordinate(int index) {
  Observable o;
  o.kind = Kind::Coordinate;
  o.index = index;
  return o;
}

Observable Observable::thin_plate_spline(Eigen::VectorXd center) {
  Observable o;
  o.kind = Kind::ThinPlateSpline;
  o.center = std::move(center);
  return o;
}

Dictionary::Dictionary(int n, std::vector<Observable> observables)
    : n_(n), observables_(std::move(observables)) {
  if (n_ < 1) throw std::invalid_argument("dictionary state dimension must be >= 1");
  if (observables_.empty())
    throw std::invalid_argument("dictionary needs at least one observable");
  int m = 0;
  for (const Observable& o : observables_) {
    if (o.kind == Observable::Kind::Coordinate) {
      if (o.index < 0 || o.index >= n_)
        throw std::invalid_argument("coordinate observable index outside the state dimension");
    } else {
      if (o.center.size() != n_)
        throw std::invalid_argument("thin-plate center dimension does not match the state dimension");
      ++m;
    }
  }
  tps_slots_.reserve(static_cast<std::size_t>(m));
  tps_centers_.resize(n_, m);
  int k = 0;
  for (int i = 0; i < N(); ++i) {
    const Observable& o = observables_[static_cast<std::size_t>(i)];
    if (o.kind == Observable::Kind::ThinPlateSpline) {
      tps_slots_.push_back(i);
      tps_centers_.col(k++) = o.center;
    }
  }
}

bool Dictionary::is_identity() const {
  if (N() != n_) return false;
  for (int i = 0; i < n_; ++i) {
    const Observable& o = observables_[static_cast<std::size_t>(i)];
    if (o.kind != Observable::Kind::Coordinate || o.index != i) return false;
  }
  return true;
}

void Dictionary::lift_into(const double* x, double* out, double* r2,
                           double* vals) const {
  for (int i = 0; i < N(); ++i) {
    const Observable& o = observables_[static_cast<std::size_t>(i)];
    if (o.kind == Observable::Kind::Coordinate) out[i] = x[o.index];
  }
  const int m = static_cast<int>(tps_slots_.size());
  if (m == 0) return;
  for (int k = 0; k < m; ++k) {
    double acc = 0.0;
    for (int d = 0; d < n_; ++d) {
      const double diff = x[d] - tps_centers_(d, k);
      acc += diff * diff;
    }
    r2[k] = acc;
  }
  kernels::active_kernels().tps_values(r2, vals, static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) out[tps_slots_[static_cast<std::size_t>(k)]] = vals[k];
}

Eigen::VectorXd Dictionary::lift(const Eigen::VectorXd& x) const {
  if (x.size() != n_)
    throw std::invalid_argument("lift: state dimension mismatch");
  Eigen::VectorXd out(N());
  Eigen::VectorXd r2(tps_slots_.size()), vals(tps_slots_.size());
  lift_into(x.data(), out.data(), r2.data(), vals.data());
  return out;
}

Eigen::MatrixXd Dictionary::lift_snapshots(const Eigen::MatrixXd& X) const {
  if (X.rows() != n_)
    throw std::invalid_argument("lift_snapshots: state dimension mismatch");
  if (X.cols() < 1)
    throw std::invalid_argument("lift_snapshots: at least one column required");
  Eigen::MatrixXd Phi(N(), X.cols());
  Eigen::VectorXd r2(tps_slots_.size()), vals(tps_slots_.size());
  for (Eigen::Index t = 0; t < X.cols(); ++t)
    lift_into(X.col(t).data(), Phi.col(t).data(), r2.data(), vals.data());
  return Phi;
}

Eigen::MatrixXd Dictionary::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != n_)
    throw std::invalid_argument("jacobian: state dimension mismatch");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N(), n_);
  for (int i = 0; i < N(); ++i) {
    const Observable& o = observables_[static_cast<std::size_t>(i)];
    if (o.kind == Observable::Kind::Coordinate) {
      J(i, o.index) = 1.0;
    } else {
      const Eigen::VectorXd d = x - o.center;
      const double r2 = d.squaredNorm();
      // grad of r^2 log r is (x - c)(2 log r + 1); zero in the r -> 0 limit
      if (r2 >= DBL_MIN) J.row(i) = d.transpose() * (std::log(r2) + 1.0);
    }
  }
  return J;
}

Dictionary make_identity_dictionary(int n) {
  std::vector<Observable> obs;
  obs.reserve(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) obs.push_back(Observable::coordinate(d));
  return Dictionary(n, std::move(obs));
}

Dictionary make_tps_dictionary(int n, int n_centers,
                               const std::vector<std::array<double, 2>>& box,
                               std::uint64_t seed) {
  if (n_centers < 0)
    throw std::invalid_argument("make_tps_dictionary: n_centers must be >= 0");
  if (box.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("make_tps_dictionary: box needs one interval per dimension");
  for (const auto& iv : box)
    if (!(iv[1] > iv[0]))
      throw std::invalid_argument("make_tps_dictionary: empty box interval");

  std::vector<Observable> obs;
  obs.reserve(static_cast<std::size_t>(n + n_centers));
  for (int d = 0; d < n; ++d) obs.push_back(Observable::coordinate(d));
  rng::Stream stream(seed);
  for (int k = 0; k < n_centers; ++k) {
    Eigen::VectorXd c(n);
    for (int d = 0; d < n; ++d)
      c[d] = stream.uniform(box[static_cast<std::size_t>(d)][0],
                            box[static_cast<std::size_t>(d)][1]);
    obs.push_back(Observable::thin_plate_spline(std::move(c)));
  }
  return Dictionary(n, std::move(obs));
}

}  // namespace dqedmd::dictionary
