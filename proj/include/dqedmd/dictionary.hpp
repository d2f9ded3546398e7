#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace dqedmd::dictionary {

struct Observable {
  enum class Kind { Coordinate, ThinPlateSpline };

  Kind kind = Kind::Coordinate;
  int index = 0;           // Coordinate: which state component
  Eigen::VectorXd center;  // ThinPlateSpline

  static Observable coordinate(int index);
  static Observable thin_plate_spline(Eigen::VectorXd center);
};

// Ordered list of N observables over an n-dimensional state. Thin-plate
// evaluations are batched through the active kernel set; lift() and
// lift_snapshots() share one per-state routine, so a lone state and the
// matching matrix column lift to bit-identical values.
class Dictionary {
 public:
  Dictionary(int n, std::vector<Observable> observables);

  int n() const { return n_; }
  int N() const { return static_cast<int>(observables_.size()); }
  const std::vector<Observable>& observables() const { return observables_; }

  // true when the list is exactly Coordinate(0..n-1) in order, which makes
  // lifting the identity map
  bool is_identity() const;

  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd lift_snapshots(const Eigen::MatrixXd& X) const;

  // row i is the gradient of observable i at x; thin-plate rows are
  // (x - c)^T (log r^2 + 1), zero at the center
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

 private:
  void lift_into(const double* x, double* out, double* r2, double* vals) const;

  int n_ = 0;
  std::vector<Observable> observables_;
  std::vector<int> tps_slots_;   // output positions of the thin-plate values
  Eigen::MatrixXd tps_centers_;  // packed column-wise, n x m
};

Dictionary make_identity_dictionary(int n);

// n Coordinate observables followed by n_centers thin-plate splines with
// centers i.i.d. uniform on the box; identical seeds reproduce the centers.
Dictionary make_tps_dictionary(int n, int n_centers,
                               const std::vector<std::array<double, 2>>& box,
                               std::uint64_t seed);

}  // namespace dqedmd::dictionary
