#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dqedmd/kernels.hpp"
#include "dqedmd/rng.hpp"

namespace dqedmd::quantizer {

// One uniform mid-point quantizer with saturation. resolution is fixed at
// construction as (u_max - u_min)/2^b and every code path derives its cell
// from the same stored fields, so encode, decode_midpoint and the batched
// kernels agree bitwise.
struct QuantizerSpec {
  double u_min = -1.0;
  double u_max = 1.0;
  int word_length = 8;
  double resolution = 0.0078125;

  static QuantizerSpec make(double u_min, double u_max, int word_length);
  kernels::QuantCell cell() const;
};

double resolution(const QuantizerSpec& spec);

// code = floor((x - u_min)/eps) clamped to [0, 2^b - 1]; inputs at or below
// u_min map to 0, at or above u_max to 2^b - 1.
long encode(const QuantizerSpec& spec, double x);

// eps * code + u_min + eps/2; throws on codes outside [0, 2^b - 1].
double decode_midpoint(const QuantizerSpec& spec, long code);

// Per-trajectory dither source: one draw per (step, component), uniform on
// [-eps/2, eps/2] for that component's resolution. Identical seeds give
// identical draw sequences.
class DitherStream {
 public:
  explicit DitherStream(std::uint64_t seed) : stream_(seed) {}

  double draw(double eps) { return (stream_.uniform01() - 0.5) * eps; }

 private:
  rng::Stream stream_;
};

struct QuantizationRecord {
  Eigen::MatrixXd original;  // one state per column
  Eigen::MatrixXd decoded;
  Eigen::MatrixXd errors;    // decoded - original
  long saturation_count = 0;
};

// x̃_j = decode(encode(x_j + w_j)) - w_j componentwise.
Eigen::VectorXd dither_quantize_vector(const std::vector<QuantizerSpec>& specs,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& w,
                                       long* saturation_count = nullptr);

// Applies dither quantization at every step with fresh draws from the
// stream. Draw order is step-major (step 0 component 0, step 0 component 1,
// ...), independent of how the batched kernels walk the data.
QuantizationRecord quantize_trajectory(const std::vector<QuantizerSpec>& specs,
                                       const Eigen::MatrixXd& trajectory,
                                       DitherStream& dither);

}  // namespace dqedmd::quantizer
