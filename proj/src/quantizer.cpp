#include "dqedmd/quantizer.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dqedmd::quantizer {

QuantizerSpec QuantizerSpec::make(double u_min, double u_max, int word_length) {
  if (!(u_max > u_min))
    throw std::invalid_argument("quantizer range requires u_max > u_min");
  if (word_length < 1 || word_length > 52)
    throw std::invalid_argument("quantizer word_length must be in [1, 52]");
  QuantizerSpec spec;
  spec.u_min = u_min;
  spec.u_max = u_max;
  spec.word_length = word_length;
  // ldexp scales by an exact power of two: equals (u_max - u_min)/2^b.
  spec.resolution = std::ldexp(u_max - u_min, -word_length);
  return spec;
}

kernels::QuantCell QuantizerSpec::cell() const {
  return {u_min, resolution, u_min + 0.5 * resolution,
          static_cast<double>((std::int64_t{1} << word_length) - 1)};
}

double resolution(const QuantizerSpec& spec) { return spec.resolution; }

long encode(const QuantizerSpec& spec, double x) {
  const kernels::QuantCell c = spec.cell();
  double t = std::floor((x - c.u_min) / c.eps);
  if (t < 0.0) t = 0.0;
  if (t > c.code_max) t = c.code_max;
  return static_cast<long>(t);
}

double decode_midpoint(const QuantizerSpec& spec, long code) {
  const kernels::QuantCell c = spec.cell();
  if (code < 0 || static_cast<double>(code) > c.code_max)
    throw std::out_of_range("quantizer code outside [0, 2^b - 1]");
  return c.eps * static_cast<double>(code) + c.offset;
}

Eigen::VectorXd dither_quantize_vector(const std::vector<QuantizerSpec>& specs,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& w,
                                       long* saturation_count) {
  if (x.size() != w.size() ||
      specs.size() != static_cast<std::size_t>(x.size()))
    throw std::invalid_argument(
        "dither_quantize_vector: specs, x and w must have equal length");
  Eigen::VectorXd out(x.size());
  std::size_t saturated = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const kernels::QuantCell c = specs[static_cast<std::size_t>(j)].cell();
    out[j] = kernels::dither_quantize_one(c, x[j], w[j], saturated);
  }
  if (saturation_count != nullptr)
    *saturation_count = static_cast<long>(saturated);
  return out;
}

QuantizationRecord quantize_trajectory(const std::vector<QuantizerSpec>& specs,
                                       const Eigen::MatrixXd& trajectory,
                                       DitherStream& dither) {
  const Eigen::Index n = trajectory.rows();
  const Eigen::Index len = trajectory.cols();
  if (specs.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument(
        "quantize_trajectory: one QuantizerSpec per state component required");
  if (len == 0)
    throw std::invalid_argument("quantize_trajectory: empty trajectory");

  Eigen::MatrixXd w(n, len);
  for (Eigen::Index t = 0; t < len; ++t)
    for (Eigen::Index j = 0; j < n; ++j)
      w(j, t) = dither.draw(specs[static_cast<std::size_t>(j)].resolution);

  QuantizationRecord rec;
  rec.original = trajectory;
  rec.decoded.resize(n, len);

  const kernels::KernelSet& ks = kernels::active_kernels();
  Eigen::RowVectorXd xrow(len), wrow(len), orow(len);
  std::size_t saturated = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    xrow = trajectory.row(j);
    wrow = w.row(j);
    saturated += ks.dither_quantize(
        specs[static_cast<std::size_t>(j)].cell(), xrow.data(), wrow.data(),
        orow.data(), static_cast<std::size_t>(len));
    rec.decoded.row(j) = orow;
  }
  rec.errors = rec.decoded - rec.original;
  rec.saturation_count = static_cast<long>(saturated);
  return rec;
}

}  // namespace dqedmd::quantizer
