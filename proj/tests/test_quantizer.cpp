#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dqedmd/quantizer.hpp"
#include "dqedmd/rng.hpp"

using namespace dqedmd;
using quantizer::QuantizerSpec;

namespace {

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double var_of(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

double corr_of(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

}  // namespace

TEST_CASE("resolution follows the cell-width formula") {
  CHECK(quantizer::resolution(QuantizerSpec::make(-1.0, 1.0, 1)) == 1.0);
  CHECK(quantizer::resolution(QuantizerSpec::make(-1.0, 1.0, 3)) == 0.25);
  CHECK(quantizer::resolution(QuantizerSpec::make(-2.0, 2.0, 8)) == 0.015625);
}

TEST_CASE("spec construction rejects bad parameters") {
  CHECK_THROWS_AS(QuantizerSpec::make(1.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec::make(1.0, -1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec::make(-1.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec::make(-1.0, 1.0, 53), std::invalid_argument);
}

TEST_CASE("encode floors into the cell grid and saturates at the rails") {
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 3);
  CHECK(quantizer::encode(spec, 0.3) == 5);  // floor(1.3/0.25)
  CHECK(quantizer::encode(spec, -5.0) == 0);
  CHECK(quantizer::encode(spec, 5.0) == 7);
  CHECK(quantizer::encode(spec, -1.0) == 0);
  CHECK(quantizer::encode(spec, 1.0) == 7);
}

TEST_CASE("decode returns cell midpoints and rejects out-of-range codes") {
  const auto spec3 = QuantizerSpec::make(-1.0, 1.0, 3);
  CHECK(quantizer::decode_midpoint(spec3, 5) == 0.375);
  const auto spec1 = QuantizerSpec::make(-1.0, 1.0, 1);
  CHECK(quantizer::decode_midpoint(spec1, 0) == -0.5);
  CHECK_THROWS_AS(quantizer::decode_midpoint(spec3, -1), std::out_of_range);
  CHECK_THROWS_AS(quantizer::decode_midpoint(spec3, 8), std::out_of_range);
}

TEST_CASE("encode-decode round trip lands on the cell midpoint") {
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 3);
  const double decoded = quantizer::decode_midpoint(spec, quantizer::encode(spec, 0.3));
  CHECK(decoded == 0.375);
  CHECK(std::abs(decoded - 0.3) == doctest::Approx(0.075));
  CHECK(std::abs(decoded - 0.3) <= spec.resolution / 2);
}

TEST_CASE("encode is monotone, decode strictly increasing") {
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 5);
  long prev_code = quantizer::encode(spec, -2.0);
  for (double x = -2.0; x <= 2.0; x += 1.0 / 128.0) {
    const long code = quantizer::encode(spec, x);
    CHECK(code >= prev_code);
    prev_code = code;
  }
  for (long code = 1; code < 32; ++code)
    CHECK(quantizer::decode_midpoint(spec, code) >
          quantizer::decode_midpoint(spec, code - 1));
}

TEST_CASE("raising the word length by one halves the resolution exactly") {
  for (int b = 1; b < 52; ++b) {
    const auto coarse = QuantizerSpec::make(-1.0, 1.0, b);
    const auto fine = QuantizerSpec::make(-1.0, 1.0, b + 1);
    CHECK(2.0 * fine.resolution == coarse.resolution);
  }
}

TEST_CASE("zero dither reduces to plain mid-point quantization") {
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 3);
  const std::vector<QuantizerSpec> specs = {spec, spec};
  Eigen::VectorXd x(2), w = Eigen::VectorXd::Zero(2);
  x << 0.3, -0.77;
  const Eigen::VectorXd xt = quantizer::dither_quantize_vector(specs, x, w);
  for (int j = 0; j < 2; ++j)
    CHECK(xt[j] ==
          quantizer::decode_midpoint(spec, quantizer::encode(spec, x[j])));
}

TEST_CASE("worked dither example") {
  const std::vector<QuantizerSpec> specs = {QuantizerSpec::make(-1.0, 1.0, 3)};
  Eigen::VectorXd x(1), w(1);
  x << 0.3;
  w << 0.1;
  // encode(0.4) = 5, decode -> 0.375, subtract the dither again
  const Eigen::VectorXd xt = quantizer::dither_quantize_vector(specs, x, w);
  CHECK(xt[0] == doctest::Approx(0.275).epsilon(1e-12));
  CHECK(xt[0] - x[0] == doctest::Approx(-0.025).epsilon(1e-9));
}

TEST_CASE("dithered error is bounded by half a cell in the interior") {
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 4);
  const std::vector<QuantizerSpec> specs = {spec};
  const double half = spec.resolution / 2;
  rng::Stream stream(321);
  long saturated = 0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(1), w(1);
    x << stream.uniform(-1.0 + half, 1.0 - half);
    w << (stream.uniform01() - 0.5) * spec.resolution;
    const Eigen::VectorXd xt =
        quantizer::dither_quantize_vector(specs, x, w, &saturated);
    // half-cell bound, with headroom for the floating-point dither subtraction
    CHECK(std::abs(xt[0] - x[0]) <= half * (1 + 1e-9));
  }
  CHECK(saturated == 0);
}

TEST_CASE("midpoint state with zero dither quantizes to itself") {
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 3);
  const std::vector<QuantizerSpec> specs = {spec, spec};
  Eigen::VectorXd x(2), w = Eigen::VectorXd::Zero(2);
  x << 0.375, -0.875;  // exact cell midpoints
  const Eigen::VectorXd xt = quantizer::dither_quantize_vector(specs, x, w);
  CHECK(xt[0] == x[0]);
  CHECK(xt[1] == x[1]);
}

TEST_CASE("trajectory quantization records errors and saturation") {
  const std::vector<QuantizerSpec> specs = {QuantizerSpec::make(-1.0, 1.0, 4),
                                            QuantizerSpec::make(-2.0, 2.0, 4)};
  Eigen::MatrixXd traj(2, 5);
  traj << 0.1, 0.9, 5.0, -0.3, -9.0,   // two saturating samples
      0.5, -1.9, 0.0, 1.99, 3.0;       // one saturating sample
  quantizer::DitherStream dither(42);
  const auto rec = quantizer::quantize_trajectory(specs, traj, dither);

  CHECK(rec.original == traj);
  CHECK(rec.decoded.rows() == 2);
  CHECK(rec.decoded.cols() == 5);
  CHECK(rec.errors == rec.decoded - rec.original);
  CHECK(rec.saturation_count == 3);

  quantizer::DitherStream dither2(42);
  const auto rec2 = quantizer::quantize_trajectory(specs, traj, dither2);
  CHECK(rec.decoded == rec2.decoded);
  CHECK(rec.saturation_count == rec2.saturation_count);

  quantizer::DitherStream dither3(43);
  const auto rec3 = quantizer::quantize_trajectory(specs, traj, dither3);
  CHECK(rec.decoded != rec3.decoded);
}

TEST_CASE("trajectory quantization validates component count") {
  const std::vector<QuantizerSpec> specs = {QuantizerSpec::make(-1.0, 1.0, 4)};
  quantizer::DitherStream dither(1);
  CHECK_THROWS_AS(
      quantizer::quantize_trajectory(specs, Eigen::MatrixXd::Zero(2, 3), dither),
      std::invalid_argument);
  CHECK_THROWS_AS(
      quantizer::quantize_trajectory(specs, Eigen::MatrixXd(1, 0), dither),
      std::invalid_argument);
}

TEST_CASE("dither error statistics match the uniform law") {
  // 1e5 scalar samples at b = 4 on [-1, 1]; samples stay inside the
  // saturation-free interior |x| < u_max - eps/2
  const auto spec = QuantizerSpec::make(-1.0, 1.0, 4);
  const std::vector<QuantizerSpec> specs = {spec};
  const int n = 100000;
  const double eps = spec.resolution;
  const double interior = 1.0 - eps / 2;

  rng::Stream source(7701);
  Eigen::MatrixXd traj(1, n);
  for (int t = 0; t < n; ++t) traj(0, t) = source.uniform(-interior, interior);

  quantizer::DitherStream dither(2024);
  const auto rec = quantizer::quantize_trajectory(specs, traj, dither);
  CHECK(rec.saturation_count == 0);

  const Eigen::VectorXd e = rec.errors.row(0).transpose();
  const Eigen::VectorXd x = rec.original.row(0).transpose();
  const double sigma = eps / std::sqrt(12.0);

  CHECK(std::abs(mean_of(e)) <= 3.0 * sigma / std::sqrt(double(n)));
  CHECK(std::abs(var_of(e) / (eps * eps / 12.0) - 1.0) <= 0.02);
  CHECK(std::abs(corr_of(e, x)) <= 0.02);
  CHECK(std::abs(corr_of(e.head(n - 1), e.tail(n - 1))) <= 0.02);
}
