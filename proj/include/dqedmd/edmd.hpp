#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dqedmd/dictionary.hpp"
#include "dqedmd/quantizer.hpp"

namespace dqedmd::edmd {

struct FitOptions {
  // singular values below sigma_max * N * machine_eps * cutoff_factor are
  // treated as zero in the Gram pseudo-inverse
  double svd_cutoff_factor = 64.0;
};

struct FitReport {
  double residual = 0.0;        // (1/T) ||Phi' - K Phi||_F^2
  int gram_rank = 0;
  double gram_condition = 0.0;  // sigma_max / sigma_min of Phi Phi^T
  double svd_cutoff = 0.0;
};

struct KoopmanEstimate {
  Eigen::MatrixXd K;  // N x N
  Eigen::MatrixXd C;  // n x N decoder
  dictionary::Dictionary dict;
  FitReport fit;
};

struct KoopmanModes {
  Eigen::VectorXcd eigenvalues;   // sorted by descending magnitude
  Eigen::MatrixXcd eigenvectors;  // column i pairs with eigenvalues[i]
  Eigen::MatrixXcd modes;         // C * eigenvector, one per column
};

// Moore-Penrose pseudo-inverse of a symmetric PSD Gram matrix via SVD with a
// relative cutoff; rank and conditioning land in the report when given.
Eigen::MatrixXd gram_pinv(const Eigen::MatrixXd& G, const FitOptions& opts,
                          FitReport* report);

// argmin_A (1/T)||Phi' - A Phi||_F^2, computed as Phi' Phi^T (Phi Phi^T)^+.
std::pair<Eigen::MatrixXd, FitReport> fit_least_squares(
    const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiPrime,
    const FitOptions& opts = {});

// argmin_C (1/T)||X - C Phi||_F^2 = X Phi^T (Phi Phi^T)^+.
Eigen::MatrixXd fit_decoder(const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Phi,
                            const FitOptions& opts = {});

// Lifts both snapshot matrices through the dictionary, then fits the
// operator and the decoder.
KoopmanEstimate fit_edmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& XPrime,
                         const dictionary::Dictionary& dict,
                         const FitOptions& opts = {});

// Identical computation applied to decoded quantized states (states are
// decoded first, lifted after).
KoopmanEstimate fit_dq_edmd(const Eigen::MatrixXd& Xdecoded,
                            const Eigen::MatrixXd& XdecodedPrime,
                            const dictionary::Dictionary& dict,
                            const FitOptions& opts = {});

// x̂_1..x̂_steps as columns: iterates z <- K z from z_0 = lift(x0) and
// decodes x̂_t = C z_t, equal to C K^t lift(x0).
Eigen::MatrixXd predict(const KoopmanEstimate& est, const Eigen::VectorXd& x0,
                        int steps);

// Eigendecomposition of K with modes C ξ_i, sorted by descending |λ|.
KoopmanModes koopman_modes(const KoopmanEstimate& est);

// ||K_test - K_ref||_F / ||K_ref||_F
double relative_matrix_error(const Eigen::MatrixXd& K_ref,
                             const Eigen::MatrixXd& K_test);

// (1/T) sum_t ||x̂_t - x_t|| / ||x_t|| over columns, skipping steps with
// ||x_t|| < 1e-8 (skip count reported through the out-parameter); throws if
// every step is skipped.
double mean_relative_prediction_error(const Eigen::MatrixXd& truth,
                                      const Eigen::MatrixXd& predicted,
                                      int* skipped_steps = nullptr);

// Self-contained model file: operator, decoder, dictionary with explicit
// centers, optional quantizer metadata, fit report. Values round-trip at
// full floating-point precision.
struct ModelMetadata {
  std::string system;
  double dt = 0.0;
  std::optional<int> word_length;
  std::vector<quantizer::QuantizerSpec> quantizers;  // empty when unquantized
};

void save_model(const KoopmanEstimate& est, const ModelMetadata& meta,
                const std::string& path);
KoopmanEstimate load_model(const std::string& path,
                           ModelMetadata* meta = nullptr);

}  // namespace dqedmd::edmd
