#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace dqedmd::regularized {

struct RegularizationParams {
  Eigen::MatrixXd beta;   // N x N
  Eigen::MatrixXd gamma;  // N x N
};

// Closed-form regularizer for the identity dictionary: gamma = (eps^2/12) I,
// beta = 0. eps = 0 is the degenerate no-op regularizer.
RegularizationParams dmd_regularizer(double eps, int N);

// Stationary point of the regularized quantized least-squares objective
//   J(A) = (1/T)||PhiBar' - A PhiBar||_F^2 - tr(A beta) - tr(A^T A gamma),
// namely K = (PhiBar' PhiBar^T/T + beta^T/2)(PhiBar PhiBar^T/T - gamma)^{-1}.
// The bracketed matrix must stay positive definite (smallest eigenvalue
// above 1e-10 * trace/N); when it is not, the resolution is too coarse for
// the available excitation and the call throws. See
// docs/regularized_recovery.md for the derivation.
Eigen::MatrixXd recover_regularized(const Eigen::MatrixXd& PhiBar,
                                    const Eigen::MatrixXd& PhiBarPrime,
                                    const RegularizationParams& params);

// Deviation of the quantized Gram matrix from the predicted inflation
// (eps^2/12) I. Callers supply identity-dictionary lifts: PhiBar must be
// Phi plus the raw quantization errors.
struct GramInflationReport {
  Eigen::MatrixXd deviation;        // (PhiBar PhiBar^T - Phi Phi^T)/T
  double expected = 0.0;            // eps^2/12
  double max_diag_deviation = 0.0;  // max_i |deviation_ii - expected|
  double max_offdiag = 0.0;         // max_{i != j} |deviation_ij|
};

GramInflationReport gram_inflation_check(const Eigen::MatrixXd& Phi,
                                         const Eigen::MatrixXd& PhiBar,
                                         double eps);

// Quantities of the operator perturbation identity
//   Ktilde - K = (Pi - K Psi)(PhiBar PhiBar^T)^{-1}
// with Psi = PhiEps Phi^T + Phi PhiEps^T + PhiEps PhiEps^T (and Pi the
// primed analogue), plus the resulting bound
//   ||Ktilde - K||/||K|| <= (||Psi|| + ||Pi||/||K||) ||(PhiBar PhiBar^T)^{-1}||.
// All norms are Frobenius. PhiBar must have full row rank.
struct PerturbationDiagnostics {
  double phi_eps_norm = 0.0;
  double psi_eps_norm = 0.0;
  double pi_eps_norm = 0.0;
  double k_eps_norm = 0.0;
  double bound_rhs = 0.0;
};

PerturbationDiagnostics perturbation_diagnostics(
    const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiPrime,
    const Eigen::MatrixXd& PhiBar, const Eigen::MatrixXd& PhiBarPrime,
    const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ktilde);

// Least-squares slope of log(error) against log(eps); needs >= 3 strictly
// positive pairs.
double loglog_slope(const std::vector<std::pair<double, double>>& pairs);

}  // namespace dqedmd::regularized
