#include "dqedmd/regularized.hpp"

#include <cmath>
#include <stdexcept>

#include "dqedmd/edmd.hpp"

namespace dqedmd::regularized {

RegularizationParams dmd_regularizer(double eps, int N) {
  if (eps < 0.0)
    throw std::invalid_argument("dmd_regularizer: eps must be >= 0");
  if (N < 1) throw std::invalid_argument("dmd_regularizer: N must be >= 1");
  RegularizationParams params;
  params.beta = Eigen::MatrixXd::Zero(N, N);
  params.gamma = (eps * eps / 12.0) * Eigen::MatrixXd::Identity(N, N);
  return params;
}

Eigen::MatrixXd recover_regularized(const Eigen::MatrixXd& PhiBar,
                                    const Eigen::MatrixXd& PhiBarPrime,
                                    const RegularizationParams& params) {
  const Eigen::Index N = PhiBar.rows();
  if (PhiBarPrime.rows() != N || PhiBarPrime.cols() != PhiBar.cols())
    throw std::invalid_argument("recover_regularized: snapshot shapes differ");
  if (PhiBar.cols() < 1)
    throw std::invalid_argument("recover_regularized: no snapshot columns");
  if (params.gamma.rows() != N || params.gamma.cols() != N ||
      params.beta.rows() != N || params.beta.cols() != N)
    throw std::invalid_argument(
        "recover_regularized: regularizer shapes do not match the dictionary");

  const double T = static_cast<double>(PhiBar.cols());
  Eigen::MatrixXd S = PhiBar * PhiBar.transpose() / T - params.gamma;
  S = 0.5 * (S + S.transpose().eval());  // guard against asymmetric gamma input

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("recover_regularized: eigensolver failed");
  const double lambda_min = es.eigenvalues()(0);
  const double floor = 1e-10 * S.trace() / static_cast<double>(N);
  if (!(lambda_min > floor))
    throw std::runtime_error(
        "recover_regularized: regularized Gram matrix lost positive "
        "definiteness; the resolution is too coarse for the available data "
        "(shrink gamma or gather more samples)");

  const Eigen::MatrixXd rhs =
      PhiBarPrime * PhiBar.transpose() / T + 0.5 * params.beta.transpose();
  // K solves K S = rhs with S symmetric positive definite
  return S.llt().solve(rhs.transpose()).transpose();
}

GramInflationReport gram_inflation_check(const Eigen::MatrixXd& Phi,
                                         const Eigen::MatrixXd& PhiBar,
                                         double eps) {
  if (Phi.rows() != PhiBar.rows() || Phi.cols() != PhiBar.cols())
    throw std::invalid_argument("gram_inflation_check: shapes differ");
  if (Phi.cols() < 1)
    throw std::invalid_argument("gram_inflation_check: no snapshot columns");
  GramInflationReport report;
  report.expected = eps * eps / 12.0;
  const double T = static_cast<double>(Phi.cols());
  report.deviation =
      (PhiBar * PhiBar.transpose() - Phi * Phi.transpose()) / T;
  for (Eigen::Index i = 0; i < report.deviation.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.deviation.cols(); ++j) {
      const double v = report.deviation(i, j);
      if (i == j)
        report.max_diag_deviation =
            std::max(report.max_diag_deviation, std::abs(v - report.expected));
      else
        report.max_offdiag = std::max(report.max_offdiag, std::abs(v));
    }
  }
  return report;
}

PerturbationDiagnostics perturbation_diagnostics(
    const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiPrime,
    const Eigen::MatrixXd& PhiBar, const Eigen::MatrixXd& PhiBarPrime,
    const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ktilde) {
  const Eigen::Index N = Phi.rows();
  const Eigen::Index T = Phi.cols();
  if (PhiPrime.rows() != N || PhiPrime.cols() != T || PhiBar.rows() != N ||
      PhiBar.cols() != T || PhiBarPrime.rows() != N || PhiBarPrime.cols() != T)
    throw std::invalid_argument("perturbation_diagnostics: shapes differ");
  if (K.rows() != N || K.cols() != N || Ktilde.rows() != N ||
      Ktilde.cols() != N)
    throw std::invalid_argument(
        "perturbation_diagnostics: operator shapes do not match");

  const Eigen::MatrixXd PhiEps = PhiBar - Phi;
  const Eigen::MatrixXd PhiEpsPrime = PhiBarPrime - PhiPrime;
  const Eigen::MatrixXd Psi = PhiEps * Phi.transpose() +
                              Phi * PhiEps.transpose() +
                              PhiEps * PhiEps.transpose();
  const Eigen::MatrixXd Pi = PhiEpsPrime * Phi.transpose() +
                             PhiPrime * PhiEps.transpose() +
                             PhiEpsPrime * PhiEps.transpose();

  const Eigen::MatrixXd Gbar = PhiBar * PhiBar.transpose();
  edmd::FitReport gram_report;
  const Eigen::MatrixXd Ginv = edmd::gram_pinv(Gbar, {}, &gram_report);
  if (gram_report.gram_rank < N)
    throw std::runtime_error(
        "perturbation_diagnostics: quantized Gram matrix is rank deficient");

  PerturbationDiagnostics d;
  d.phi_eps_norm = PhiEps.norm();
  d.psi_eps_norm = Psi.norm();
  d.pi_eps_norm = Pi.norm();
  d.k_eps_norm = (Ktilde - K).norm();
  const double k_norm = K.norm();
  d.bound_rhs = (d.psi_eps_norm + d.pi_eps_norm / k_norm) * Ginv.norm();
  return d;
}

double loglog_slope(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3)
    throw std::invalid_argument("loglog_slope: need at least 3 pairs");
  double su = 0.0, sv = 0.0;
  for (const auto& [eps, err] : pairs) {
    if (!(eps > 0.0) || !(err > 0.0))
      throw std::invalid_argument("loglog_slope: pairs must be positive");
    su += std::log(eps);
    sv += std::log(err);
  }
  const double n = static_cast<double>(pairs.size());
  const double mu = su / n, mv = sv / n;
  double num = 0.0, den = 0.0;
  for (const auto& [eps, err] : pairs) {
    const double du = std::log(eps) - mu;
    num += du * (std::log(err) - mv);
    den += du * du;
  }
  if (!(den > 0.0))
    throw std::invalid_argument("loglog_slope: eps values are all equal");
  return num / den;
}

}  // namespace dqedmd::regularized
