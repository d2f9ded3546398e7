#include "dqedmd/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dqedmd::edmd {

using json = nlohmann::json;

Eigen::MatrixXd gram_pinv(const Eigen::MatrixXd& G, const FitOptions& opts,
                          FitReport* report) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() == 0
                            ? 0.0
                            : sv(0) * static_cast<double>(G.rows()) *
                                  std::numeric_limits<double>::epsilon() *
                                  opts.svd_cutoff_factor;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      inv(i) = 1.0 / sv(i);
      ++rank;
    }
  }
  if (report != nullptr) {
    report->gram_rank = rank;
    report->svd_cutoff = cutoff;
    const double smin = sv.size() == 0 ? 0.0 : sv(sv.size() - 1);
    report->gram_condition =
        smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

std::pair<Eigen::MatrixXd, FitReport> fit_least_squares(
    const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiPrime,
    const FitOptions& opts) {
  if (Phi.rows() != PhiPrime.rows() || Phi.cols() != PhiPrime.cols())
    throw std::invalid_argument("fit_least_squares: snapshot shapes differ");
  if (Phi.cols() < 1)
    throw std::invalid_argument("fit_least_squares: no snapshot columns");
  const Eigen::MatrixXd G = Phi * Phi.transpose();
  FitReport report;
  const Eigen::MatrixXd Ginv = gram_pinv(G, opts, &report);
  Eigen::MatrixXd K = PhiPrime * Phi.transpose() * Ginv;
  report.residual =
      (PhiPrime - K * Phi).squaredNorm() / static_cast<double>(Phi.cols());
  return {std::move(K), report};
}

Eigen::MatrixXd fit_decoder(const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Phi,
                            const FitOptions& opts) {
  if (X.cols() != Phi.cols())
    throw std::invalid_argument("fit_decoder: column counts differ");
  const Eigen::MatrixXd G = Phi * Phi.transpose();
  return X * Phi.transpose() * gram_pinv(G, opts, nullptr);
}

KoopmanEstimate fit_edmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& XPrime,
                         const dictionary::Dictionary& dict,
                         const FitOptions& opts) {
  const Eigen::MatrixXd Phi = dict.lift_snapshots(X);
  const Eigen::MatrixXd PhiPrime = dict.lift_snapshots(XPrime);
  auto [K, report] = fit_least_squares(Phi, PhiPrime, opts);
  Eigen::MatrixXd C = fit_decoder(X, Phi, opts);
  return KoopmanEstimate{std::move(K), std::move(C), dict, report};
}

KoopmanEstimate fit_dq_edmd(const Eigen::MatrixXd& Xdecoded,
                            const Eigen::MatrixXd& XdecodedPrime,
                            const dictionary::Dictionary& dict,
                            const FitOptions& opts) {
  return fit_edmd(Xdecoded, XdecodedPrime, dict, opts);
}

Eigen::MatrixXd predict(const KoopmanEstimate& est, const Eigen::VectorXd& x0,
                        int steps) {
  if (steps < 1) throw std::invalid_argument("predict: steps must be >= 1");
  Eigen::VectorXd z = est.dict.lift(x0);
  Eigen::MatrixXd out(est.C.rows(), steps);
  for (int t = 0; t < steps; ++t) {
    z = est.K * z;
    out.col(t) = est.C * z;
  }
  return out;
}

KoopmanModes koopman_modes(const KoopmanEstimate& est) {
  if (est.K.rows() != est.K.cols())
    throw std::invalid_argument("koopman_modes: K must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(est.K);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("koopman_modes: eigendecomposition failed");

  const Eigen::VectorXcd vals = solver.eigenvalues();
  const Eigen::MatrixXcd vecs = solver.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     const double ma = std::abs(vals(a)), mb = std::abs(vals(b));
                     if (ma != mb) return ma > mb;
                     if (vals(a).real() != vals(b).real())
                       return vals(a).real() > vals(b).real();
                     return vals(a).imag() > vals(b).imag();
                   });

  KoopmanModes modes;
  modes.eigenvalues.resize(vals.size());
  modes.eigenvectors.resize(vecs.rows(), vecs.cols());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    modes.eigenvalues(i) = vals(order[static_cast<std::size_t>(i)]);
    modes.eigenvectors.col(i) = vecs.col(order[static_cast<std::size_t>(i)]);
  }
  modes.modes = est.C.cast<std::complex<double>>() * modes.eigenvectors;
  return modes;
}

double relative_matrix_error(const Eigen::MatrixXd& K_ref,
                             const Eigen::MatrixXd& K_test) {
  if (K_ref.rows() != K_test.rows() || K_ref.cols() != K_test.cols())
    throw std::invalid_argument("relative_matrix_error: shapes differ");
  const double ref_norm = K_ref.norm();
  if (!(ref_norm > 0.0))
    throw std::invalid_argument("relative_matrix_error: zero reference norm");
  return (K_test - K_ref).norm() / ref_norm;
}

double mean_relative_prediction_error(const Eigen::MatrixXd& truth,
                                      const Eigen::MatrixXd& predicted,
                                      int* skipped_steps) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols())
    throw std::invalid_argument(
        "mean_relative_prediction_error: sequence shapes differ");
  constexpr double kNormFloor = 1e-8;
  double sum = 0.0;
  int used = 0, skipped = 0;
  for (Eigen::Index t = 0; t < truth.cols(); ++t) {
    const double denom = truth.col(t).norm();
    if (denom < kNormFloor) {
      ++skipped;
      continue;
    }
    sum += (predicted.col(t) - truth.col(t)).norm() / denom;
    ++used;
  }
  if (skipped_steps != nullptr) *skipped_steps = skipped;
  if (used == 0)
    throw std::invalid_argument(
        "mean_relative_prediction_error: every step fell below the norm floor");
  return sum / static_cast<double>(used);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error(std::string("model file: ") + what +
                             " is not a non-empty array");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || row.size() != cols)
      throw std::runtime_error(std::string("model file: ragged rows in ") + what);
    for (std::size_t k = 0; k < cols; ++k)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          row.at(k).get<double>();
  }
  return M;
}

json dictionary_to_json(const dictionary::Dictionary& dict) {
  json obs = json::array();
  for (const auto& o : dict.observables()) {
    if (o.kind == dictionary::Observable::Kind::Coordinate) {
      obs.push_back({{"kind", "coordinate"}, {"index", o.index}});
    } else {
      json center = json::array();
      for (Eigen::Index d = 0; d < o.center.size(); ++d)
        center.push_back(o.center(d));
      obs.push_back({{"kind", "tps"}, {"center", std::move(center)}});
    }
  }
  return {{"n", dict.n()}, {"observables", std::move(obs)}};
}

dictionary::Dictionary dictionary_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  std::vector<dictionary::Observable> obs;
  for (const json& o : j.at("observables")) {
    const std::string kind = o.at("kind").get<std::string>();
    if (kind == "coordinate") {
      obs.push_back(dictionary::Observable::coordinate(o.at("index").get<int>()));
    } else if (kind == "tps") {
      const json& c = o.at("center");
      Eigen::VectorXd center(static_cast<Eigen::Index>(c.size()));
      for (std::size_t d = 0; d < c.size(); ++d)
        center(static_cast<Eigen::Index>(d)) = c.at(d).get<double>();
      obs.push_back(dictionary::Observable::thin_plate_spline(std::move(center)));
    } else {
      throw std::runtime_error("model file: unknown observable kind " + kind);
    }
  }
  return dictionary::Dictionary(n, std::move(obs));
}

}  // namespace

void save_model(const KoopmanEstimate& est, const ModelMetadata& meta,
                const std::string& path) {
  json j;
  j["format"] = "dqedmd-model";
  j["version"] = "0.1.0";
  j["system"] = meta.system;
  j["dt"] = meta.dt;
  j["dictionary"] = dictionary_to_json(est.dict);
  j["K"] = matrix_to_json(est.K);
  j["C"] = matrix_to_json(est.C);
  j["fit"] = {{"residual", est.fit.residual},
              {"gram_rank", est.fit.gram_rank},
              {"gram_condition", est.fit.gram_condition},
              {"svd_cutoff", est.fit.svd_cutoff}};
  if (meta.word_length.has_value()) {
    json ranges = json::array();
    for (const auto& spec : meta.quantizers)
      ranges.push_back({{"u_min", spec.u_min},
                        {"u_max", spec.u_max},
                        {"word_length", spec.word_length}});
    j["quantizer"] = {{"word_length", *meta.word_length},
                      {"components", std::move(ranges)}};
  } else {
    j["quantizer"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

KoopmanEstimate load_model(const std::string& path, ModelMetadata* meta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_model: parse error in " + path + ": " +
                             e.what());
  }
  if (j.value("format", "") != "dqedmd-model")
    throw std::runtime_error("load_model: " + path + " is not a model file");

  dictionary::Dictionary dict = dictionary_from_json(j.at("dictionary"));
  Eigen::MatrixXd K = matrix_from_json(j.at("K"), "K");
  Eigen::MatrixXd C = matrix_from_json(j.at("C"), "C");
  if (K.rows() != K.cols() || K.rows() != dict.N())
    throw std::runtime_error("load_model: operator shape does not match the dictionary");
  if (C.rows() != dict.n() || C.cols() != dict.N())
    throw std::runtime_error("load_model: decoder shape does not match the dictionary");
  FitReport report;
  const json& fit = j.at("fit");
  report.residual = fit.at("residual").get<double>();
  report.gram_rank = fit.at("gram_rank").get<int>();
  // non-finite numbers serialize as null
  const json& cond = fit.at("gram_condition");
  report.gram_condition = cond.is_null()
                              ? std::numeric_limits<double>::infinity()
                              : cond.get<double>();
  report.svd_cutoff = fit.at("svd_cutoff").get<double>();

  if (meta != nullptr) {
    meta->system = j.value("system", "");
    meta->dt = j.value("dt", 0.0);
    meta->word_length.reset();
    meta->quantizers.clear();
    const json& q = j.at("quantizer");
    if (!q.is_null()) {
      meta->word_length = q.at("word_length").get<int>();
      for (const json& comp : q.at("components"))
        meta->quantizers.push_back(quantizer::QuantizerSpec::make(
            comp.at("u_min").get<double>(), comp.at("u_max").get<double>(),
            comp.at("word_length").get<int>()));
    }
  }
  return KoopmanEstimate{std::move(K), std::move(C), std::move(dict), report};
}

}  // namespace dqedmd::edmd
