#include "dqedmd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "dqedmd/dictionary.hpp"
#include "dqedmd/regularized.hpp"
#include "dqedmd/rng.hpp"

namespace dqedmd::harness {

namespace {

std::mutex log_mutex;

void log_row_failure(const std::string& what, int b, int trial) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << "sweep: word_length " << b << " trial " << trial << ": " << what
            << "\n";
}

// full-horizon rollout from the true initial state of every trajectory,
// metric averaged over trajectories
double mean_prediction_error(const edmd::KoopmanEstimate& est,
                             const dynamics::TrajectorySet& eval_set) {
  double acc = 0.0;
  for (const auto& traj : eval_set) {
    const int horizon = static_cast<int>(traj.cols()) - 1;
    const Eigen::MatrixXd predicted = edmd::predict(est, traj.col(0), horizon);
    acc += edmd::mean_relative_prediction_error(traj.rightCols(horizon),
                                                predicted);
  }
  return acc / static_cast<double>(eval_set.size());
}

struct SweepContext {
  const ExperimentConfig* cfg = nullptr;
  const dictionary::Dictionary* dict = nullptr;
  const edmd::KoopmanEstimate* reference = nullptr;
  const dynamics::TrajectorySet* train = nullptr;
  const dynamics::TrajectorySet* eval = nullptr;
  const std::vector<std::vector<quantizer::QuantizerSpec>>* specs_per_b =
      nullptr;
  const std::vector<double>* eps_per_b = nullptr;
};

ResultRecord run_task(const SweepContext& ctx, int b_index, int trial) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig& cfg = *ctx.cfg;
  const int b = cfg.quantizer.word_lengths[static_cast<std::size_t>(b_index)];
  const auto& specs = (*ctx.specs_per_b)[static_cast<std::size_t>(b_index)];

  ResultRecord rec;
  rec.system = cfg.system;
  rec.word_length = b;
  rec.epsilon = (*ctx.eps_per_b)[static_cast<std::size_t>(b_index)];
  rec.trial_index = trial;

  try {
    const std::uint64_t task_seed =
        rng::derive_seed(cfg.master_seed, static_cast<std::uint64_t>(b),
                         static_cast<std::uint64_t>(trial));

    dynamics::TrajectorySet decoded;
    decoded.reserve(ctx.train->size());
    long saturation = 0;
    for (std::size_t m = 0; m < ctx.train->size(); ++m) {
      quantizer::DitherStream dither(
          rng::derive_seed(task_seed, static_cast<std::uint64_t>(m), 1));
      auto q = quantizer::quantize_trajectory(specs, (*ctx.train)[m], dither);
      saturation += q.saturation_count;
      decoded.push_back(std::move(q.decoded));
    }
    rec.saturation_count = saturation;

    auto [Xd, XdPrime] = dynamics::build_snapshot_pairs(decoded);
    const edmd::KoopmanEstimate est =
        edmd::fit_dq_edmd(Xd, XdPrime, *ctx.dict);

    rec.rel_K_error = edmd::relative_matrix_error(ctx.reference->K, est.K);
    rec.mean_rel_pred_error = mean_prediction_error(est, *ctx.eval);
    rec.gram_condition = est.fit.gram_condition;

    if (ctx.dict->is_identity()) {
      // per-component resolutions may differ under the auto range policy, so
      // the diagonal inflation correction is assembled componentwise
      try {
        const int N = ctx.dict->N();
        regularized::RegularizationParams params;
        params.beta = Eigen::MatrixXd::Zero(N, N);
        params.gamma = Eigen::MatrixXd::Zero(N, N);
        for (int j = 0; j < N; ++j) {
          const double eps_j = specs[static_cast<std::size_t>(j)].resolution;
          params.gamma(j, j) = eps_j * eps_j / 12.0;
        }
        const Eigen::MatrixXd recovered =
            regularized::recover_regularized(Xd, XdPrime, params);
        rec.recovery_rel_K_error =
            edmd::relative_matrix_error(ctx.reference->K, recovered);
      } catch (const std::exception& e) {
        log_row_failure(std::string("recovery failed: ") + e.what(), b, trial);
      }
    }
  } catch (const std::exception& e) {
    log_row_failure(e.what(), b, trial);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.rel_K_error = nan;
    rec.mean_rel_pred_error = nan;
    rec.gram_condition = nan;
    rec.recovery_rel_K_error.reset();
  }

  rec.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

int resolve_threads(int n_threads) {
  if (n_threads > 0) return n_threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

dynamics::SystemModel system_by_name(const std::string& name) {
  if (name == "pendulum") return dynamics::SystemModel::pendulum();
  if (name == "vanderpol") return dynamics::SystemModel::vanderpol();
  if (name == "linear") {
    // test-only discrete map, deliberately absent from user-facing messages
    Eigen::Matrix2d A;
    A << 0.9, 0.1, 0.0, 0.8;
    auto m = dynamics::SystemModel::linear_map(A);
    m.name = "linear";
    return m;
  }
  throw std::invalid_argument("unknown system \"" + name +
                              "\" (expected \"pendulum\" or \"vanderpol\")");
}

std::vector<quantizer::QuantizerSpec> auto_ranges(
    const dynamics::TrajectorySet& train, int word_length) {
  if (train.empty())
    throw std::invalid_argument("auto_ranges: empty trajectory set");
  const int n = static_cast<int>(train.front().rows());
  std::vector<quantizer::QuantizerSpec> specs;
  specs.reserve(static_cast<std::size_t>(n));
  const double levels = std::ldexp(1.0, word_length) - 1.0;  // 2^b - 1
  for (int j = 0; j < n; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& traj : train) {
      lo = std::min(lo, traj.row(j).minCoeff());
      hi = std::max(hi, traj.row(j).maxCoeff());
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("auto_ranges: non-finite trajectory data");
    const double center = 0.5 * (lo + hi);
    double width = hi - lo;
    if (!(width > 0.0)) width = 1.0;  // constant component
    // widen 5% per side, then pad each side by half a cell so dithered
    // in-range samples cannot saturate
    const double widened = 1.1 * width;
    const double eps = widened / levels;
    specs.push_back(quantizer::QuantizerSpec::make(
        center - 0.5 * widened - 0.5 * eps, center + 0.5 * widened + 0.5 * eps,
        word_length));
  }
  return specs;
}

std::vector<quantizer::QuantizerSpec> explicit_ranges(
    const std::vector<std::array<double, 2>>& ranges, int word_length) {
  if (ranges.empty())
    throw std::invalid_argument("explicit_ranges: no intervals given");
  std::vector<quantizer::QuantizerSpec> specs;
  specs.reserve(ranges.size());
  for (const auto& iv : ranges)
    specs.push_back(quantizer::QuantizerSpec::make(iv[0], iv[1], word_length));
  return specs;
}

SweepResult run_sweep(const ExperimentConfig& cfg, int n_threads) {
  validate_config(cfg);
  const auto model = system_by_name(cfg.system);
  const auto all = dynamics::simulate_trajectories(model, cfg.effective_sim());

  const int M = static_cast<int>(all.size());
  const int n_hold =
      static_cast<int>(std::floor(cfg.eval.holdout_fraction * M));
  dynamics::TrajectorySet train(all.begin(), all.end() - n_hold);
  dynamics::TrajectorySet holdout(all.end() - n_hold, all.end());
  const dynamics::TrajectorySet& eval_set =
      (cfg.eval.on_training || n_hold == 0) ? train : holdout;

  const dictionary::Dictionary dict =
      cfg.dictionary.n_centers > 0
          ? dictionary::make_tps_dictionary(2, cfg.dictionary.n_centers,
                                            cfg.dictionary.box,
                                            cfg.effective_dictionary_seed())
          : dictionary::make_identity_dictionary(2);

  auto [X, XPrime] = dynamics::build_snapshot_pairs(train);
  const edmd::KoopmanEstimate reference = edmd::fit_edmd(X, XPrime, dict);

  SweepResult result;
  result.summary.tool_version = kToolVersion;
  result.summary.config_hash = config_hash(cfg);
  result.summary.ref_mean_rel_pred_error =
      mean_prediction_error(reference, eval_set);

  std::vector<std::vector<quantizer::QuantizerSpec>> specs_per_b;
  std::vector<double> eps_per_b;
  for (int b : cfg.quantizer.word_lengths) {
    auto specs =
        cfg.quantizer.range_policy == QuantizerConfig::RangePolicy::Auto
            ? auto_ranges(train, b)
            : explicit_ranges(cfg.quantizer.ranges, b);
    double eps = 0.0;
    for (const auto& s : specs) eps = std::max(eps, s.resolution);
    specs_per_b.push_back(std::move(specs));
    eps_per_b.push_back(eps);
  }

  SweepContext ctx;
  ctx.cfg = &cfg;
  ctx.dict = &dict;
  ctx.reference = &reference;
  ctx.train = &train;
  ctx.eval = &eval_set;
  ctx.specs_per_b = &specs_per_b;
  ctx.eps_per_b = &eps_per_b;

  const std::size_t n_tasks =
      cfg.quantizer.word_lengths.size() * static_cast<std::size_t>(cfg.trials);
  result.records.resize(n_tasks);

  // tasks are pure and write disjoint slots, so the table is identical for
  // any worker count
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      const int b_index = static_cast<int>(i / static_cast<std::size_t>(cfg.trials));
      const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
      result.records[i] = run_task(ctx, b_index, trial);
    }
  };

  const int threads = std::min<int>(resolve_threads(n_threads),
                                    static_cast<int>(n_tasks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

SweepResult run_recovery(const ExperimentConfig& cfg, int n_threads) {
  if (cfg.dictionary.n_centers != 0)
    throw std::invalid_argument(
        "recovery requires the identity dictionary (dictionary.n_centers = 0); "
        "the closed-form correction is only valid when the observables are "
        "the state coordinates themselves");
  return run_sweep(cfg, n_threads);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty())
    throw std::invalid_argument("percentile: empty value list");
  if (!(p >= 0.0 && p <= 100.0))
    throw std::invalid_argument("percentile: rank must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::string report_text(const std::vector<ResultRecord>& records) {
  if (records.empty()) return "(no records)\n";

  struct Group {
    double epsilon = 0.0;
    std::vector<double> rel_K, pred, recovery;
    long saturation = 0;
  };
  std::map<std::pair<std::string, int>, Group> groups;
  for (const auto& r : records) {
    Group& g = groups[{r.system, r.word_length}];
    g.epsilon = r.epsilon;
    g.rel_K.push_back(r.rel_K_error);
    g.pred.push_back(r.mean_rel_pred_error);
    if (r.recovery_rel_K_error) g.recovery.push_back(*r.recovery_rel_K_error);
    g.saturation += r.saturation_count;
  }

  std::string out =
      "system        b  trials     epsilon    relK_p25    relK_p50    relK_p75"
      "    pred_p25    pred_p50    pred_p75   recov_p50  saturation\n";
  char line[256];
  for (const auto& [key, g] : groups) {
    char recov[16];
    if (g.recovery.empty()) {
      std::snprintf(recov, sizeof recov, "%11s", "-");
    } else {
      std::snprintf(recov, sizeof recov, "%11.3e",
                    percentile(g.recovery, 50.0));
    }
    std::snprintf(line, sizeof line,
                  "%-11s %3d  %6zu %11.3e %11.3e %11.3e %11.3e %11.3e %11.3e "
                  "%11.3e %s %11ld\n",
                  key.first.c_str(), key.second, g.rel_K.size(), g.epsilon,
                  percentile(g.rel_K, 25.0), percentile(g.rel_K, 50.0),
                  percentile(g.rel_K, 75.0), percentile(g.pred, 25.0),
                  percentile(g.pred, 50.0), percentile(g.pred, 75.0), recov,
                  g.saturation);
    out += line;
  }
  return out;
}

}  // namespace dqedmd::harness
