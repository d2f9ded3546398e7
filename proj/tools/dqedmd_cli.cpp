#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dqedmd/dictionary.hpp"
#include "dqedmd/dynamics.hpp"
#include "dqedmd/edmd.hpp"
#include "dqedmd/harness.hpp"
#include "dqedmd/quantizer.hpp"
#include "dqedmd/rng.hpp"

namespace {

using namespace dqedmd;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::vector<int> bits;
  int threads = 0;
};

harness::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  harness::ExperimentConfig cfg = harness::load_config(args.config_path);
  if (args.seed) cfg.master_seed = *args.seed;
  if (!args.bits.empty()) cfg.quantizer.word_lengths = args.bits;
  if (!args.output.empty()) cfg.output_path = args.output;
  harness::validate_config(cfg);
  return cfg;
}

int cmd_simulate(const CommonArgs& args) {
  harness::ExperimentConfig cfg = load_with_overrides(args);
  const auto model = harness::system_by_name(cfg.system);
  const auto set = dynamics::simulate_trajectories(model, cfg.effective_sim());
  const std::string path =
      args.output.empty() ? "trajectories.csv" : args.output;
  harness::write_trajectories(set, path);
  std::cout << "wrote " << set.size() << " trajectories ("
            << set.front().cols() << " states each) to " << path << "\n";
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& trajectory_path) {
  harness::ExperimentConfig cfg = load_with_overrides(args);
  const auto model = harness::system_by_name(cfg.system);

  dynamics::TrajectorySet set;
  if (trajectory_path.empty()) {
    set = dynamics::simulate_trajectories(model, cfg.effective_sim());
  } else {
    set = harness::read_trajectories(trajectory_path);
  }

  const dictionary::Dictionary dict =
      cfg.dictionary.n_centers > 0
          ? dictionary::make_tps_dictionary(2, cfg.dictionary.n_centers,
                                            cfg.dictionary.box,
                                            cfg.effective_dictionary_seed())
          : dictionary::make_identity_dictionary(2);

  edmd::ModelMetadata meta;
  meta.system = cfg.system;
  meta.dt = cfg.sim.dt;

  long saturation = 0;
  edmd::KoopmanEstimate est = [&] {
    if (args.bits.empty()) {
      auto [X, XPrime] = dynamics::build_snapshot_pairs(set);
      return edmd::fit_edmd(X, XPrime, dict);
    }
    if (args.bits.size() != 1)
      throw std::invalid_argument("fit takes a single --bits value");
    const int b = args.bits.front();
    const auto specs =
        cfg.quantizer.range_policy ==
                harness::QuantizerConfig::RangePolicy::Auto
            ? harness::auto_ranges(set, b)
            : harness::explicit_ranges(cfg.quantizer.ranges, b);
    meta.word_length = b;
    meta.quantizers = specs;
    // same dither seeding scheme as sweep trial 0 of this word length
    const std::uint64_t task_seed =
        rng::derive_seed(cfg.master_seed, static_cast<std::uint64_t>(b), 0);
    dynamics::TrajectorySet decoded;
    decoded.reserve(set.size());
    for (std::size_t m = 0; m < set.size(); ++m) {
      quantizer::DitherStream dither(
          rng::derive_seed(task_seed, static_cast<std::uint64_t>(m), 1));
      auto q = quantizer::quantize_trajectory(specs, set[m], dither);
      saturation += q.saturation_count;
      decoded.push_back(std::move(q.decoded));
    }
    auto [Xd, XdPrime] = dynamics::build_snapshot_pairs(decoded);
    return edmd::fit_dq_edmd(Xd, XdPrime, dict);
  }();

  const std::string path = args.output.empty() ? "model.json" : args.output;
  edmd::save_model(est, meta, path);
  std::cout << "fit " << (args.bits.empty() ? "unquantized" : "dither-quantized")
            << " model (N=" << est.K.rows()
            << ", residual=" << est.fit.residual;
  if (!args.bits.empty()) std::cout << ", saturated=" << saturation;
  std::cout << ") to " << path << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, bool recovery_only) {
  harness::ExperimentConfig cfg = load_with_overrides(args);
  const harness::SweepResult result =
      recovery_only ? harness::run_recovery(cfg, args.threads)
                    : harness::run_sweep(cfg, args.threads);
  harness::write_results(result.records, result.summary, cfg.output_path);
  std::cout << "wrote " << result.records.size() << " records to "
            << cfg.output_path << " (reference prediction error "
            << result.summary.ref_mean_rel_pred_error << ")\n";
  return 0;
}

int cmd_report(const std::string& csv_path) {
  harness::SweepSummary summary;
  const auto records = harness::read_results(csv_path, &summary);
  if (!summary.tool_version.empty()) {
    std::cout << summary.tool_version << ", reference prediction error "
              << summary.ref_mean_rel_pred_error << "\n";
  }
  std::cout << harness::report_text(records);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dither-quantized Koopman operator identification toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string trajectory_path;
  std::string csv_path;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* config_opt =
        sub->add_option("--config", args.config_path, "experiment config file");
    if (needs_config) config_opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "override master_seed");
    sub->add_option("--output", args.output, "output path");
    sub->add_option("--bits", args.bits, "word length override, e.g. 4,6,8")
        ->delimiter(',');
    sub->add_option("--threads", args.threads,
                    "worker threads (0 = hardware concurrency)");
  };

  auto* simulate =
      app.add_subcommand("simulate", "simulate trajectories to a CSV file");
  add_common(simulate, true);

  auto* fit = app.add_subcommand(
      "fit", "fit a Koopman model, optionally from an existing trajectory file");
  fit->add_option("trajectories", trajectory_path,
                  "trajectory CSV (simulated per config when omitted)")
      ->check(CLI::ExistingFile);
  add_common(fit, true);

  auto* sweep = app.add_subcommand(
      "sweep", "word-length sweep with Monte-Carlo dither trials");
  add_common(sweep, true);

  auto* recover = app.add_subcommand(
      "recover", "sweep plus regularized recovery (identity dictionary)");
  add_common(recover, true);

  auto* report =
      app.add_subcommand("report", "per-word-length summary of a results CSV");
  report->add_option("results", csv_path, "results CSV path")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (fit->parsed()) return cmd_fit(args, trajectory_path);
    if (sweep->parsed()) return cmd_sweep(args, false);
    if (recover->parsed()) return cmd_sweep(args, true);
    if (report->parsed()) return cmd_report(csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
