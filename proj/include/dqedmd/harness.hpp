#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dqedmd/dynamics.hpp"
#include "dqedmd/edmd.hpp"
#include "dqedmd/quantizer.hpp"

namespace dqedmd::harness {

inline constexpr const char* kToolVersion = "dqedmd 0.1.0";

struct DictionaryConfig {
  int n_centers = 0;
  std::vector<std::array<double, 2>> box = {{{-1.0, 1.0}}, {{-1.0, 1.0}}};
  // center seed; derived from master_seed when unset
  std::optional<std::uint64_t> seed;
};

struct QuantizerConfig {
  enum class RangePolicy { Auto, Explicit };

  std::vector<int> word_lengths = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  RangePolicy range_policy = RangePolicy::Auto;
  // per-component [u_min, u_max]; Explicit policy only
  std::vector<std::array<double, 2>> ranges;
};

struct EvalConfig {
  double holdout_fraction = 0.2;
  bool on_training = false;
};

struct ExperimentConfig {
  // config files accept pendulum | vanderpol; the linear oracle systems are
  // reachable programmatically via system_by_name
  std::string system = "pendulum";
  dynamics::SimConfig sim;  // sim.seed is ignored unless sim_seed is set
  std::optional<std::uint64_t> sim_seed;
  DictionaryConfig dictionary;
  QuantizerConfig quantizer;
  int trials = 20;
  EvalConfig eval;
  std::uint64_t master_seed = 1;
  std::string output_path = "results.csv";

  std::uint64_t effective_sim_seed() const;
  std::uint64_t effective_dictionary_seed() const;
  dynamics::SimConfig effective_sim() const;
};

// Parses and validates a JSON experiment config; unknown keys are rejected
// by name, missing optional fields take documented defaults.
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

// Stable hash of the logical config content (seeds included, output path
// excluded); lands in the results metadata line.
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct ResultRecord {
  std::string system;
  int word_length = 0;
  double epsilon = 0.0;  // max per-component resolution at this word length
  int trial_index = 0;
  double rel_K_error = 0.0;
  double mean_rel_pred_error = 0.0;
  std::optional<double> recovery_rel_K_error;
  long saturation_count = 0;
  double gram_condition = 0.0;
  double runtime_seconds = 0.0;
};

struct SweepSummary {
  std::string tool_version = kToolVersion;
  std::uint64_t config_hash = 0;
  double ref_mean_rel_pred_error = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::vector<ResultRecord> records;  // sorted by (word-length position, trial)
  SweepSummary summary;
};

// Simulates once, fits the unquantized reference once, then runs one DQ fit
// per (word_length, trial) with independent dither seeds derived from
// master_seed. Identity-dictionary configs also get the regularized
// recovery error per row. Deterministic for a fixed config regardless of
// n_threads (0 picks hardware concurrency).
SweepResult run_sweep(const ExperimentConfig& cfg, int n_threads = 0);

// Recovery comparison; requires an identity-dictionary (n_centers == 0)
// config because the closed-form regularizer is derived for plain DMD.
SweepResult run_recovery(const ExperimentConfig& cfg, int n_threads = 0);

// CSV with one metadata comment line (tool version, config hash, reference
// prediction error), a fixed header, and one row per record at full
// floating-point round-trip precision.
void write_results(const std::vector<ResultRecord>& records,
                   const SweepSummary& summary, const std::string& path);
std::vector<ResultRecord> read_results(const std::string& path,
                                       SweepSummary* summary = nullptr);

// Per-word-length median/quartile text table.
std::string report_text(const std::vector<ResultRecord>& records);

// Linear-interpolation percentile on a copy of the values, p in [0, 100].
double percentile(std::vector<double> values, double p);

// pendulum | vanderpol, plus the test-only "linear" map (not listed by the
// CLI).
dynamics::SystemModel system_by_name(const std::string& name);

// Range policies: one QuantizerSpec per state component. Auto widens the
// per-component data range by 5% on each side plus eps/2, so in-range
// samples cannot saturate even after dithering.
std::vector<quantizer::QuantizerSpec> auto_ranges(
    const dynamics::TrajectorySet& train, int word_length);
std::vector<quantizer::QuantizerSpec> explicit_ranges(
    const std::vector<std::array<double, 2>>& ranges, int word_length);

// Trajectory CSV: header trajectory_id,t,x1,x2 with one state per line.
void write_trajectories(const dynamics::TrajectorySet& set,
                        const std::string& path);
dynamics::TrajectorySet read_trajectories(const std::string& path);

}  // namespace dqedmd::harness
