#include "dqedmd/harness.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "dqedmd/rng.hpp"

namespace dqedmd::harness {

namespace {

using nlohmann::json;

// seed-derivation tags for streams the config may leave unseeded; both sit
// outside the word-length range [1, 52] used for sweep task seeds
constexpr std::uint64_t kSimSeedTag = 1001;
constexpr std::uint64_t kDictSeedTag = 1002;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("config: " + msg);
}

std::string qualify(const std::string& scope, const std::string& key) {
  return scope.empty() ? key : scope + "." + key;
}

void reject_unknown_keys(const json& obj, const std::string& scope,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail("unknown key \"" + qualify(scope, item.key()) + "\"");
  }
}

const json* find(const json& obj, const std::string& /*scope*/, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& scope, const char* key,
                  double fallback) {
  const json* v = find(obj, scope, key);
  if (!v) return fallback;
  if (!v->is_number()) fail("field \"" + qualify(scope, key) + "\" must be a number");
  return v->get<double>();
}

int get_int(const json& obj, const std::string& scope, const char* key,
            int fallback) {
  const json* v = find(obj, scope, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    fail("field \"" + qualify(scope, key) + "\" must be an integer");
  return v->get<int>();
}

std::uint64_t get_seed(const json& obj, const std::string& scope,
                       const char* key, std::uint64_t fallback) {
  const json* v = find(obj, scope, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
    fail("field \"" + qualify(scope, key) + "\" must be a non-negative integer");
  return v->get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& scope, const char* key,
              bool fallback) {
  const json* v = find(obj, scope, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail("field \"" + qualify(scope, key) + "\" must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& scope,
                       const char* key, const std::string& fallback) {
  const json* v = find(obj, scope, key);
  if (!v) return fallback;
  if (!v->is_string()) fail("field \"" + qualify(scope, key) + "\" must be a string");
  return v->get<std::string>();
}

std::vector<std::array<double, 2>> get_intervals(const json& obj,
                                                 const std::string& scope,
                                                 const char* key,
                                                 std::vector<std::array<double, 2>> fallback) {
  const json* v = find(obj, scope, key);
  if (!v) return fallback;
  const std::string where = qualify(scope, key);
  if (!v->is_array())
    fail("field \"" + where + "\" must be an array of [lo, hi] pairs");
  std::vector<std::array<double, 2>> out;
  for (const auto& e : *v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      fail("field \"" + where + "\" must be an array of [lo, hi] pairs");
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

}  // namespace

std::uint64_t ExperimentConfig::effective_sim_seed() const {
  if (sim_seed) return *sim_seed;
  return rng::derive_seed(master_seed, kSimSeedTag, 0);
}

std::uint64_t ExperimentConfig::effective_dictionary_seed() const {
  if (dictionary.seed) return *dictionary.seed;
  return rng::derive_seed(master_seed, kDictSeedTag, 0);
}

dynamics::SimConfig ExperimentConfig::effective_sim() const {
  dynamics::SimConfig out = sim;
  out.seed = effective_sim_seed();
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open \"" + path + "\"");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("parse failure in \"" + path + "\": " + e.what());
  }
  if (!root.is_object()) fail("top level must be an object");

  reject_unknown_keys(root, "", {"system", "sim", "dictionary", "quantizer",
                                 "trials", "eval", "master_seed", "output"});

  ExperimentConfig cfg;

  // system is the only required field; every other field takes the
  // desk-scale default documented in the README
  const json* sys = find(root, "", "system");
  if (!sys) fail("missing required field \"system\"");
  if (!sys->is_string()) fail("field \"system\" must be a string");
  cfg.system = sys->get<std::string>();
  if (cfg.system != "pendulum" && cfg.system != "vanderpol")
    fail("field \"system\" must be \"pendulum\" or \"vanderpol\", got \"" +
         cfg.system + "\"");

  cfg.master_seed = get_seed(root, "", "master_seed", 1);
  cfg.trials = get_int(root, "", "trials", 20);
  cfg.output_path = get_string(root, "", "output", "results.csv");

  cfg.sim.dt = 0.01;
  cfg.sim.steps = 1000;
  cfg.sim.n_trajectories = 50;
  cfg.sim.init_box = {{{-1.0, 1.0}}, {{-1.0, 1.0}}};
  if (const json* sim = find(root, "", "sim")) {
    if (!sim->is_object()) fail("field \"sim\" must be an object");
    reject_unknown_keys(*sim, "sim",
                        {"dt", "steps", "n_trajectories", "init_box", "seed"});
    cfg.sim.dt = get_double(*sim, "sim", "dt", cfg.sim.dt);
    cfg.sim.steps = get_int(*sim, "sim", "steps", cfg.sim.steps);
    cfg.sim.n_trajectories =
        get_int(*sim, "sim", "n_trajectories", cfg.sim.n_trajectories);
    cfg.sim.init_box = get_intervals(*sim, "sim", "init_box", cfg.sim.init_box);
    if (find(*sim, "sim", "seed"))
      cfg.sim_seed = get_seed(*sim, "sim", "seed", 0);
  }

  cfg.dictionary.n_centers = 50;
  cfg.dictionary.box = {{{-1.0, 1.0}}, {{-1.0, 1.0}}};
  if (const json* dict = find(root, "", "dictionary")) {
    if (!dict->is_object()) fail("field \"dictionary\" must be an object");
    reject_unknown_keys(*dict, "dictionary", {"n_centers", "box", "seed"});
    cfg.dictionary.n_centers =
        get_int(*dict, "dictionary", "n_centers", cfg.dictionary.n_centers);
    cfg.dictionary.box =
        get_intervals(*dict, "dictionary", "box", cfg.dictionary.box);
    if (find(*dict, "dictionary", "seed"))
      cfg.dictionary.seed = get_seed(*dict, "dictionary", "seed", 0);
  }

  if (const json* q = find(root, "", "quantizer")) {
    if (!q->is_object()) fail("field \"quantizer\" must be an object");
    reject_unknown_keys(*q, "quantizer",
                        {"word_lengths", "range_policy", "ranges"});
    if (const json* wl = find(*q, "quantizer", "word_lengths")) {
      if (!wl->is_array()) fail("field \"quantizer.word_lengths\" must be an array");
      cfg.quantizer.word_lengths.clear();
      for (const auto& e : *wl) {
        if (!e.is_number_integer())
          fail("field \"quantizer.word_lengths\" must contain integers");
        cfg.quantizer.word_lengths.push_back(e.get<int>());
      }
    }
    std::string policy = get_string(*q, "quantizer", "range_policy", "auto");
    if (policy == "auto") {
      cfg.quantizer.range_policy = QuantizerConfig::RangePolicy::Auto;
    } else if (policy == "explicit") {
      cfg.quantizer.range_policy = QuantizerConfig::RangePolicy::Explicit;
    } else {
      fail("field \"quantizer.range_policy\" must be \"auto\" or \"explicit\"");
    }
    cfg.quantizer.ranges =
        get_intervals(*q, "quantizer", "ranges", cfg.quantizer.ranges);
  }

  if (const json* ev = find(root, "", "eval")) {
    if (!ev->is_object()) fail("field \"eval\" must be an object");
    reject_unknown_keys(*ev, "eval", {"holdout_fraction", "on_training"});
    cfg.eval.holdout_fraction =
        get_double(*ev, "eval", "holdout_fraction", cfg.eval.holdout_fraction);
    cfg.eval.on_training =
        get_bool(*ev, "eval", "on_training", cfg.eval.on_training);
  }

  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  try {
    system_by_name(cfg.system);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  if (!(cfg.sim.dt > 0.0)) fail("field \"sim.dt\" must be positive");
  if (cfg.sim.steps < 1) fail("field \"sim.steps\" must be at least 1");
  if (cfg.sim.n_trajectories < 1)
    fail("field \"sim.n_trajectories\" must be at least 1");
  if (cfg.sim.init_box.size() != 2)
    fail("field \"sim.init_box\" must list exactly 2 intervals");
  for (const auto& iv : cfg.sim.init_box)
    if (!(iv[1] > iv[0])) fail("field \"sim.init_box\" intervals must have lo < hi");
  if (cfg.dictionary.n_centers < 0)
    fail("field \"dictionary.n_centers\" must be non-negative");
  if (cfg.dictionary.n_centers > 0) {
    if (cfg.dictionary.box.size() != 2)
      fail("field \"dictionary.box\" must list exactly 2 intervals");
    for (const auto& iv : cfg.dictionary.box)
      if (!(iv[1] > iv[0])) fail("field \"dictionary.box\" intervals must have lo < hi");
  }
  if (cfg.quantizer.word_lengths.empty())
    fail("field \"quantizer.word_lengths\" must not be empty");
  for (int b : cfg.quantizer.word_lengths)
    if (b < 1 || b > 52)
      fail("field \"quantizer.word_lengths\" entries must lie in [1, 52]");
  if (cfg.quantizer.range_policy == QuantizerConfig::RangePolicy::Explicit) {
    if (cfg.quantizer.ranges.size() != 2)
      fail("field \"quantizer.ranges\" must list exactly 2 intervals under the explicit policy");
    for (const auto& iv : cfg.quantizer.ranges)
      if (!(iv[1] > iv[0])) fail("field \"quantizer.ranges\" intervals must have lo < hi");
  }
  if (cfg.trials < 1) fail("field \"trials\" must be at least 1");
  if (!(cfg.eval.holdout_fraction >= 0.0 && cfg.eval.holdout_fraction < 1.0))
    fail("field \"eval.holdout_fraction\" must lie in [0, 1)");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // canonical dump of the logical content; output_path is excluded so the
  // same experiment written to two files carries the same hash
  json j;
  j["system"] = cfg.system;
  j["sim"]["dt"] = cfg.sim.dt;
  j["sim"]["steps"] = cfg.sim.steps;
  j["sim"]["n_trajectories"] = cfg.sim.n_trajectories;
  j["sim"]["init_box"] = cfg.sim.init_box;
  if (cfg.sim_seed) j["sim"]["seed"] = *cfg.sim_seed;
  j["dictionary"]["n_centers"] = cfg.dictionary.n_centers;
  j["dictionary"]["box"] = cfg.dictionary.box;
  if (cfg.dictionary.seed) j["dictionary"]["seed"] = *cfg.dictionary.seed;
  j["quantizer"]["word_lengths"] = cfg.quantizer.word_lengths;
  j["quantizer"]["range_policy"] =
      cfg.quantizer.range_policy == QuantizerConfig::RangePolicy::Auto
          ? "auto"
          : "explicit";
  j["quantizer"]["ranges"] = cfg.quantizer.ranges;
  j["trials"] = cfg.trials;
  j["eval"]["holdout_fraction"] = cfg.eval.holdout_fraction;
  j["eval"]["on_training"] = cfg.eval.on_training;
  j["master_seed"] = cfg.master_seed;

  const std::string bytes = j.dump();
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a 64
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace dqedmd::harness
