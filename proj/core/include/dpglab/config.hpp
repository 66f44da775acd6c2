/* JSON experiment configuration.
 *
 * The schema is fixed and closed: every object rejects keys it does not
 * know, so a misspelled hyperparameter fails the run instead of silently
 * training with a default. Parsing fills a plain struct with defaults for
 * absent fields; serialize() renders the canonical full form, and
 * parse(serialize(parse(text))) always equals parse(text).
 *
 * A task is either a catalog reference {"catalog": "single_marker"} or an
 * inline description with a sequence space, a base policy source, feature
 * rules with moment targets, and an optional pointwise filter.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpglab/ebm.hpp"
#include "dpglab/seqspace.hpp"
#include "dpglab/task.hpp"
#include "dpglab/trainer.hpp"

namespace dpglab {

struct PolicySource {
  enum class Kind { uniform, checkpoint, randomized };
  Kind kind = Kind::uniform;
  std::string checkpoint_path;  // checkpoint only
  std::uint64_t seed = 0;       // randomized only
  double scale = 1.0;           // randomized only
};

struct FeatureEntry {
  std::string id;
  std::string rule;
  double target = 0.0;
};

struct TaskConfig {
  // Non-empty selects a catalog task; all inline fields must be absent then.
  std::string catalog;

  std::string name = "custom";
  VocabSpec space{2, 1};
  PolicySource base_policy;
  TaskCategory category = TaskCategory::distributional;
  std::optional<std::string> filter_rule;
  std::vector<FeatureEntry> features;
  std::optional<std::vector<double>> lambdas;
};

struct SweepConfig {
  std::vector<int> batch_sizes{16, 64, 256};
  std::vector<std::uint64_t> seeds{0};
  std::vector<Method> methods;  // empty falls back to train.method
};

struct BenchConfig {
  int mc_batch = 2048;
};

struct ExperimentConfig {
  TaskConfig task;
  FitConfig fit;
  TrainConfig train;
  SweepConfig sweep;
  BenchConfig bench;
  std::vector<std::string> plot_inputs;
};

/* Throws std::invalid_argument with the offending key path on schema
 * violations. */
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

/* 64-bit FNV-1a of the canonical serialization, as fixed-width hex. */
std::string config_hash(const ExperimentConfig& cfg);

/* Materializes the task described by the config: catalog lookup, or base
 * policy construction plus feature parsing. Relative checkpoint paths
 * resolve against base_dir. Validates the result. */
Task build_task(const TaskConfig& tc, const std::string& base_dir);

}  // namespace dpglab
