#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtf/data.hpp"
#include "dtf/distillation.hpp"
#include "dtf/dual_transformer.hpp"
#include "dtf/evaluation.hpp"
#include "dtf/teacher_gcn.hpp"

namespace dtf {

// Environment variable naming the root that relative output directories
// resolve against.
inline constexpr const char* kOutputRootEnv = "DTF_OUTPUT_ROOT";

struct DataSettings {
  std::string speeds;     // empty: generate synthetic data from `synth`
  std::string adjacency;  // optional for the student, required by the teacher
  std::size_t input_steps = kDefaultInputSteps;
  std::size_t horizon = kDefaultHorizon;
  std::array<double, 3> split = kDefaultSplitRatios;
};

struct TeacherSettings {
  std::size_t hidden = 64;
  std::string checkpoint;  // empty: <output_dir>/teacher.ckpt
  DistillationConfig training;  // alpha/beta ignored, teacher fits ground truth
};

struct EvalSettings {
  double mape_floor = 1.0;
  bool per_horizon = false;
  std::size_t periods = 0;  // 0: no period-wise table
  bool retrain_per_period = false;
  std::size_t threads = 1;
};

// Fully resolved run configuration. Serialized as JSON; every key has a
// default, so a config file only needs the keys it changes.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string output_dir = "runs";
  bool record_timing = false;
  DataSettings data;
  SynthParams synth;
  DualTransformerConfig student;  // `nodes` is taken from the dataset
  TeacherSettings teacher;
  DistillationConfig distill;
  std::vector<std::pair<double, double>> sweep_pairs{kDefaultSweepPairs.begin(), kDefaultSweepPairs.end()};
  EvalSettings eval;

  static RunConfig defaults();
  // Merges `overrides` onto the defaults. Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& overrides);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Throws ConfigError for alpha + beta != 1, heads not dividing d_model,
  // malformed sweep pairs, bad split ratios, or synthetic T < L+H.
  void validate() const;

  std::filesystem::path resolved_output_dir() const;
  std::filesystem::path teacher_checkpoint_path() const;
  DualTransformerConfig student_for(std::size_t nodes) const;
  TgcnConfig teacher_for(std::size_t nodes) const;
  EvaluationOptions evaluation_options() const { return {eval.mape_floor, eval.per_horizon}; }
};

// Applies a dotted-path override such as "distill.alpha=0.3". The value is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace dtf
