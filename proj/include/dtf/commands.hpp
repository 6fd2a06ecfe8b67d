#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtf/config.hpp"
#include "dtf/distillation.hpp"
#include "dtf/evaluation.hpp"

namespace dtf {

// What a pipeline command hands back to its caller besides the files it
// writes under the output directory.
struct CommandOutput {
  nlohmann::json report;
  std::string table;  // human-readable rendering of the same numbers
};

enum class EvalTarget { student, teacher, both };
EvalTarget parse_eval_target(const std::string& text);

// Loads the configured CSV files, or generates the synthetic dataset when no
// speed file is configured. With `require_network` a missing adjacency is a
// DataError.
SpeedDataset load_dataset(const RunConfig& config, bool require_network);

CommandOutput cmd_synth(const RunConfig& config);
CommandOutput cmd_train_teacher(const RunConfig& config);
CommandOutput cmd_distill(const RunConfig& config, bool ablation);
CommandOutput cmd_sweep(const RunConfig& config);
CommandOutput cmd_eval(const RunConfig& config, EvalTarget target);

// Shortest decimal text that reads back to the same double.
std::string format_real(double value);

nlohmann::json to_json(const MetricTriple& m);
nlohmann::json to_json(const TrainReport& report);
void write_epochs_csv(const std::filesystem::path& path, const TrainReport& report);

// Aligned (name, MSE, MAPE, R²) table.
std::string metrics_table(const std::vector<std::pair<std::string, MetricTriple>>& rows);

}  // namespace dtf
