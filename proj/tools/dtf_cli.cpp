// Command-line front end. Everything goes through the C interface in dtf.h.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtf/dtf.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string output_dir;
  std::optional<unsigned long long> seed;
  std::string speeds;
  std::string adjacency;
  std::vector<std::string> overrides;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "JSON run-config file (keys not given keep their defaults)");
  cmd->add_option("-o,--output", f.output_dir, "output directory (relative paths resolve against $DTF_OUTPUT_ROOT)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--speeds", f.speeds, "speed CSV (T rows x N columns); omit for synthetic data");
  cmd->add_option("--adjacency", f.adjacency, "N x N adjacency CSV");
  cmd->add_option("--set", f.overrides, "config override key.path=value (repeatable)");
  cmd->add_flag("--json", f.json, "print the JSON report instead of the table");
}

class Config {
 public:
  ~Config() { dtf_config_destroy(handle_); }
  dtf_config* get() const { return handle_; }
  dtf_config** out() { return &handle_; }

 private:
  dtf_config* handle_ = nullptr;
};

int report_error(dtf_status status) {
  std::cerr << "error: " << dtf_last_error() << "\n";
  return static_cast<int>(status);
}

dtf_status set(Config& cfg, const std::string& assignment) { return dtf_config_set(cfg.get(), assignment.c_str()); }

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Builds the config: file first, then flags, then --set overrides.
dtf_status build_config(const CommonFlags& f, const std::vector<std::string>& extra, Config& cfg) {
  dtf_status st = f.config_path.empty() ? dtf_config_create(cfg.out())
                                        : dtf_config_load(f.config_path.c_str(), cfg.out());
  if (st != DTF_OK) return st;
  std::vector<std::string> assignments;
  if (!f.output_dir.empty()) assignments.push_back("output_dir=" + json_string(f.output_dir));
  if (f.seed) assignments.push_back("seed=" + std::to_string(*f.seed));
  if (!f.speeds.empty()) assignments.push_back("data.speeds=" + json_string(f.speeds));
  if (!f.adjacency.empty()) assignments.push_back("data.adjacency=" + json_string(f.adjacency));
  assignments.insert(assignments.end(), extra.begin(), extra.end());
  assignments.insert(assignments.end(), f.overrides.begin(), f.overrides.end());
  for (const auto& a : assignments) {
    if ((st = set(cfg, a)) != DTF_OK) return st;
  }
  return dtf_config_validate(cfg.get());
}

int emit(dtf_status status, char* report, char* table, bool json) {
  if (status != DTF_OK) return report_error(status);
  std::fputs(json ? report : table, stdout);
  if (json) std::fputc('\n', stdout);
  dtf_string_free(report);
  dtf_string_free(table);
  return 0;
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-Transformer traffic speed forecasting with a graph-based teacher"};
  app.set_version_flag("--version", dtf_version());
  app.require_subcommand(1);

  CommonFlags flags;

  auto* synth = app.add_subcommand("synth", "generate the synthetic speed, adjacency and class files");
  add_common(synth, flags);

  auto* teacher = app.add_subcommand("train-teacher", "pretrain the TGCN teacher and write its checkpoint");
  add_common(teacher, flags);

  std::optional<double> alpha, beta;
  bool ablation = false;
  auto* distill = app.add_subcommand("distill", "train the student against the frozen teacher");
  add_common(distill, flags);
  distill->add_option("--alpha", alpha, "weight of the teacher (soft) loss");
  distill->add_option("--beta", beta, "weight of the ground-truth (hard) loss");
  distill->add_flag("--ablation", ablation, "also train spatial-only and temporal-only students");

  auto* sweep = app.add_subcommand("sweep", "train one student per (alpha, beta) pair");
  add_common(sweep, flags);

  std::optional<std::size_t> periods, threads;
  bool retrain = false;
  std::string target = "both";
  auto* eval = app.add_subcommand("eval", "evaluate saved checkpoints on the test split");
  add_common(eval, flags);
  eval->add_option("--periods", periods, "also split the series into k consecutive periods");
  eval->add_flag("--retrain-per-period", retrain, "train a fresh student inside every period");
  eval->add_option("--threads", threads, "worker threads for period-wise evaluation")->check(CLI::PositiveNumber);
  eval->add_option("--model", target, "which checkpoint to evaluate")
      ->check(CLI::IsMember({"student", "teacher", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(DTF_ERR_CONFIG);
  }

  std::vector<std::string> extra;
  if (alpha) extra.push_back("distill.alpha=" + real(*alpha));
  if (beta) extra.push_back("distill.beta=" + real(*beta));
  if (periods) extra.push_back("eval.periods=" + std::to_string(*periods));
  if (threads) extra.push_back("eval.threads=" + std::to_string(*threads));
  if (retrain) extra.push_back("eval.retrain_per_period=true");

  Config cfg;
  if (dtf_status st = build_config(flags, extra, cfg); st != DTF_OK) return report_error(st);

  char* report = nullptr;
  char* table = nullptr;
  dtf_status st = DTF_ERR_INTERNAL;
  if (*synth) st = dtf_run_synth(cfg.get(), &report, &table);
  else if (*teacher) st = dtf_run_train_teacher(cfg.get(), &report, &table);
  else if (*distill) st = dtf_run_distill(cfg.get(), ablation ? 1 : 0, &report, &table);
  else if (*sweep) st = dtf_run_sweep(cfg.get(), &report, &table);
  else if (*eval) st = dtf_run_eval(cfg.get(), target.c_str(), &report, &table);
  return emit(st, report, table, flags.json);
}
