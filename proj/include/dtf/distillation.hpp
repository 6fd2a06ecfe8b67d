#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtf/checkpoint.hpp"
#include "dtf/data.hpp"
#include "dtf/evaluation.hpp"
#include "dtf/model.hpp"
#include "dtf/teacher_gcn.hpp"

namespace dtf {

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient (a missing gradient counts as zero). Throws NumericError before
// touching anything if a gradient is non-finite.
void adam_step(const ParameterList& params, AdamState& state, const AdamSettings& settings);

struct DistillationConfig {
  double alpha = 0.2;  // soft-loss weight (student vs teacher)
  double beta = 0.8;   // hard-loss weight (student vs ground truth)
  AdamSettings adam;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 300;
  std::size_t patience = 15;
  std::uint64_t seed = 42;

  // Throws ConfigError unless alpha, beta lie in [0,1] with alpha + beta = 1,
  // batch_size, patience, max_epochs >= 1 and the learning rate is positive.
  void validate() const;
};

inline constexpr double kWeightSumTolerance = 1e-9;

// The five (alpha, beta) pairs of the trade-off study.
inline constexpr std::array<std::pair<double, double>, 5> kDefaultSweepPairs = {
    {{0.1, 0.9}, {0.3, 0.7}, {0.5, 0.5}, {0.7, 0.3}, {0.9, 0.1}}};

// alpha·MSE(y_student, y_teacher) + beta·MSE(y_student, y_true). Teacher and
// truth are treated as constants.
Tensor total_loss(const Tensor& y_student, const Tensor& y_teacher, const Tensor& y_true, double alpha, double beta);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::string label;
  double alpha = 0.0;
  double beta = 1.0;
  bool distilled = false;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
  double wall_seconds = 0.0;
  std::optional<MetricTriple> test;
};

struct TrainOptions {
  bool record_timing = false;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Trains `student` against the weighted soft/hard objective. Per batch the
// frozen teacher is evaluated without a tape, the student with one, and only
// student parameters are updated. Model selection (and early stopping) use
// the validation hard loss; the best parameters are restored on return.
TrainReport distill_train(Forecaster& student, const FrozenTeacher& teacher, const PreparedDataset& data,
                          const DistillationConfig& config, const TrainOptions& options = {});

// Same loop with the hard loss only and no teacher.
TrainReport train_baseline(Forecaster& model, const PreparedDataset& data, const DistillationConfig& config,
                           const TrainOptions& options = {});

struct PretrainedTeacher {
  FrozenTeacher teacher;
  TrainReport report;
};

// Fits the teacher to ground truth (hard loss only) and freezes the best
// validation checkpoint.
PretrainedTeacher pretrain_teacher(std::shared_ptr<Forecaster> teacher, const PreparedDataset& data,
                                   const DistillationConfig& config, const TrainOptions& options = {});

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double mse = 0.0;  // raw-unit test MSE
  double normalized_mse = 0.0;
};

using StudentFactory = std::function<std::unique_ptr<Forecaster>()>;

// One distill_train per pair with a fresh student from `factory`;
// normalized_mse divides each MSE by the largest in the sweep.
std::vector<SweepRow> alpha_sweep(const StudentFactory& factory, const FrozenTeacher& teacher,
                                  const PreparedDataset& data, const std::vector<std::pair<double, double>>& pairs,
                                  const DistillationConfig& config, const EvaluationOptions& eval = {},
                                  const TrainOptions& options = {});

}  // namespace dtf
