#include "dtf/distillation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "dtf/errors.hpp"

namespace dtf {

void adam_step(const ParameterList& params, AdamState& state, const AdamSettings& s) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.tensor.size(), 0.0);
      state.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("adam: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].tensor.size()) {
      throw DimensionError("adam: moment shape mismatch for " + params[i].name);
    }
    for (double g : params[i].tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter " + params[i].name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(s.beta1, t);
  const double correction2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    auto grad = p.grad();
    auto values = p.mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = s.beta1 * m[j] + (1.0 - s.beta1) * g;
      v[j] = s.beta2 * v[j] + (1.0 - s.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
  }
}

void DistillationConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("alpha and beta must lie in [0,1]");
  }
  if (std::abs(alpha + beta - 1.0) > kWeightSumTolerance) {
    throw ConfigError("alpha + beta must equal 1 (got " + std::to_string(alpha) + " + " + std::to_string(beta) + ")");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam moment decay rates must lie in [0,1)");
  }
}

Tensor total_loss(const Tensor& y_student, const Tensor& y_teacher, const Tensor& y_true, double alpha,
                  double beta) {
  if (std::abs(alpha + beta - 1.0) > kWeightSumTolerance) throw ConfigError("alpha + beta must equal 1");
  if (y_student.shape() != y_teacher.shape() || y_student.shape() != y_true.shape()) {
    throw DimensionError("total_loss: student, teacher and truth shapes differ");
  }
  return ops::add(ops::scale(ops::mse_reduce(y_student, y_teacher), alpha),
                  ops::scale(ops::mse_reduce(y_student, y_true), beta));
}

namespace {

using Clock = std::chrono::steady_clock;

// Cap on cached teacher outputs (in doubles) before falling back to
// recomputing them per batch.
constexpr std::size_t kTeacherCacheLimit = std::size_t{32} << 20;

std::vector<std::vector<double>> snapshot(const ParameterList& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void restore(const ParameterList& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    std::copy(values[i].begin(), values[i].end(), t.mutable_data().begin());
  }
}

void check_compatible(const Forecaster& model, const PreparedDataset& data, const char* who) {
  if (model.nodes() != data.nodes() || model.input_steps() != data.input_steps || model.horizon() != data.horizon) {
    throw ConfigError(std::string(who) + " dimensions (N=" + std::to_string(model.nodes()) +
                      ", L=" + std::to_string(model.input_steps()) + ", H=" + std::to_string(model.horizon()) +
                      ") do not match the dataset (N=" + std::to_string(data.nodes()) +
                      ", L=" + std::to_string(data.input_steps) + ", H=" + std::to_string(data.horizon) + ")");
  }
}

double validation_hard_loss(const Forecaster& model, const WindowSet& windows) {
  NoTapeScope no_tape;
  double total = 0.0;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    total += ops::mse_reduce(model.forward(windows.input(k)), Tensor::from(windows.target_by_node(k))).item();
  }
  return total / static_cast<double>(windows.size());
}

TrainReport run_training(Forecaster& model, const FrozenTeacher* teacher, const PreparedDataset& data,
                         const DistillationConfig& config, const TrainOptions& options) {
  config.validate();
  check_compatible(model, data, "model");
  if (teacher) check_compatible(teacher->model(), data, "teacher");

  const WindowSet train = data.train_windows();
  const WindowSet val = data.validation_windows();
  if (train.empty()) throw DataError("training split holds no complete window");
  if (val.empty()) throw DataError("validation split holds no complete window");

  const auto started = Clock::now();
  const ParameterList params = model.parameters();
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
  }

  std::vector<Matrix> teacher_cache;
  if (teacher && train.size() * data.nodes() * data.horizon <= kTeacherCacheLimit) {
    teacher_cache.reserve(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) teacher_cache.push_back(teacher->forward(train.input(k)).to_matrix());
  }

  TrainReport report;
  report.alpha = teacher ? config.alpha : 0.0;
  report.beta = teacher ? config.beta : 1.0;
  report.distilled = teacher != nullptr;
  report.best_val_loss = std::numeric_limits<double>::infinity();

  Rng rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam;
  auto best = snapshot(params);
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;

    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      const double weight = 1.0 / static_cast<double>(last - first);
      // Gradients of the batch mean are accumulated window by window so the
      // tape only ever holds one forward pass.
      for (std::size_t b = first; b < last; ++b) {
        const std::size_t k = order[b];
        GradientTape tape;
        TapeScope scope(tape);
        Tensor prediction = model.forward(train.input(k));
        Tensor truth = Tensor::from(train.target_by_node(k));
        Tensor loss;
        if (teacher) {
          Tensor soft_target = teacher_cache.empty() ? teacher->forward(train.input(k))
                                                     : Tensor::from(teacher_cache[k]);
          loss = total_loss(prediction, soft_target, truth, config.alpha, config.beta);
        } else {
          loss = ops::scale(ops::mse_reduce(prediction, truth), 1.0);
        }
        epoch_loss += loss.item();
        tape.backward(ops::scale(loss, weight));
      }
      adam_step(params, adam, config.adam);
      for (const auto& p : params) Tensor(p.tensor).zero_grad();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_loss = validation_hard_loss(model, val);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    if (options.record_timing) rec.seconds = std::chrono::duration<double>(Clock::now() - epoch_start).count();
    report.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (rec.val_loss < report.best_val_loss) {
      report.best_val_loss = rec.val_loss;
      report.best_epoch = epoch;
      best = snapshot(params);
      stale = 0;
    } else if (++stale >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }

  restore(params, best);
  if (options.record_timing) report.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return report;
}

}  // namespace

TrainReport distill_train(Forecaster& student, const FrozenTeacher& teacher, const PreparedDataset& data,
                          const DistillationConfig& config, const TrainOptions& options) {
  if (!teacher.valid()) throw ContractError("distill_train needs a frozen teacher");
  if (teacher.model().nodes() != student.nodes() || teacher.model().horizon() != student.horizon()) {
    throw ConfigError("teacher and student disagree on node count or horizon");
  }
  TrainReport report = run_training(student, &teacher, data, config, options);
  report.label = student.kind() + "-distilled";
  return report;
}

TrainReport train_baseline(Forecaster& model, const PreparedDataset& data, const DistillationConfig& config,
                           const TrainOptions& options) {
  TrainReport report = run_training(model, nullptr, data, config, options);
  report.label = model.kind();
  return report;
}

PretrainedTeacher pretrain_teacher(std::shared_ptr<Forecaster> teacher, const PreparedDataset& data,
                                   const DistillationConfig& config, const TrainOptions& options) {
  if (!teacher) throw ContractError("pretrain_teacher: no model");
  DistillationConfig hard_only = config;
  hard_only.alpha = 0.0;
  hard_only.beta = 1.0;
  PretrainedTeacher out;
  out.report = run_training(*teacher, nullptr, data, hard_only, options);
  out.report.label = teacher->kind();
  out.teacher = FrozenTeacher::freeze(std::move(teacher), true);
  return out;
}

std::vector<SweepRow> alpha_sweep(const StudentFactory& factory, const FrozenTeacher& teacher,
                                  const PreparedDataset& data, const std::vector<std::pair<double, double>>& pairs,
                                  const DistillationConfig& config, const EvaluationOptions& eval,
                                  const TrainOptions& options) {
  for (const auto& [a, b] : pairs) {
    if (std::abs(a + b - 1.0) > kWeightSumTolerance) throw ConfigError("every sweep pair must satisfy alpha + beta = 1");
  }
  std::vector<SweepRow> rows;
  for (const auto& [a, b] : pairs) {
    DistillationConfig c = config;
    c.alpha = a;
    c.beta = b;
    auto student = factory();
    distill_train(*student, teacher, data, c, options);
    SweepRow row;
    row.alpha = a;
    row.beta = b;
    row.mse = evaluate_model(forward_fn(*student), data, data.split.test, eval).overall.mse;
    rows.push_back(row);
  }
  double peak = 0.0;
  for (const auto& r : rows) peak = std::max(peak, r.mse);
  for (auto& r : rows) r.normalized_mse = peak > 0.0 ? r.mse / peak : 0.0;
  return rows;
}

}  // namespace dtf
