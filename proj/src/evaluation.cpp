#include "dtf/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "dtf/errors.hpp"
#include "dtf/log.hpp"
#include "dtf/model.hpp"

namespace dtf {
namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* metric) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(metric) + ": prediction length " + std::to_string(a.size()) +
                         " != truth length " + std::to_string(b.size()));
  }
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred, truth, "mse");
  if (pred.empty()) throw DimensionError("mse: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> truth, double floor) {
  require_same_length(pred, truth, "mape");
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] < floor) continue;
    total += std::abs(pred[i] - truth[i]) / truth[i];
    ++used;
  }
  if (used == 0) {
    log_warning("mape: every ground-truth value is below the floor; reporting 0");
    return 0.0;
  }
  return total / static_cast<double>(used);
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred, truth, "r2");
  if (truth.size() < 2) throw DataError("r2 needs at least two samples");
  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= static_cast<double>(truth.size());
  double residual = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    residual += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    spread += (truth[i] - mean) * (truth[i] - mean);
  }
  if (spread == 0.0) throw DataError("r2 undefined: ground truth is constant");
  return 1.0 - residual / spread;
}

MetricTriple metric_triple(std::span<const double> pred, std::span<const double> truth, double mape_floor) {
  return {mse(pred, truth), mape(pred, truth, mape_floor), r2(pred, truth)};
}

ForwardFn forward_fn(const Forecaster& model) {
  return [&model](const Matrix& window) { return model.forward(window).to_matrix(); };
}

EvaluationResult evaluate_model(const ForwardFn& forward, const PreparedDataset& data, SplitRange range,
                                const EvaluationOptions& options) {
  const WindowSet windows = data.windows(range);
  if (windows.empty()) throw DataError("evaluation range holds no complete window");
  const std::size_t n = data.nodes(), h = data.horizon, l = data.input_steps;
  const Matrix& raw = *data.raw;

  std::vector<double> pred, truth;
  pred.reserve(windows.size() * n * h);
  truth.reserve(windows.size() * n * h);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const Matrix out = forward(windows.input(k));
    if (out.rows != n || out.cols != h) {
      throw DimensionError("model output is " + std::to_string(out.rows) + "x" + std::to_string(out.cols) +
                           ", expected " + std::to_string(n) + "x" + std::to_string(h));
    }
    const std::size_t s = windows.start(k);
    for (std::size_t node = 0; node < n; ++node)
      for (std::size_t step = 0; step < h; ++step) {
        pred.push_back(data.stats.denormalize(out(node, step)));
        truth.push_back(raw(s + l + step, node));
      }
  }

  EvaluationResult result;
  result.samples = pred.size();
  result.overall = metric_triple(pred, truth, options.mape_floor);
  if (options.per_horizon) {
    for (std::size_t step = 0; step < h; ++step) {
      std::vector<double> p, t;
      for (std::size_t i = step; i < pred.size(); i += h) {
        p.push_back(pred[i]);
        t.push_back(truth[i]);
      }
      result.per_horizon.push_back(metric_triple(p, t, options.mape_floor));
    }
  }
  return result;
}

std::vector<SplitRange> split_periods(std::size_t steps, std::size_t k) {
  if (k < 2) throw ConfigError("period count must be >= 2");
  if (steps < k) throw DataError("fewer time steps than periods");
  const std::size_t len = steps / k;
  std::vector<SplitRange> ranges;
  for (std::size_t i = 0; i < k; ++i) ranges.push_back({i * len, i + 1 == k ? steps : (i + 1) * len});
  return ranges;
}

MetricTriple variance_of(const std::vector<MetricTriple>& triples) {
  if (triples.empty()) return {};
  const double n = static_cast<double>(triples.size());
  MetricTriple mean, var;
  for (const auto& t : triples) {
    mean.mse += t.mse / n;
    mean.mape += t.mape / n;
    mean.r2 += t.r2 / n;
  }
  for (const auto& t : triples) {
    var.mse += (t.mse - mean.mse) * (t.mse - mean.mse) / n;
    var.mape += (t.mape - mean.mape) * (t.mape - mean.mape) / n;
    var.r2 += (t.r2 - mean.r2) * (t.r2 - mean.r2) / n;
  }
  return var;
}

PeriodReport periodwise_evaluate(const ForwardFn& forward, const PreparedDataset& data, std::size_t k,
                                 const EvaluationOptions& options, std::size_t threads) {
  PeriodReport report;
  report.ranges = split_periods(data.steps(), k);
  report.metrics.assign(k, std::nullopt);

  auto run = [&](std::size_t i) {
    const SplitRange r = report.ranges[i];
    if (r.size() < data.input_steps + data.horizon) return;
    report.metrics[i] = evaluate_model(forward, data, r, options).overall;
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < k; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, k); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < k; i = next++) {
          try {
            run(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<MetricTriple> present;
  for (const auto& m : report.metrics)
    if (m) present.push_back(*m);
  report.variance = variance_of(present);
  return report;
}

}  // namespace dtf
