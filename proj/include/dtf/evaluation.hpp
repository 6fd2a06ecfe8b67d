#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dtf/data.hpp"

namespace dtf {

struct MetricTriple {
  double mse = 0.0;
  double mape = 0.0;
  double r2 = 0.0;
};

// (1/n) Σ (pred − truth)².
double mse(std::span<const double> pred, std::span<const double> truth);

// (1/n') Σ |pred − truth| / truth over the n' terms with truth >= floor.
// Returns 0 (with a warning) when every term is excluded.
double mape(std::span<const double> pred, std::span<const double> truth, double floor = 1.0);

// 1 − Σ(truth − pred)² / Σ(truth − mean(truth))². Throws DataError for
// n < 2 or constant truth.
double r2(std::span<const double> pred, std::span<const double> truth);

MetricTriple metric_triple(std::span<const double> pred, std::span<const double> truth, double mape_floor = 1.0);

// Maps a normalized L×N window to a normalized N×H forecast.
using ForwardFn = std::function<Matrix(const Matrix&)>;

ForwardFn forward_fn(const class Forecaster& model);

struct EvaluationOptions {
  double mape_floor = 1.0;
  bool per_horizon = false;
};

struct EvaluationResult {
  MetricTriple overall;
  std::vector<MetricTriple> per_horizon;  // filled when requested
  std::size_t samples = 0;                // flattened (window, node, step) count
};

// Runs `forward` on every window of `range`, denormalizes, and scores the
// flattened predictions against the raw speeds.
EvaluationResult evaluate_model(const ForwardFn& forward, const PreparedDataset& data, SplitRange range,
                                const EvaluationOptions& options = {});

struct PeriodReport {
  std::vector<SplitRange> ranges;
  std::vector<std::optional<MetricTriple>> metrics;  // nullopt: period too short for a window
  MetricTriple variance;                             // population variance over non-empty periods
};

// k consecutive periods of floor(T/k) steps (the last one takes the
// remainder).
std::vector<SplitRange> split_periods(std::size_t steps, std::size_t k);

// Evaluates each period independently; `threads` > 1 fans periods out over
// a worker pool.
PeriodReport periodwise_evaluate(const ForwardFn& forward, const PreparedDataset& data, std::size_t k,
                                 const EvaluationOptions& options = {}, std::size_t threads = 1);

MetricTriple variance_of(const std::vector<MetricTriple>& triples);

}  // namespace dtf
