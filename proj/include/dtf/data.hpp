#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dtf/teacher_gcn.hpp"
#include "dtf/tensor.hpp"

namespace dtf {

inline constexpr std::size_t kDefaultInputSteps = 12;
inline constexpr std::size_t kDefaultHorizon = 12;
inline constexpr std::array<double, 3> kDefaultSplitRatios = {0.7, 0.2, 0.1};

struct SpeedDataset {
  Matrix speeds;  // T×N, rows ascending in time
  std::vector<std::string> node_ids;
  std::optional<RoadNetwork> network;
  std::vector<int> classes;  // latent class per node, synthetic data only

  std::size_t steps() const { return speeds.rows; }
  std::size_t nodes() const { return speeds.cols; }
  void attach_network(Matrix adjacency);
};

// Half-open interval of time-step indices.
struct SplitRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const SplitRange&) const = default;
};

struct SplitIndices {
  SplitRange train;
  SplitRange validation;
  SplitRange test;
};

// Train and validation lengths are floor(ratio·T); the remainder goes to test.
SplitIndices chronological_split(std::size_t steps, std::array<double, 3> ratios = kDefaultSplitRatios);

// Reads a rectangular numeric CSV (rows = time, columns = nodes) with an
// optional header row of node ids. Requires at least `min_steps` rows.
SpeedDataset load_speed_csv(const std::filesystem::path& path, std::size_t min_steps = 0);
void write_speed_csv(const std::filesystem::path& path, const SpeedDataset& dataset);

// N rows of N comma-separated nonnegative reals, no header.
Matrix load_adjacency_csv(const std::filesystem::path& path);
void write_adjacency_csv(const std::filesystem::path& path, const Matrix& adjacency);

// Global min-max scaling fitted on the training range.
struct NormalizationStats {
  double min = 0.0;
  double max = 1.0;

  double normalize(double v) const { return (v - min) / (max - min); }
  double denormalize(double v) const { return v * (max - min) + min; }
};

// Throws DataError if the training range is empty or constant.
NormalizationStats fit_min_max(const Matrix& speeds, SplitRange train);
Matrix normalize(const Matrix& speeds, const NormalizationStats& stats);
Matrix denormalize(const Matrix& values, const NormalizationStats& stats);

struct ForecastWindow {
  Matrix input;   // L×N
  Matrix target;  // H×N
  std::size_t start = 0;
};

// Stride-1 windows over one split range of a series, materialized lazily.
// Window k starts at range.begin + k; input rows [s, s+L), target rows
// [s+L, s+L+H). Windows never extend past range.end.
class WindowSet {
 public:
  WindowSet() = default;
  WindowSet(std::shared_ptr<const Matrix> series, SplitRange range, std::size_t input_steps, std::size_t horizon);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t start(std::size_t k) const { return range_.begin + k; }
  Matrix input(std::size_t k) const;
  Matrix target(std::size_t k) const;
  // Target laid out N×H, the orientation model outputs use.
  Matrix target_by_node(std::size_t k) const;
  ForecastWindow window(std::size_t k) const;

  std::size_t input_steps() const { return input_steps_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t nodes() const { return series_ ? series_->cols : 0; }
  SplitRange range() const { return range_; }

 private:
  Matrix rows(std::size_t first, std::size_t count) const;

  std::shared_ptr<const Matrix> series_;
  SplitRange range_;
  std::size_t input_steps_ = 0;
  std::size_t horizon_ = 0;
  std::size_t count_ = 0;
};

// Logs a warning and returns an empty set when the range is shorter than L+H.
WindowSet make_windows(std::shared_ptr<const Matrix> series, SplitRange range,
                       std::size_t input_steps = kDefaultInputSteps, std::size_t horizon = kDefaultHorizon);

struct SynthParams {
  std::size_t nodes = 24;
  std::size_t steps = 2016;  // one week at 5-minute resolution
  std::size_t classes = 3;
  double graph_density = 0.15;
  double noise_std = 0.05;
  std::uint64_t seed = 42;
  std::size_t steps_per_day = 288;

  void validate() const;
};

// Road segments with latent functional classes. Each class has a daily
// sinusoid (class-specific phase) plus class-specific morning and evening
// rush-hour dips; a node's series is its class signal plus a constant node
// offset plus Gaussian noise, scaled to km/h. The adjacency is a random
// geometric graph drawn independently of the classes, so pattern similarity
// and graph proximity are decoupled.
SpeedDataset synth_generate(const SynthParams& params);

// Writes speeds.csv, adjacency.csv and classes.csv into `dir`.
void write_synthetic(const std::filesystem::path& dir, const SpeedDataset& dataset);

// Pearson correlation of two node columns.
double column_correlation(const Matrix& series, std::size_t a, std::size_t b);


// A dataset after splitting and normalization: everything a training or
// evaluation run needs, shared read-only between them.
struct PreparedDataset {
  std::shared_ptr<const Matrix> raw;         // T×N, original units
  std::shared_ptr<const Matrix> normalized;  // T×N, train-split min-max scaled
  NormalizationStats stats;
  SplitIndices split;
  std::size_t input_steps = kDefaultInputSteps;
  std::size_t horizon = kDefaultHorizon;
  std::optional<RoadNetwork> network;

  std::size_t steps() const { return raw->rows; }
  std::size_t nodes() const { return raw->cols; }
  WindowSet windows(SplitRange range) const;
  WindowSet train_windows() const { return windows(split.train); }
  WindowSet validation_windows() const { return windows(split.validation); }
  WindowSet test_windows() const { return windows(split.test); }
};

// Throws DataError when T < L+H.
PreparedDataset prepare(const SpeedDataset& dataset, std::size_t input_steps = kDefaultInputSteps,
                        std::size_t horizon = kDefaultHorizon,
                        std::array<double, 3> ratios = kDefaultSplitRatios);

}  // namespace dtf
