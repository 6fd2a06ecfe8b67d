#include "dtf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dtf/errors.hpp"
#include "dtf/log.hpp"

namespace dtf {

void SpeedDataset::attach_network(Matrix adjacency) {
  if (adjacency.rows != nodes()) {
    throw DataError("adjacency has " + std::to_string(adjacency.rows) + " nodes, speed data has " +
                    std::to_string(nodes()) + " columns");
  }
  network = RoadNetwork::from_adjacency(std::move(adjacency));
}

SplitIndices chronological_split(std::size_t steps, std::array<double, 3> ratios) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be nonnegative");
  }
  if (steps < 10) throw DataError("need at least 10 time steps to split, got " + std::to_string(steps));
  const double t = static_cast<double>(steps);
  const auto train = static_cast<std::size_t>(std::floor(ratios[0] * t + 1e-9));
  const auto val = static_cast<std::size_t>(std::floor(ratios[1] * t + 1e-9));
  SplitIndices s;
  s.train = {0, train};
  s.validation = {train, train + val};
  s.test = {train + val, steps};
  return s;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_numeric_csv(const std::filesystem::path& path, bool allow_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable table;
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size() && numeric; ++i) numeric = parse_number(cells[i], row[i]);
    if (!numeric) {
      if (allow_header && rows == 0 && table.header.empty()) {
        for (auto c : cells) table.header.emplace_back(c);
        cols = cells.size();
        continue;
      }
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (cols == 0) cols = cells.size();
    if (cells.size() != cols) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " cells, found " + std::to_string(cells.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": no data rows");
  table.values = Matrix(rows, cols, std::move(values));
  return table;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ofstream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out << (c ? "," : "") << format_number(m(r, c));
    out << '\n';
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

SpeedDataset load_speed_csv(const std::filesystem::path& path, std::size_t min_steps) {
  CsvTable table = read_numeric_csv(path, true);
  for (double v : table.values.values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError(path.string() + ": speeds must be finite and nonnegative");
  }
  if (table.values.rows < min_steps) {
    throw DataError(path.string() + ": " + std::to_string(table.values.rows) + " time steps, need at least " +
                    std::to_string(min_steps));
  }
  SpeedDataset ds;
  ds.speeds = std::move(table.values);
  ds.node_ids = std::move(table.header);
  if (ds.node_ids.empty()) {
    for (std::size_t i = 0; i < ds.nodes(); ++i) ds.node_ids.push_back(std::to_string(i));
  }
  return ds;
}

void write_speed_csv(const std::filesystem::path& path, const SpeedDataset& dataset) {
  auto out = open_for_write(path);
  write_matrix(out, dataset.speeds);
  if (!out) throw DataError("failed writing " + path.string());
}

Matrix load_adjacency_csv(const std::filesystem::path& path) {
  Matrix a = read_numeric_csv(path, false).values;
  if (a.rows != a.cols) {
    throw DataError(path.string() + ": adjacency must be square, got " + std::to_string(a.rows) + "x" +
                    std::to_string(a.cols));
  }
  for (double v : a.values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError(path.string() + ": adjacency entries must be nonnegative");
  }
  return a;
}

void write_adjacency_csv(const std::filesystem::path& path, const Matrix& adjacency) {
  auto out = open_for_write(path);
  write_matrix(out, adjacency);
  if (!out) throw DataError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Normalization

NormalizationStats fit_min_max(const Matrix& speeds, SplitRange train) {
  if (train.size() == 0 || train.end > speeds.rows) throw DataError("normalization needs a nonempty training range");
  const auto first = speeds.values.begin() + static_cast<std::ptrdiff_t>(train.begin * speeds.cols);
  const auto last = speeds.values.begin() + static_cast<std::ptrdiff_t>(train.end * speeds.cols);
  const auto [lo, hi] = std::minmax_element(first, last);
  if (*hi == *lo) throw DataError("training data is constant; min-max normalization undefined");
  return {*lo, *hi};
}

Matrix normalize(const Matrix& speeds, const NormalizationStats& stats) {
  Matrix out = speeds;
  for (double& v : out.values) v = stats.normalize(v);
  return out;
}

Matrix denormalize(const Matrix& values, const NormalizationStats& stats) {
  Matrix out = values;
  for (double& v : out.values) v = stats.denormalize(v);
  return out;
}

// ---------------------------------------------------------------------------
// Windows

WindowSet::WindowSet(std::shared_ptr<const Matrix> series, SplitRange range, std::size_t input_steps,
                     std::size_t horizon)
    : series_(std::move(series)), range_(range), input_steps_(input_steps), horizon_(horizon) {
  if (range_.end > series_->rows) throw DimensionError("window range extends past the series");
  const std::size_t span = input_steps_ + horizon_;
  count_ = range_.size() >= span ? range_.size() - span + 1 : 0;
}

Matrix WindowSet::rows(std::size_t first, std::size_t count) const {
  const std::size_t n = series_->cols;
  const auto begin = series_->values.begin() + static_cast<std::ptrdiff_t>(first * n);
  return Matrix(count, n, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * n)));
}

Matrix WindowSet::input(std::size_t k) const { return rows(start(k), input_steps_); }
Matrix WindowSet::target(std::size_t k) const { return rows(start(k) + input_steps_, horizon_); }
Matrix WindowSet::target_by_node(std::size_t k) const { return target(k).transposed(); }

ForecastWindow WindowSet::window(std::size_t k) const { return {input(k), target(k), start(k)}; }

WindowSet make_windows(std::shared_ptr<const Matrix> series, SplitRange range, std::size_t input_steps,
                       std::size_t horizon) {
  WindowSet set(std::move(series), range, input_steps, horizon);
  if (set.empty()) {
    log_warning("range [" + std::to_string(range.begin) + "," + std::to_string(range.end) +
                ") is shorter than input+horizon; no windows");
  }
  return set;
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthParams::validate() const {
  if (classes < 2 || nodes < classes) throw ConfigError("synthetic data needs nodes >= classes >= 2");
  if (steps < 10) throw ConfigError("synthetic data needs at least 10 steps");
  if (steps_per_day < 2) throw ConfigError("steps_per_day must be >= 2");
  if (!(graph_density >= 0.0 && graph_density <= 1.0)) throw ConfigError("graph_density must lie in [0,1]");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be nonnegative");
}

namespace {

constexpr double kBaseSpeed = 60.0;   // km/h
constexpr double kSpeedScale = 15.0;  // km/h per signal unit
constexpr double kDipDepth = 1.2;
constexpr double kDipWidthHours = 0.75;

double class_signal(std::size_t k, std::size_t classes, double hour) {
  const double frac = static_cast<double>(k) / static_cast<double>(classes);
  const double phase = 2.0 * std::numbers::pi * frac;
  const double morning = 6.0 + 6.0 * frac;
  const double evening = 15.0 + 6.0 * frac;
  auto dip = [](double dh) { return std::exp(-0.5 * (dh * dh) / (kDipWidthHours * kDipWidthHours)); };
  return std::sin(2.0 * std::numbers::pi * hour / 24.0 + phase) -
         kDipDepth * (dip(hour - morning) + dip(hour - evening));
}

}  // namespace

SpeedDataset synth_generate(const SynthParams& p) {
  p.validate();
  Rng rng(p.seed);

  std::vector<int> classes(p.nodes);
  for (std::size_t i = 0; i < p.nodes; ++i) classes[i] = static_cast<int>(i % p.classes);
  std::shuffle(classes.begin(), classes.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> offsets(p.nodes);
  for (double& o : offsets) o = unit(rng) - 0.5;

  // Random geometric graph: connect the closest `graph_density` fraction of pairs.
  std::vector<std::array<double, 2>> pos(p.nodes);
  for (auto& xy : pos) xy = {unit(rng), unit(rng)};
  std::vector<double> dist;
  for (std::size_t i = 0; i < p.nodes; ++i)
    for (std::size_t j = i + 1; j < p.nodes; ++j) dist.push_back(std::hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]));
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  const auto edges = static_cast<std::size_t>(std::round(p.graph_density * static_cast<double>(sorted.size())));
  const double radius = edges == 0 ? -1.0 : sorted[edges - 1];
  Matrix adjacency(p.nodes, p.nodes);
  for (std::size_t i = 0, e = 0; i < p.nodes; ++i)
    for (std::size_t j = i + 1; j < p.nodes; ++j, ++e)
      if (dist[e] <= radius) adjacency(i, j) = adjacency(j, i) = 1.0;

  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix speeds(p.steps, p.nodes);
  for (std::size_t t = 0; t < p.steps; ++t) {
    const double hour = 24.0 * static_cast<double>(t % p.steps_per_day) / static_cast<double>(p.steps_per_day);
    for (std::size_t i = 0; i < p.nodes; ++i) {
      const double s = class_signal(static_cast<std::size_t>(classes[i]), p.classes, hour);
      const double eps = p.noise_std > 0.0 ? p.noise_std * noise(rng) : 0.0;
      speeds(t, i) = std::max(0.0, kBaseSpeed + kSpeedScale * (s + offsets[i] + eps));
    }
  }

  SpeedDataset ds;
  ds.speeds = std::move(speeds);
  for (std::size_t i = 0; i < p.nodes; ++i) ds.node_ids.push_back(std::to_string(i));
  ds.classes = std::move(classes);
  ds.attach_network(std::move(adjacency));
  return ds;
}

void write_synthetic(const std::filesystem::path& dir, const SpeedDataset& dataset) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  write_speed_csv(dir / "speeds.csv", dataset);
  if (dataset.network) write_adjacency_csv(dir / "adjacency.csv", dataset.network->adjacency);
  auto out = open_for_write(dir / "classes.csv");
  out << "node,class\n";
  for (std::size_t i = 0; i < dataset.classes.size(); ++i) out << i << ',' << dataset.classes[i] << '\n';
  if (!out) throw DataError("failed writing classes.csv");
}

double column_correlation(const Matrix& series, std::size_t a, std::size_t b) {
  const std::size_t n = series.rows;
  double ma = 0.0, mb = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    ma += series(t, a);
    mb += series(t, b);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double da = series(t, a) - ma, db = series(t, b) - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return sab / std::sqrt(saa * sbb);
}


WindowSet PreparedDataset::windows(SplitRange range) const {
  return make_windows(normalized, range, input_steps, horizon);
}

PreparedDataset prepare(const SpeedDataset& dataset, std::size_t input_steps, std::size_t horizon,
                        std::array<double, 3> ratios) {
  if (input_steps == 0 || horizon == 0) throw ConfigError("input length and horizon must be positive");
  if (dataset.steps() < input_steps + horizon) {
    throw DataError("dataset has " + std::to_string(dataset.steps()) + " time steps, fewer than L+H = " +
                    std::to_string(input_steps + horizon));
  }
  PreparedDataset p;
  p.split = chronological_split(dataset.steps(), ratios);
  p.stats = fit_min_max(dataset.speeds, p.split.train);
  p.raw = std::make_shared<const Matrix>(dataset.speeds);
  p.normalized = std::make_shared<const Matrix>(normalize(dataset.speeds, p.stats));
  p.input_steps = input_steps;
  p.horizon = horizon;
  p.network = dataset.network;
  return p;
}

}  // namespace dtf
