#include "dtf/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "dtf/checkpoint.hpp"
#include "dtf/dual_transformer.hpp"
#include "dtf/errors.hpp"
#include "dtf/teacher_gcn.hpp"

namespace dtf {

using nlohmann::json;

namespace {

std::filesystem::path ensure_output_dir(const RunConfig& config) {
  const auto dir = config.resolved_output_dir();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void echo_config(const std::filesystem::path& dir, const RunConfig& config, const std::string& command) {
  write_json(dir / (command + ".config.json"), config.to_json());
}

// Extra checkpoint record holding the adjacency the teacher was trained on.
constexpr const char* kGraphRecord = "graph.adjacency";

std::uint64_t student_seed(const RunConfig& c) { return c.seed; }
std::uint64_t teacher_seed(const RunConfig& c) { return c.seed + 1; }

std::shared_ptr<TgcnTeacher> load_teacher(const RunConfig& config, const PreparedDataset& data) {
  if (!data.network) throw DataError("the teacher model takes the adjacency matrix as input; set data.adjacency");
  const auto path = config.teacher_checkpoint_path();
  if (!std::filesystem::exists(path)) {
    throw DataError("teacher checkpoint " + path.string() + " not found; run train-teacher first");
  }
  std::ifstream in(path, std::ios::binary);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  ParameterList stored = decode_checkpoint(bytes);
  if (stored.empty() || stored.back().name != kGraphRecord) {
    throw DataError("teacher checkpoint " + path.string() + " carries no graph record");
  }
  const Tensor graph = stored.back().tensor;
  stored.pop_back();
  const Matrix& adjacency = data.network->adjacency;
  if (graph.shape() != Shape{adjacency.rows, adjacency.cols}) {
    throw ConfigError("teacher was trained on " + std::to_string(graph.rows()) + " nodes, dataset has " +
                      std::to_string(data.nodes()));
  }
  if (!std::equal(graph.data().begin(), graph.data().end(), adjacency.values.begin())) {
    throw ConfigError("teacher was trained on a different adjacency matrix");
  }
  auto teacher = std::make_shared<TgcnTeacher>(TgcnTeacher::zeros(*data.network, config.teacher_for(data.nodes())));
  assign_values(stored, teacher->parameters());
  return teacher;
}

TrainOptions train_options(const RunConfig& config) {
  TrainOptions o;
  o.record_timing = config.record_timing;
  return o;
}

MetricTriple test_metrics(const Forecaster& model, const PreparedDataset& data, const RunConfig& config) {
  return evaluate_model(forward_fn(model), data, data.split.test, config.evaluation_options()).overall;
}

PreparedDataset prepared(const RunConfig& config, bool require_network) {
  return prepare(load_dataset(config, require_network), config.data.input_steps, config.data.horizon,
                 config.data.split);
}

}  // namespace

EvalTarget parse_eval_target(const std::string& text) {
  if (text == "student") return EvalTarget::student;
  if (text == "teacher") return EvalTarget::teacher;
  if (text == "both") return EvalTarget::both;
  throw ConfigError("eval target must be student, teacher or both, got '" + text + "'");
}

SpeedDataset load_dataset(const RunConfig& config, bool require_network) {
  SpeedDataset ds;
  if (config.data.speeds.empty()) {
    ds = synth_generate(config.synth);
  } else {
    ds = load_speed_csv(config.data.speeds, config.data.input_steps + config.data.horizon);
    if (!config.data.adjacency.empty()) ds.attach_network(load_adjacency_csv(config.data.adjacency));
  }
  if (require_network && !ds.network) {
    throw DataError("the teacher model takes the adjacency matrix as input; set data.adjacency");
  }
  return ds;
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

json to_json(const MetricTriple& m) { return {{"mse", m.mse}, {"mape", m.mape}, {"r2", m.r2}}; }

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"seconds", e.seconds}});
  }
  json j = {{"label", r.label},
            {"alpha", r.alpha},
            {"beta", r.beta},
            {"distilled", r.distilled},
            {"epochs", epochs},
            {"epoch_count", r.epochs.size()},
            {"best_epoch", r.best_epoch},
            {"best_val_loss", r.best_val_loss},
            {"early_stopped", r.early_stopped},
            {"wall_seconds", r.wall_seconds}};
  if (r.test) j["test"] = to_json(*r.test);
  return j;
}

void write_epochs_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,seconds\n";
  for (const auto& e : report.epochs) {
    os << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.val_loss) << ','
       << format_real(e.seconds) << '\n';
  }
  write_text(path, os.str());
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricTriple>>& rows) {
  std::vector<std::array<std::string, 4>> cells = {{"model", "MSE", "MAPE", "R2"}};
  for (const auto& [name, m] : rows) cells.push_back({name, format_real(m.mse), format_real(m.mape), format_real(m.r2)});
  std::array<std::size_t, 4> width{};
  for (const auto& row : cells)
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 4; ++c) {
      os << row[c] << std::string(width[c] - row[c].size(), ' ');
      os << (c + 1 < 4 ? "  " : "");
    }
    os << '\n';
  }
  return os.str();
}

CommandOutput cmd_synth(const RunConfig& config) {
  const auto dir = ensure_output_dir(config);
  echo_config(dir, config, "synth");
  const SpeedDataset ds = synth_generate(config.synth);
  write_synthetic(dir, ds);
  CommandOutput out;
  out.report = {{"steps", ds.steps()},
                {"nodes", ds.nodes()},
                {"classes", config.synth.classes},
                {"seed", config.synth.seed},
                {"files", {"speeds.csv", "adjacency.csv", "classes.csv"}}};
  std::ostringstream os;
  os << "wrote " << ds.steps() << "x" << ds.nodes() << " speeds.csv, adjacency.csv, classes.csv to " << dir.string()
     << '\n';
  out.table = os.str();
  return out;
}

CommandOutput cmd_train_teacher(const RunConfig& config) {
  const PreparedDataset data = prepared(config, true);
  const auto dir = ensure_output_dir(config);
  echo_config(dir, config, "train-teacher");

  auto teacher = std::make_shared<TgcnTeacher>(*data.network, config.teacher_for(data.nodes()), teacher_seed(config));
  PretrainedTeacher fitted = pretrain_teacher(teacher, data, config.teacher.training, train_options(config));
  fitted.report.test = test_metrics(*teacher, data, config);

  ParameterList stored = teacher->parameters();
  stored.push_back({kGraphRecord, Tensor::from(data.network->adjacency)});
  save_checkpoint(config.teacher_checkpoint_path(), stored);
  json report = to_json(fitted.report);
  report["parameter_count"] = parameter_count(*teacher);
  write_json(dir / "teacher_report.json", report);
  write_epochs_csv(dir / "teacher_epochs.csv", fitted.report);

  CommandOutput out;
  out.report = report;
  out.table = metrics_table({{"TGCN", *fitted.report.test}});
  return out;
}

CommandOutput cmd_distill(const RunConfig& config, bool ablation) {
  const PreparedDataset data = prepared(config, true);
  auto teacher_model = load_teacher(config, data);
  const FrozenTeacher teacher = FrozenTeacher::freeze(teacher_model, true);
  const auto dir = ensure_output_dir(config);
  echo_config(dir, config, "distill");

  const bool baseline = config.distill.alpha == 0.0;
  auto run = [&](BranchMode mode) {
    DualTransformerConfig mc = config.student_for(data.nodes());
    mc.branch = mode;
    auto student = std::make_unique<DualTransformer>(mc, student_seed(config));
    TrainReport report = distill_train(*student, teacher, data, config.distill, train_options(config));
    report.test = test_metrics(*student, data, config);
    return std::make_pair(std::move(student), std::move(report));
  };

  const MetricTriple teacher_test = test_metrics(*teacher_model, data, config);
  auto [student, report] = run(config.student.branch);

  json student_json = to_json(report);
  student_json["parameter_count"] = parameter_count(*student);
  student_json["branch"] = to_string(config.student.branch);
  student_json["no_distillation_baseline"] = baseline;
  if (baseline) student_json["note"] = "no-distillation baseline";
  save_checkpoint(dir / "student.ckpt", student->parameters());
  write_json(dir / "student_report.json", student_json);
  write_epochs_csv(dir / "student_epochs.csv", report);

  const std::string student_name = baseline ? "Dual-Transformer" : "TGCN-DT";
  json comparison = {{"columns", {"MSE", "MAPE", "R2"}},
                     {"rows", {{{"model", "TGCN"}, {"metrics", to_json(teacher_test)}},
                               {{"model", student_name}, {"metrics", to_json(*report.test)}}}}};
  write_json(dir / "comparison.json", comparison);
  std::string table = metrics_table({{"TGCN", teacher_test}, {student_name, *report.test}});
  write_text(dir / "comparison.txt", table);

  CommandOutput out;
  out.report = {{"student", student_json}, {"comparison", comparison}};

  if (ablation) {
    std::vector<std::pair<std::string, MetricTriple>> rows;
    json ablation_json = json::array();
    for (BranchMode mode : {BranchMode::dual, BranchMode::spatial_only, BranchMode::temporal_only}) {
      MetricTriple m;
      if (mode == config.student.branch) {
        m = *report.test;
      } else {
        auto [variant, variant_report] = run(mode);
        save_checkpoint(dir / ("student_" + to_string(mode) + ".ckpt"), variant->parameters());
        m = *variant_report.test;
      }
      rows.emplace_back(to_string(mode), m);
      ablation_json.push_back({{"branch", to_string(mode)}, {"metrics", to_json(m)}});
    }
    write_json(dir / "ablation.json", ablation_json);
    const std::string ablation_table = metrics_table(rows);
    write_text(dir / "ablation.txt", ablation_table);
    out.report["ablation"] = ablation_json;
    table += "\n" + ablation_table;
  }
  out.table = table;
  return out;
}

CommandOutput cmd_sweep(const RunConfig& config) {
  const PreparedDataset data = prepared(config, true);
  const FrozenTeacher teacher = FrozenTeacher::freeze(load_teacher(config, data), true);
  const auto dir = ensure_output_dir(config);
  echo_config(dir, config, "sweep");

  const DualTransformerConfig mc = config.student_for(data.nodes());
  const std::uint64_t seed = student_seed(config);
  const auto rows = alpha_sweep([&] { return std::make_unique<DualTransformer>(mc, seed); }, teacher, data,
                                config.sweep_pairs, config.distill, config.evaluation_options(),
                                train_options(config));

  std::ostringstream csv;
  csv << "alpha,beta,mse,normalized_mse\n";
  json rows_json = json::array();
  for (const auto& r : rows) {
    csv << format_real(r.alpha) << ',' << format_real(r.beta) << ',' << format_real(r.mse) << ','
        << format_real(r.normalized_mse) << '\n';
    rows_json.push_back({{"alpha", r.alpha}, {"beta", r.beta}, {"mse", r.mse}, {"normalized_mse", r.normalized_mse}});
  }
  write_text(dir / "sweep.csv", csv.str());
  write_json(dir / "sweep.json", rows_json);

  CommandOutput out;
  out.report = {{"rows", rows_json}};
  out.table = csv.str();
  return out;
}

CommandOutput cmd_eval(const RunConfig& config, EvalTarget target) {
  const PreparedDataset data = prepared(config, false);
  const auto dir = config.resolved_output_dir();
  const auto student_path = dir / "student.ckpt";
  const bool want_student = target != EvalTarget::teacher;
  const bool want_teacher = target != EvalTarget::student;
  if (target == EvalTarget::student && !std::filesystem::exists(student_path)) {
    throw DataError("student checkpoint " + student_path.string() + " not found; run distill first");
  }

  std::vector<std::pair<std::string, std::shared_ptr<Forecaster>>> models;
  if (want_teacher && (target == EvalTarget::teacher || std::filesystem::exists(config.teacher_checkpoint_path()))) {
    models.emplace_back("TGCN", load_teacher(config, data));
  }
  if (want_student && std::filesystem::exists(student_path)) {
    auto student = std::make_shared<DualTransformer>(DualTransformer::zeros(config.student_for(data.nodes())));
    load_checkpoint_into(student_path, student->parameters());
    models.emplace_back("Dual-Transformer", student);
  }
  if (models.empty()) throw DataError("no checkpoints found under " + dir.string());
  ensure_output_dir(config);
  echo_config(dir, config, "eval");

  const auto options = config.evaluation_options();
  json models_json = json::array();
  std::ostringstream table;
  std::vector<std::pair<std::string, MetricTriple>> overall_rows;
  for (const auto& [name, model] : models) {
    const EvaluationResult result = evaluate_model(forward_fn(*model), data, data.split.test, options);
    overall_rows.emplace_back(name, result.overall);
    json entry = {{"model", name}, {"test", to_json(result.overall)}, {"samples", result.samples}};
    if (options.per_horizon) {
      json per = json::array();
      for (const auto& m : result.per_horizon) per.push_back(to_json(m));
      entry["per_horizon"] = per;
    }
    models_json.push_back(entry);
  }
  table << metrics_table(overall_rows);

  if (config.eval.periods >= 2) {
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      const auto& [name, model] = models[mi];
      std::vector<std::pair<std::string, MetricTriple>> rows;
      json periods = json::array();
      std::vector<MetricTriple> present;
      const auto ranges = split_periods(data.steps(), config.eval.periods);
      if (config.eval.retrain_per_period && name != "TGCN") {
        for (std::size_t p = 0; p < ranges.size(); ++p) {
          json entry = {{"period", p + 1}, {"begin", ranges[p].begin}, {"end", ranges[p].end}};
          SpeedDataset slice;
          slice.speeds = Matrix(ranges[p].size(), data.nodes(),
                                std::vector<double>(data.raw->values.begin() + ranges[p].begin * data.nodes(),
                                                    data.raw->values.begin() + ranges[p].end * data.nodes()));
          try {
            const PreparedDataset sub = prepare(slice, config.data.input_steps, config.data.horizon, config.data.split);
            DualTransformer fresh(config.student_for(data.nodes()), student_seed(config));
            train_baseline(fresh, sub, config.distill, train_options(config));
            const MetricTriple m = test_metrics(fresh, sub, config);
            entry["metrics"] = to_json(m);
            rows.emplace_back("period " + std::to_string(p + 1), m);
            present.push_back(m);
          } catch (const DataError& e) {
            entry["metrics"] = nullptr;
            entry["note"] = e.what();
          }
          periods.push_back(entry);
        }
      } else {
        const PeriodReport report = periodwise_evaluate(forward_fn(*model), data, config.eval.periods, options,
                                                        config.eval.threads);
        for (std::size_t p = 0; p < report.ranges.size(); ++p) {
          json entry = {{"period", p + 1}, {"begin", report.ranges[p].begin}, {"end", report.ranges[p].end}};
          if (report.metrics[p]) {
            entry["metrics"] = to_json(*report.metrics[p]);
            rows.emplace_back("period " + std::to_string(p + 1), *report.metrics[p]);
            present.push_back(*report.metrics[p]);
          } else {
            entry["metrics"] = nullptr;
          }
          periods.push_back(entry);
        }
      }
      const MetricTriple variance = variance_of(present);
      models_json[mi]["periods"] = periods;
      models_json[mi]["period_variance"] = to_json(variance);
      rows.emplace_back("variance", variance);
      table << '\n' << name << " by period" << (config.eval.retrain_per_period && name != "TGCN" ? " (retrained)" : "")
            << '\n'
            << metrics_table(rows);
    }
  }

  json report = {{"models", models_json}};
  write_json(dir / "eval.json", report);
  write_text(dir / "eval.txt", table.str());
  CommandOutput out;
  out.report = report;
  out.table = table.str();
  return out;
}

}  // namespace dtf
