#include "dtf/config.hpp"

#include <cstdlib>
#include <fstream>

#include "dtf/errors.hpp"

namespace dtf {

using nlohmann::json;

namespace {

json training_json(const DistillationConfig& c, bool with_weights) {
  json j = {{"learning_rate", c.adam.learning_rate},
            {"adam_beta1", c.adam.beta1},
            {"adam_beta2", c.adam.beta2},
            {"adam_epsilon", c.adam.epsilon},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience}};
  if (with_weights) {
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
  }
  return j;
}

void read_training(const json& j, DistillationConfig& c, bool with_weights) {
  c.adam.learning_rate = j.at("learning_rate").get<double>();
  c.adam.beta1 = j.at("adam_beta1").get<double>();
  c.adam.beta2 = j.at("adam_beta2").get<double>();
  c.adam.epsilon = j.at("adam_epsilon").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  if (with_weights) {
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
  }
}

// Every key in `user` must exist in `reference`; objects are checked
// recursively, arrays and scalars are replaced wholesale.
void check_known_keys(const json& user, const json& reference, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    if (value.is_object()) check_known_keys(value, reference.at(key), here);
  }
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

json RunConfig::to_json() const {
  json pairs = json::array();
  for (const auto& [a, b] : sweep_pairs) pairs.push_back({a, b});
  return {
      {"seed", seed},
      {"output_dir", output_dir},
      {"record_timing", record_timing},
      {"data",
       {{"speeds", data.speeds},
        {"adjacency", data.adjacency},
        {"input_steps", data.input_steps},
        {"horizon", data.horizon},
        {"split", data.split}}},
      {"synth",
       {{"nodes", synth.nodes},
        {"steps", synth.steps},
        {"classes", synth.classes},
        {"graph_density", synth.graph_density},
        {"noise_std", synth.noise_std},
        {"steps_per_day", synth.steps_per_day}}},
      {"student",
       {{"d_model", student.d_model},
        {"heads", student.heads},
        {"spatial_layers", student.spatial_layers},
        {"temporal_layers", student.temporal_layers},
        {"d_ff", student.d_ff},
        {"branch", to_string(student.branch)},
        {"positional", to_string(student.positional)}}},
      {"teacher",
       {{"hidden", teacher.hidden},
        {"checkpoint", teacher.checkpoint},
        {"training", training_json(teacher.training, false)}}},
      {"distill", training_json(distill, true)},
      {"sweep", {{"pairs", pairs}}},
      {"eval",
       {{"mape_floor", eval.mape_floor},
        {"per_horizon", eval.per_horizon},
        {"periods", eval.periods},
        {"retrain_per_period", eval.retrain_per_period},
        {"threads", eval.threads}}},
  };
}

RunConfig RunConfig::from_json(const json& overrides) {
  if (!overrides.is_object()) throw ConfigError("config must be a JSON object");
  json doc = defaults().to_json();
  check_known_keys(overrides, doc, "");
  doc.merge_patch(overrides);

  RunConfig c;
  try {
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.output_dir = doc.at("output_dir").get<std::string>();
    c.record_timing = doc.at("record_timing").get<bool>();

    const json& d = doc.at("data");
    c.data.speeds = d.at("speeds").get<std::string>();
    c.data.adjacency = d.at("adjacency").get<std::string>();
    c.data.input_steps = d.at("input_steps").get<std::size_t>();
    c.data.horizon = d.at("horizon").get<std::size_t>();
    c.data.split = d.at("split").get<std::array<double, 3>>();

    const json& s = doc.at("synth");
    c.synth.nodes = s.at("nodes").get<std::size_t>();
    c.synth.steps = s.at("steps").get<std::size_t>();
    c.synth.classes = s.at("classes").get<std::size_t>();
    c.synth.graph_density = s.at("graph_density").get<double>();
    c.synth.noise_std = s.at("noise_std").get<double>();
    c.synth.steps_per_day = s.at("steps_per_day").get<std::size_t>();

    const json& m = doc.at("student");
    c.student.d_model = m.at("d_model").get<std::size_t>();
    c.student.heads = m.at("heads").get<std::size_t>();
    c.student.spatial_layers = m.at("spatial_layers").get<std::size_t>();
    c.student.temporal_layers = m.at("temporal_layers").get<std::size_t>();
    c.student.d_ff = m.at("d_ff").get<std::size_t>();
    c.student.branch = parse_branch_mode(m.at("branch").get<std::string>());
    c.student.positional = parse_positional(m.at("positional").get<std::string>());

    const json& t = doc.at("teacher");
    c.teacher.hidden = t.at("hidden").get<std::size_t>();
    c.teacher.checkpoint = t.at("checkpoint").get<std::string>();
    read_training(t.at("training"), c.teacher.training, false);

    read_training(doc.at("distill"), c.distill, true);

    c.sweep_pairs.clear();
    for (const auto& p : doc.at("sweep").at("pairs")) {
      if (!p.is_array() || p.size() != 2) throw ConfigError("sweep pairs must be [alpha, beta] arrays");
      c.sweep_pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    }

    const json& e = doc.at("eval");
    c.eval.mape_floor = e.at("mape_floor").get<double>();
    c.eval.per_horizon = e.at("per_horizon").get<bool>();
    c.eval.periods = e.at("periods").get<std::size_t>();
    c.eval.retrain_per_period = e.at("retrain_per_period").get<bool>();
    c.eval.threads = e.at("threads").get<std::size_t>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed config: ") + ex.what());
  }
  c.distill.seed = c.seed;
  c.teacher.training.seed = c.seed + 1;
  c.synth.seed = c.seed;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
  return from_json(doc);
}

void RunConfig::validate() const {
  distill.validate();
  DistillationConfig teacher_check = teacher.training;
  teacher_check.alpha = 0.0;
  teacher_check.beta = 1.0;
  teacher_check.validate();
  if (sweep_pairs.empty()) throw ConfigError("sweep needs at least one (alpha, beta) pair");
  for (const auto& [a, b] : sweep_pairs) {
    if (!(a >= 0.0 && b >= 0.0) || std::abs(a + b - 1.0) > kWeightSumTolerance) {
      throw ConfigError("sweep pair (" + std::to_string(a) + ", " + std::to_string(b) + ") violates alpha + beta = 1");
    }
  }
  if (data.input_steps == 0 || data.horizon == 0) throw ConfigError("input_steps and horizon must be positive");
  const double split_sum = data.split[0] + data.split[1] + data.split[2];
  if (std::abs(split_sum - 1.0) > 1e-9) throw ConfigError("data.split ratios must sum to 1");
  student_for(1).validate();
  if (teacher.hidden < 1) throw ConfigError("teacher.hidden must be >= 1");
  if (data.speeds.empty()) {
    synth.validate();
    if (synth.steps < data.input_steps + data.horizon) {
      throw ConfigError("synthetic series of " + std::to_string(synth.steps) + " steps is shorter than L+H");
    }
  }
  if (eval.periods == 1) throw ConfigError("eval.periods must be 0 (off) or >= 2");
  if (eval.threads < 1) throw ConfigError("eval.threads must be >= 1");
}

std::filesystem::path RunConfig::resolved_output_dir() const {
  std::filesystem::path out(output_dir);
  if (out.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
      out = std::filesystem::path(root) / out;
    }
  }
  return out;
}

std::filesystem::path RunConfig::teacher_checkpoint_path() const {
  return teacher.checkpoint.empty() ? resolved_output_dir() / "teacher.ckpt" : std::filesystem::path(teacher.checkpoint);
}

DualTransformerConfig RunConfig::student_for(std::size_t nodes) const {
  DualTransformerConfig m = student;
  m.nodes = nodes;
  m.input_steps = data.input_steps;
  m.horizon = data.horizon;
  return m;
}

TgcnConfig RunConfig::teacher_for(std::size_t nodes) const {
  return {nodes, data.input_steps, data.horizon, teacher.hidden};
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("empty component in override key " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("override key " + key + " descends into a non-object");
    node = &child;
    pos = dot + 1;
  }
}

}  // namespace dtf
