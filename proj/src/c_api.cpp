#include "dtf/dtf.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "dtf/commands.hpp"
#include "dtf/config.hpp"
#include "dtf/dual_transformer.hpp"
#include "dtf/errors.hpp"

struct dtf_config {
  nlohmann::json overrides = nlohmann::json::object();
};

struct dtf_dataset {
  dtf::SpeedDataset data;
};

struct dtf_model {
  std::unique_ptr<dtf::DualTransformer> model;
};

namespace {

thread_local std::string g_last_error;

dtf_status fail(dtf_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating library exceptions into status codes.
template <typename F>
dtf_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return DTF_OK;
  } catch (const dtf::ConfigError& e) {
    return fail(DTF_ERR_CONFIG, e.what());
  } catch (const dtf::DimensionError& e) {
    return fail(DTF_ERR_CONFIG, e.what());
  } catch (const dtf::DataError& e) {
    return fail(DTF_ERR_DATA, e.what());
  } catch (const dtf::NumericError& e) {
    return fail(DTF_ERR_NUMERIC, e.what());
  } catch (const dtf::ContractError& e) {
    return fail(DTF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DTF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DTF_ERR_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool condition, const char* message) {
  if (!condition) throw dtf::ContractError(message);
}

dtf::RunConfig resolve(const dtf_config* config) {
  require(config != nullptr, "config handle is NULL");
  return dtf::RunConfig::from_json(config->overrides);
}

void hand_out(const dtf::CommandOutput& result, char** report_json, char** table) {
  if (report_json) *report_json = duplicate(result.report.dump(2));
  if (table) *table = duplicate(result.table);
}

}  // namespace

extern "C" {

const char* dtf_version(void) { return "1.0.0"; }

const char* dtf_last_error(void) { return g_last_error.c_str(); }

void dtf_string_free(char* s) { std::free(s); }

dtf_status dtf_config_create(dtf_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = new dtf_config();
  });
}

dtf_status dtf_config_load(const char* path, dtf_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path or out is NULL");
    dtf::RunConfig::load(path);  // surfaces parse and validation errors now
    std::ifstream in(path);
    auto cfg = std::make_unique<dtf_config>();
    cfg->overrides = nlohmann::json::parse(in, nullptr, true, true);
    *out = cfg.release();
  });
}

dtf_status dtf_config_set(dtf_config* config, const char* assignment) {
  return guarded([&] {
    require(config != nullptr && assignment != nullptr, "config or assignment is NULL");
    dtf::apply_override(config->overrides, assignment);
  });
}

dtf_status dtf_config_validate(const dtf_config* config) {
  return guarded([&] { resolve(config); });
}

dtf_status dtf_config_to_json(const dtf_config* config, char** json_out) {
  return guarded([&] {
    require(json_out != nullptr, "json_out is NULL");
    *json_out = duplicate(resolve(config).to_json().dump(2));
  });
}

void dtf_config_destroy(dtf_config* config) { delete config; }

dtf_status dtf_run_synth(const dtf_config* config, char** report_json, char** table) {
  return guarded([&] { hand_out(dtf::cmd_synth(resolve(config)), report_json, table); });
}

dtf_status dtf_run_train_teacher(const dtf_config* config, char** report_json, char** table) {
  return guarded([&] { hand_out(dtf::cmd_train_teacher(resolve(config)), report_json, table); });
}

dtf_status dtf_run_distill(const dtf_config* config, int ablation, char** report_json, char** table) {
  return guarded([&] { hand_out(dtf::cmd_distill(resolve(config), ablation != 0), report_json, table); });
}

dtf_status dtf_run_sweep(const dtf_config* config, char** report_json, char** table) {
  return guarded([&] { hand_out(dtf::cmd_sweep(resolve(config)), report_json, table); });
}

dtf_status dtf_run_eval(const dtf_config* config, const char* target, char** report_json, char** table) {
  return guarded([&] {
    const auto which = dtf::parse_eval_target(target ? target : "both");
    hand_out(dtf::cmd_eval(resolve(config), which), report_json, table);
  });
}

dtf_status dtf_dataset_load(const dtf_config* config, dtf_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    auto ds = std::make_unique<dtf_dataset>();
    ds->data = dtf::load_dataset(resolve(config), false);
    *out = ds.release();
  });
}

dtf_status dtf_dataset_shape(const dtf_dataset* dataset, size_t* steps, size_t* nodes) {
  return guarded([&] {
    require(dataset != nullptr, "dataset handle is NULL");
    if (steps) *steps = dataset->data.steps();
    if (nodes) *nodes = dataset->data.nodes();
  });
}

dtf_status dtf_dataset_speeds(const dtf_dataset* dataset, double* out, size_t out_len) {
  return guarded([&] {
    require(dataset != nullptr && out != nullptr, "dataset or out is NULL");
    const auto& v = dataset->data.speeds.values;
    require(out_len >= v.size(), "output buffer too small");
    std::copy(v.begin(), v.end(), out);
  });
}

void dtf_dataset_destroy(dtf_dataset* dataset) { delete dataset; }

dtf_status dtf_model_create_student(const dtf_config* config, size_t nodes, const char* checkpoint, dtf_model** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    const auto cfg = resolve(config);
    auto m = std::make_unique<dtf_model>();
    m->model = std::make_unique<dtf::DualTransformer>(cfg.student_for(nodes), cfg.seed);
    if (checkpoint != nullptr) dtf::load_checkpoint_into(checkpoint, m->model->parameters());
    *out = m.release();
  });
}

dtf_status dtf_model_parameter_count(const dtf_model* model, uint64_t* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model or out is NULL");
    *out = dtf::parameter_count(*model->model);
  });
}

dtf_status dtf_model_predict(const dtf_model* model, const double* window, size_t steps, size_t nodes, double* out,
                             size_t out_len) {
  return guarded([&] {
    require(model != nullptr && window != nullptr && out != nullptr, "model, window or out is NULL");
    const auto& m = *model->model;
    require(out_len >= m.nodes() * m.horizon(), "output buffer too small");
    dtf::Matrix w(steps, nodes, std::vector<double>(window, window + steps * nodes));
    const auto pred = m.forward(w);
    std::copy(pred.data().begin(), pred.data().end(), out);
  });
}

dtf_status dtf_model_save(const dtf_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "model or path is NULL");
    dtf::save_checkpoint(path, model->model->parameters());
  });
}

void dtf_model_destroy(dtf_model* model) { delete model; }

}  // extern "C"
