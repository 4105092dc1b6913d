#include "distopt.h"

#include "distopt/experiment.hpp"

#include <cstring>
#include <string>

struct distopt_experiment {
  distopt::ExperimentConfig cfg;
};

struct distopt_result {
  distopt::ExperimentResult result;
  std::string csv;
  std::string meta;
  std::string report;
};

namespace {

thread_local std::string g_last_error;
thread_local int g_last_code = DISTOPT_OK;

int set_error(int code, const std::string& what) {
  g_last_code = code;
  g_last_error = what;
  return code;
}

int clear_error() {
  g_last_code = DISTOPT_OK;
  g_last_error.clear();
  return DISTOPT_OK;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return clear_error();
  } catch (const distopt::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(DISTOPT_ERR_NUMERIC, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* distopt_version(void) { return "0.1.0"; }

const char* distopt_last_error(void) { return g_last_error.c_str(); }

int distopt_last_error_code(void) { return g_last_code; }

int distopt_experiment_load(const char* path, distopt_experiment** out) {
  if (!path || !out) return set_error(DISTOPT_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new distopt_experiment{
        distopt::ExperimentConfig::parse_file(path)};
  });
}

int distopt_experiment_parse(const char* text, distopt_experiment** out) {
  if (!text || !out) return set_error(DISTOPT_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new distopt_experiment{
        distopt::ExperimentConfig::parse_string(text)};
  });
}

int distopt_experiment_set_seed(distopt_experiment* exp, uint64_t seed) {
  if (!exp) return set_error(DISTOPT_ERR_INVALID, "null experiment");
  exp->cfg.seed = seed;
  return clear_error();
}

int distopt_experiment_set_out_dir(distopt_experiment* exp, const char* dir) {
  if (!exp || !dir) return set_error(DISTOPT_ERR_INVALID, "null argument");
  exp->cfg.out_dir = dir;
  return clear_error();
}

const char* distopt_experiment_name(const distopt_experiment* exp) {
  return exp ? exp->cfg.name.c_str() : "";
}

const char* distopt_experiment_out_dir(const distopt_experiment* exp) {
  return exp ? exp->cfg.out_dir.c_str() : "";
}

void distopt_experiment_free(distopt_experiment* exp) { delete exp; }

int distopt_experiment_run(distopt_experiment* exp, distopt_result** out) {
  if (!exp || !out) return set_error(DISTOPT_ERR_INVALID, "null argument");
  *out = nullptr;
  const int rc = guarded([&] {
    auto result = distopt::run_experiment(exp->cfg);
    auto* handle = new distopt_result{std::move(result), "", "", ""};
    handle->csv = handle->result.trace.to_csv();
    handle->meta = handle->result.meta_text();
    handle->report = handle->result.report_text();
    *out = handle;
  });
  if (rc != DISTOPT_OK) return rc;
  if ((*out)->result.status != 0)
    return set_error(DISTOPT_ERR_PROPERTY,
                     (*out)->result.property_failures.front());
  return DISTOPT_OK;
}

int distopt_result_write(const distopt_result* res, const char* dir) {
  if (!res || !dir) return set_error(DISTOPT_ERR_INVALID, "null argument");
  return guarded([&] { distopt::write_result(res->result, dir); });
}

int64_t distopt_result_iterations(const distopt_result* res) {
  return res ? res->result.trace.iterations : -1;
}

int distopt_result_converged(const distopt_result* res) {
  return res && res->result.trace.converged ? 1 : 0;
}

const char* distopt_result_classification(const distopt_result* res) {
  static thread_local std::string cls;
  if (!res) return "";
  cls = res->result.classification();
  return cls.c_str();
}

const char* distopt_result_trace_csv(const distopt_result* res) {
  return res ? res->csv.c_str() : "";
}

const char* distopt_result_meta_text(const distopt_result* res) {
  return res ? res->meta.c_str() : "";
}

const char* distopt_result_report_text(const distopt_result* res) {
  return res ? res->report.c_str() : "";
}

int distopt_result_metric(const distopt_result* res, const char* key,
                          double* out) {
  if (!res || !key || !out)
    return set_error(DISTOPT_ERR_INVALID, "null argument");
  const std::string k = key;
  const auto& rep = res->result.report;
  const auto& trace = res->result.trace;
  if (k == "final_err")
    *out = trace.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : trace.rows.back().err_to_opt;
  else if (k == "sigma")
    *out = rep.sigma;
  else if (k == "rho")
    *out = rep.rho;
  else if (k == "c")
    *out = rep.c_envelope;
  else if (k == "r1")
    *out = rep.r1;
  else if (k == "r2")
    *out = rep.r2;
  else if (k == "log_ratio_slope")
    *out = rep.log_ratio_slope;
  else if (k == "linear_c")
    *out = rep.linear_c;
  else if (k == "riccati_residual")
    *out = trace.riccati_residual;
  else
    return set_error(DISTOPT_ERR_INVALID, "unknown metric key: " + k);
  return clear_error();
}

void distopt_result_free(distopt_result* res) { delete res; }

int distopt_fit_csv(const char* csv_path, char** report_text) {
  if (!csv_path || !report_text)
    return set_error(DISTOPT_ERR_INVALID, "null argument");
  *report_text = nullptr;
  return guarded([&] {
    *report_text = dup_string(distopt::fit_trace_csv_file(csv_path));
  });
}

int distopt_compare(const char* const* config_paths, size_t count,
                    const uint64_t* seed_override, double tol,
                    char** table_text) {
  if (!config_paths || count == 0 || !table_text)
    return set_error(DISTOPT_ERR_INVALID, "null argument");
  *table_text = nullptr;
  return guarded([&] {
    std::vector<distopt::ExperimentConfig> configs;
    for (size_t i = 0; i < count; ++i) {
      auto cfg = distopt::ExperimentConfig::parse_file(config_paths[i]);
      if (seed_override) cfg.seed = *seed_override;
      configs.push_back(std::move(cfg));
    }
    *table_text = dup_string(distopt::compare_experiments(configs, tol));
  });
}

int distopt_selftest(char** report_text) {
  if (!report_text) return set_error(DISTOPT_ERR_INVALID, "null argument");
  *report_text = nullptr;
  std::string log;
  int failures = 0;
  const int rc = guarded([&] { failures = distopt::selftest(log); });
  *report_text = dup_string(log);
  if (rc != DISTOPT_OK) return rc;
  if (failures > 0)
    return set_error(DISTOPT_ERR_PROPERTY,
                     std::to_string(failures) + " selftest check(s) failed");
  return DISTOPT_OK;
}

void distopt_free_string(char* s) { delete[] s; }

}  // extern "C"
