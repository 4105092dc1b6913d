// Command-line front end; talks to the library exclusively through the C API
// in distopt.h. Exit codes: 0 success, 2 config/input error, 3 numerical
// failure, 4 property-check failure.

#include <distopt.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace {

int exit_code(int api_code) {
  switch (api_code) {
    case DISTOPT_OK: return 0;
    case DISTOPT_ERR_NUMERIC: return 3;
    case DISTOPT_ERR_PROPERTY: return 4;
    default: return 2;  // config, invalid, io
  }
}

int report_failure(int api_code) {
  std::cerr << "error: " << distopt_last_error() << "\n";
  return exit_code(api_code);
}

struct StringDeleter {
  void operator()(char* s) const { distopt_free_string(s); }
};
using ApiString = std::unique_ptr<char, StringDeleter>;

double metric(const distopt_result* result, const char* key) {
  double v = 0.0;
  distopt_result_metric(result, key, &v);
  return v;
}

int cmd_run(const std::string& config, const std::string& out,
            const std::uint64_t* seed) {
  distopt_experiment* exp = nullptr;
  int rc = distopt_experiment_load(config.c_str(), &exp);
  if (rc != DISTOPT_OK) return report_failure(rc);
  if (seed) distopt_experiment_set_seed(exp, *seed);
  if (!out.empty()) distopt_experiment_set_out_dir(exp, out.c_str());

  distopt_result* result = nullptr;
  rc = distopt_experiment_run(exp, &result);
  if (rc != DISTOPT_OK && result == nullptr) {
    distopt_experiment_free(exp);
    return report_failure(rc);
  }
  const int run_rc = rc;
  if (run_rc != DISTOPT_OK)
    std::cerr << "property-check failure: " << distopt_last_error() << "\n";

  const std::string dir = distopt_experiment_out_dir(exp);
  const int write_rc = distopt_result_write(result, dir.c_str());
  if (write_rc != DISTOPT_OK) {
    distopt_result_free(result);
    distopt_experiment_free(exp);
    return report_failure(write_rc);
  }

  std::printf("experiment      %s\n", distopt_experiment_name(exp));
  std::printf("iterations      %lld\n",
              static_cast<long long>(distopt_result_iterations(result)));
  std::printf("converged       %s\n",
              distopt_result_converged(result) ? "yes" : "no");
  std::printf("classification  %s\n", distopt_result_classification(result));
  std::printf("final_err       %.6g\n", metric(result, "final_err"));
  std::printf("outputs         %s/{trace.csv,trace.meta,report.txt}\n",
              dir.c_str());

  distopt_result_free(result);
  distopt_experiment_free(exp);
  return exit_code(run_rc);
}

int cmd_fit(const std::string& trace, const std::string& out) {
  char* text = nullptr;
  const int rc = distopt_fit_csv(trace.c_str(), &text);
  if (rc != DISTOPT_OK) return report_failure(rc);
  ApiString report(text);
  if (out.empty()) {
    std::fputs(report.get(), stdout);
  } else {
    std::ofstream f(out + "/report.txt");
    if (!f) {
      std::cerr << "error: cannot write report under " << out << "\n";
      return 2;
    }
    f << report.get();
    std::printf("outputs         %s/report.txt\n", out.c_str());
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& configs, double tol,
                const std::uint64_t* seed, const std::string& out) {
  std::vector<const char*> paths;
  paths.reserve(configs.size());
  for (const auto& c : configs) paths.push_back(c.c_str());
  char* text = nullptr;
  const int rc =
      distopt_compare(paths.data(), paths.size(), seed, tol, &text);
  if (rc != DISTOPT_OK) return report_failure(rc);
  ApiString table(text);
  std::fputs(table.get(), stdout);
  if (!out.empty()) {
    std::ofstream f(out + "/compare.txt");
    if (!f) {
      std::cerr << "error: cannot write table under " << out << "\n";
      return 2;
    }
    f << table.get();
  }
  return 0;
}

int cmd_selftest(bool quiet) {
  char* text = nullptr;
  const int rc = distopt_selftest(&text);
  ApiString report(text);
  if (!quiet && report) std::fputs(report.get(), stdout);
  if (rc != DISTOPT_OK) {
    std::cerr << "selftest: " << distopt_last_error() << "\n";
    return exit_code(rc);
  }
  std::puts("selftest: all checks passed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed optimal-control optimization toolkit"};
  app.set_version_flag("--version", distopt_version());
  app.require_subcommand(1);

  std::string config, out, trace;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tol = 1e-8;
  std::vector<std::string> compare_configs;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("--config", config, "experiment config file")->required();
  run->add_option("--out", out, "output directory (overrides out.dir)");
  run->add_option("--seed", seed, "seed override")
      ->each([&](const std::string&) { seed_set = true; });

  auto* fit = app.add_subcommand("fit", "re-fit a saved trace CSV");
  fit->add_option("trace", trace, "trace.csv produced by run")->required();
  fit->add_option("--out", out, "directory for report.txt (default stdout)");

  auto* compare =
      app.add_subcommand("compare", "run several configs on one instance");
  compare->add_option("--config", compare_configs, "config file (repeatable)")
      ->required();
  compare->add_option("--tol", tol, "error tolerance for iteration counts");
  compare->add_option("--seed", seed, "shared seed override")
      ->each([&](const std::string&) { seed_set = true; });
  compare->add_option("--out", out, "directory for compare.txt");

  auto* selftest =
      app.add_subcommand("selftest", "run the built-in invariant suite");
  selftest->add_flag("--quiet", quiet, "print failures only");

  CLI11_PARSE(app, argc, argv);

  const std::uint64_t* seed_ptr = seed_set ? &seed : nullptr;
  if (run->parsed()) return cmd_run(config, out, seed_ptr);
  if (fit->parsed()) return cmd_fit(trace, out);
  if (compare->parsed()) return cmd_compare(compare_configs, tol, seed_ptr, out);
  if (selftest->parsed()) return cmd_selftest(quiet);
  return 0;
}
