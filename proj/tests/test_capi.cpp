#include <distopt.h>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const char* kInlineConfig = R"(schema_version 1
algorithm doaoc
seed 11
eta auto
max_iters 25
tol.grad 0
tol.edge 0
graph.n 3
graph.edge 1 2 1
graph.edge 2 3 1
graph.edge 3 1 1
objective.kind quadratic
objective.p 2
objective.seed 7
objective.m1 1
objective.m2 2
init.mode consensus
)";

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("c api reports errors with code and message") {
  distopt_experiment* exp = nullptr;
  CHECK(distopt_experiment_load("/nonexistent/x.cfg", &exp) ==
        DISTOPT_ERR_IO);
  CHECK(exp == nullptr);
  CHECK(distopt_last_error_code() == DISTOPT_ERR_IO);
  CHECK(std::string(distopt_last_error()).find("x.cfg") != std::string::npos);

  CHECK(distopt_experiment_parse("schema_version 1\nbad 1\n", &exp) ==
        DISTOPT_ERR_CONFIG);
  CHECK(std::string(distopt_last_error()).find("bad") != std::string::npos);

  CHECK(distopt_experiment_load(nullptr, &exp) == DISTOPT_ERR_INVALID);
  double v = 0.0;
  CHECK(distopt_result_metric(nullptr, "rho", &v) == DISTOPT_ERR_INVALID);
}

TEST_CASE("c api runs an experiment end to end") {
  distopt_experiment* exp = nullptr;
  REQUIRE(distopt_experiment_parse(kInlineConfig, &exp) == DISTOPT_OK);
  CHECK(std::string(distopt_experiment_name(exp)) == "inline");

  distopt_result* a = nullptr;
  distopt_result* b = nullptr;
  REQUIRE(distopt_experiment_run(exp, &a) == DISTOPT_OK);
  REQUIRE(distopt_experiment_run(exp, &b) == DISTOPT_OK);

  CHECK(distopt_result_iterations(a) == 25);
  CHECK(std::string(distopt_result_classification(a)) == "superlinear");
  CHECK(std::string(distopt_result_trace_csv(a)) ==
        distopt_result_trace_csv(b));

  double final_err = 1.0, c = 0.0, r2 = 0.0, missing = 0.0;
  CHECK(distopt_result_metric(a, "final_err", &final_err) == DISTOPT_OK);
  CHECK(final_err <= 1e-10);
  CHECK(distopt_result_metric(a, "c", &c) == DISTOPT_OK);
  CHECK((c > 0.0 && c < 1.0));
  CHECK(distopt_result_metric(a, "r2", &r2) == DISTOPT_OK);
  CHECK(std::isfinite(r2));
  CHECK(distopt_result_metric(a, "nope", &missing) == DISTOPT_ERR_INVALID);

  const auto dir =
      std::filesystem::temp_directory_path() / "distopt_capi_write";
  std::filesystem::remove_all(dir);
  REQUIRE(distopt_result_write(a, dir.string().c_str()) == DISTOPT_OK);
  CHECK(slurp(dir / "trace.csv") == distopt_result_trace_csv(a));
  CHECK(slurp(dir / "report.txt") == distopt_result_report_text(a));
  CHECK(slurp(dir / "trace.meta") == distopt_result_meta_text(a));

  // Re-fit the written trace through the C surface.
  char* refit = nullptr;
  REQUIRE(distopt_fit_csv((dir / "trace.csv").string().c_str(), &refit) ==
          DISTOPT_OK);
  CHECK(std::string(refit).find("classification superlinear") !=
        std::string::npos);
  distopt_free_string(refit);

  std::filesystem::remove_all(dir);
  distopt_result_free(a);
  distopt_result_free(b);
  distopt_experiment_free(exp);
}

TEST_CASE("c api seed override changes the trace") {
  distopt_experiment* exp = nullptr;
  REQUIRE(distopt_experiment_parse(kInlineConfig, &exp) == DISTOPT_OK);
  distopt_result* a = nullptr;
  REQUIRE(distopt_experiment_run(exp, &a) == DISTOPT_OK);
  REQUIRE(distopt_experiment_set_seed(exp, 99) == DISTOPT_OK);
  distopt_result* b = nullptr;
  REQUIRE(distopt_experiment_run(exp, &b) == DISTOPT_OK);
  CHECK(std::string(distopt_result_trace_csv(a)) !=
        distopt_result_trace_csv(b));
  distopt_result_free(a);
  distopt_result_free(b);
  distopt_experiment_free(exp);
}

TEST_CASE("c api compare joins bundled configs") {
  const std::string dir = DISTOPT_CONFIG_DIR;
  const std::string a = dir + "/threecycle_docmc.cfg";
  const std::string b = dir + "/threecycle_doaoc.cfg";
  const char* paths[] = {a.c_str(), b.c_str()};
  char* table = nullptr;
  REQUIRE(distopt_compare(paths, 2, nullptr, 1e-8, &table) == DISTOPT_OK);
  const std::string text(table);
  distopt_free_string(table);
  CHECK(text.find("threecycle_docmc docmc") != std::string::npos);
  CHECK(text.find("threecycle_doaoc doaoc") != std::string::npos);
}

TEST_CASE("c api selftest passes") {
  char* log = nullptr;
  CHECK(distopt_selftest(&log) == DISTOPT_OK);
  CHECK(std::string(log).find("FAIL") == std::string::npos);
  distopt_free_string(log);
}
