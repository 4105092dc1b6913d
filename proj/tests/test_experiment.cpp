#include "distopt/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace distopt;

namespace {

const std::string kMinimal = R"(schema_version 1
algorithm docmc
seed 3
max_iters 20
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

std::string config_dir() { return DISTOPT_CONFIG_DIR; }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("config parsing applies defaults and echoes canonically") {
  const auto cfg = ExperimentConfig::parse_string(kMinimal);
  CHECK(cfg.algorithm == Algorithm::docmc);
  CHECK(cfg.seed == 3);
  CHECK(cfg.inner_cap == -1);
  CHECK(cfg.consensus_mode == ConsensusConfig::Mode::exact);
  CHECK(cfg.graph->n() == 3);

  // The echo is itself a valid config describing the same experiment.
  const auto again = ExperimentConfig::parse_string(cfg.echo());
  CHECK(again.echo() == cfg.echo());
}

TEST_CASE("config errors name the offending key") {
  auto expect_mentions = [](const std::string& text, const std::string& key) {
    try {
      ExperimentConfig::parse_string(text);
      FAIL_CHECK("expected a config error mentioning " << key);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config);
      CHECK(std::string(e.what()).find(key) != std::string::npos);
    }
  };
  expect_mentions("schema_version 1\nalgorithm docmc\ngraph.n 2\n"
                  "graph.edge 1 2 1\ngraph.edge 2 1 1\nbogus_key 1\n",
                  "bogus_key");
  expect_mentions("algorithm docmc\n", "schema_version");
  expect_mentions("schema_version 1\n", "algorithm");
  expect_mentions("schema_version 1\nalgorithm warp\n", "algorithm");
  expect_mentions("schema_version 1\nalgorithm docmc\nseed 1\nseed 2\n",
                  "seed");
  expect_mentions("schema_version 1\nalgorithm docmc\nmax_iters many\n",
                  "max_iters");
  expect_mentions("schema_version 1\nalgorithm docmc\n", "graph.n");
  expect_mentions(kMinimal + "graph.file other.graph\n", "graph.file");
  expect_mentions("schema_version 1\nalgorithm docmc\nJUNK\n", "JUNK");
  expect_mentions(kMinimal + "objective.m1 -1\n", "objective.m1");
  expect_mentions("schema_version 2\nalgorithm docmc\n", "schema_version");
  expect_mentions(kMinimal + "dgd.schedule harmonic\ndgd.step 0\n",
                  "dgd.step");
}

TEST_CASE("init.x entries must cover every agent") {
  const std::string text = kMinimal;
  auto cfg = ExperimentConfig::parse_string(
      text.substr(0, text.find("init.mode")) +
      "init.mode given\ninit.x 1 0 0\ninit.x 2 1 1\n");
  CHECK_THROWS_AS(cfg.build_setup(), Error);
}

TEST_CASE("literal quadratics must cover every agent") {
  auto cfg = ExperimentConfig::parse_string(
      "schema_version 1\nalgorithm docmc\ngraph.n 2\ngraph.edge 1 2 1\n"
      "graph.edge 2 1 1\nobjective.p 1\nobjective.A 1 2\nobjective.b 1 0\n");
  CHECK_THROWS_AS(cfg.build_objectives(), Error);
}

TEST_CASE("bundled configs parse and reference their graph files") {
  for (const auto& entry : std::filesystem::directory_iterator(config_dir())) {
    if (entry.path().extension() != ".cfg") continue;
    const auto cfg = ExperimentConfig::parse_file(entry.path().string());
    CHECK(cfg.graph.has_value());
    CHECK(cfg.name == entry.path().stem().string());
  }
}

TEST_CASE("run_experiment produces a coherent result bundle") {
  const auto result =
      run_experiment(ExperimentConfig::parse_string(kMinimal));
  CHECK(result.status == 0);
  CHECK(result.property_failures.empty());
  CHECK(result.fit_ok);
  CHECK(result.trace.rows.size() ==
        static_cast<std::size_t>(result.trace.iterations) + 1);

  const auto report = result.report_text();
  for (const char* key :
       {"kind rate_report", "classification ", "sigma ", "rho ", "r1 ",
        "final_err ", "ratio "})
    CHECK(report.find(key) != std::string::npos);
  const auto meta = result.meta_text();
  for (const char* key :
       {"kind trace_meta", "riccati_residual ", "x_star ", "config_begin"})
    CHECK(meta.find(key) != std::string::npos);
}

TEST_CASE("write_result emits the three artifact files") {
  const auto dir =
      std::filesystem::temp_directory_path() / "distopt_test_write";
  std::filesystem::remove_all(dir);
  const auto result =
      run_experiment(ExperimentConfig::parse_string(kMinimal));
  write_result(result, dir.string());
  CHECK(slurp(dir / "trace.csv") == result.trace.to_csv());
  CHECK(slurp(dir / "trace.meta") == result.meta_text());
  CHECK(slurp(dir / "report.txt") == result.report_text());
  CHECK(slurp(dir / "trace.csv").rfind(
            "k,err_to_opt,consensus_err,edge_norm,f_gap,msgs,bytes\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("re-fitting a saved trace reproduces the classification") {
  const auto result =
      run_experiment(ExperimentConfig::parse_string(kMinimal));
  const auto refit = fit_trace_csv_text(result.trace.to_csv());
  const auto line = "classification " + result.report.classification + "\n";
  CHECK(refit.find(line) != std::string::npos);
  // Identical ratio lines in both reports.
  std::istringstream a(result.report_text()), b(refit);
  std::string la, lb;
  while (std::getline(a, la))
    if (la.rfind("ratio ", 0) == 0) {
      do {
        REQUIRE(std::getline(b, lb));
      } while (lb.rfind("ratio ", 0) != 0);
      CHECK(la == lb);
    }
}

TEST_CASE("an immediately-terminated run reports an insufficient fit") {
  auto cfg = ExperimentConfig::parse_string(kMinimal);
  cfg.max_iters = 2;
  const auto result = run_experiment(cfg);
  CHECK_FALSE(result.fit_ok);
  CHECK(result.classification() == "insufficient");
  CHECK(result.report_text().find("classification insufficient") !=
        std::string::npos);
}

TEST_CASE("compare is deterministic and joins the measured columns") {
  const auto cfg = ExperimentConfig::parse_string(kMinimal);
  const auto table = compare_experiments({cfg, cfg}, 1e-8);
  std::istringstream in(table);
  std::string header1, header2, row1, row2;
  std::getline(in, header1);
  std::getline(in, header2);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(row1 == row2);
  CHECK(header2.find("iters_to_tol") != std::string::npos);
  CHECK(row1.find("docmc") != std::string::npos);
  CHECK(row1.find("superlinear") != std::string::npos);
}

TEST_CASE("compare reports the contraction norm for each step choice") {
  // Steps 1/m2 and 0.95 (close to 2/m2 = 1): both admissible, different c.
  auto mild = ExperimentConfig::parse_string(kMinimal);
  mild.algorithm = Algorithm::doaoc;
  mild.eta_auto = true;
  mild.max_iters = 60;
  mild.name = "mild";
  auto hot = mild;
  hot.eta_auto = false;
  hot.eta = 0.95;
  hot.name = "hot";
  const auto table = compare_experiments({mild, hot}, 1e-8);
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  auto parse_row = [&](const std::string& expect_name) {
    std::string row;
    REQUIRE(std::getline(in, row));
    std::istringstream cells(row);
    std::vector<std::string> tok;
    std::string t;
    while (cells >> t) tok.push_back(t);
    REQUIRE(tok.size() == 9);
    CHECK(tok[0] == expect_name);
    return std::pair<long, double>{std::stol(tok[2]), std::stod(tok[6])};
  };
  const auto [iters_mild, c_mild] = parse_row("mild");
  const auto [iters_hot, c_hot] = parse_row("hot");
  CHECK(iters_mild > 0);
  CHECK(iters_hot > 0);
  CHECK(c_mild < 1.0);
  CHECK(c_hot < 1.0);
  CHECK(c_mild != c_hot);
}

TEST_CASE("trace metadata carries the stable solution for reproducibility") {
  const auto docmc = run_experiment(ExperimentConfig::parse_string(kMinimal));
  CHECK(docmc.meta_text().find("riccati_p 6 6 ") != std::string::npos);
  CHECK(docmc.meta_text().find("riccati_gamma 6 6 ") != std::string::npos);

  auto dgd_cfg = ExperimentConfig::parse_string(kMinimal);
  dgd_cfg.algorithm = Algorithm::dgd;
  dgd_cfg.max_iters = 5;
  const auto dgd = run_experiment(dgd_cfg);
  CHECK(dgd.meta_text().find("riccati_p") == std::string::npos);
}

TEST_CASE("solver failures surface with the numeric error code") {
  auto cfg = ExperimentConfig::parse_string(kMinimal);
  cfg.riccati_max_iter = 1;
  try {
    run_experiment(cfg);
    FAIL_CHECK("expected a numeric error from the truncated solver");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
  }

  cfg = ExperimentConfig::parse_string(kMinimal);
  cfg.max_iters = 3;
  cfg.tol_grad = 1e-12;
  cfg.tol_edge = 1e-12;
  cfg.require_convergence = true;
  cfg.init_mode = InitSpec::Mode::random;
  try {
    run_experiment(cfg);
    FAIL_CHECK("expected a numeric error from the exhausted budget");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
  }
}

TEST_CASE("selftest passes on the bundled instances") {
  std::string log;
  CHECK(selftest(log) == 0);
  CHECK(log.find("FAIL") == std::string::npos);
}
