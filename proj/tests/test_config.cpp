#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "dsqn/config.hpp"
#include "dsqn/experiment.hpp"
#include "dsqn/metrics.hpp"

using namespace dsqn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

// Gate-compliant base: a one-dimensional unit quadratic pins the smoothness
// and convexity constants at exactly 1, and the complete graph's uniform
// weights make the mixing deviation exactly 0, so the auto-resolved step and
// period are exact rationals that the tests can compare with ==.
std::string compliant_text(const std::string& extra_algorithm, const std::string& extra_run) {
  return "[problem]\n"
         "family = quadratic\n"
         "n = 4\n"
         "d = 1\n"
         "m = 1\n"
         "eig_min = 1.0\n"
         "eig_max = 1.0\n"
         "\n"
         "[topology]\n"
         "kind = complete\n"
         "\n"
         "[algorithm]\n"
         "alpha = auto\n"
         "T = auto\n"
         "b = full\n"
         "hessian = identity\n" +
         extra_algorithm +
         "\n"
         "[run]\n" +
         extra_run;
}

}  // namespace

TEST_CASE("a minimal config fills in documented defaults") {
  const ExperimentConfig cfg = parse_config("[problem]\nn = 3\nd = 2\n");
  CHECK(cfg.problem.family == Family::quadratic);
  CHECK(cfg.problem.m == std::vector<int>{10, 10, 10});
  CHECK(cfg.problem.seed == 1);
  CHECK(cfg.problem.regularizer == 0.1);
  CHECK(cfg.graph.kind == GraphKind::ring);
  CHECK(cfg.graph.n == 3);  // inherited from the problem
  CHECK_FALSE(cfg.lazy_weights);
  CHECK(cfg.alpha_auto);
  CHECK(cfg.T_auto);
  CHECK(cfg.b == 0);  // full batch
  CHECK(cfg.hessian.strategy == "identity");
  CHECK(cfg.init == InitMode::zeros);
  CHECK(cfg.max_iters == 1000);
  CHECK(cfg.replications == 1);
  CHECK(cfg.strict_gate);
  CHECK(cfg.precision == Precision::fp64);
  CHECK(cfg.threads == 1);
  CHECK_FALSE(cfg.verify_curvature);
  CHECK(cfg.out_dir == "out");
}

TEST_CASE("parse errors carry the offending line number") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      static_cast<void>(parse_config(text));
      FAIL_CHECK("expected parse failure containing '" << needle << "'");
    } catch (const std::runtime_error& e) {
      const std::string what = e.what();
      CHECK_MESSAGE(what.find(needle) != std::string::npos, "got: " << what);
    }
  };
  expect_error("[problem]\nn = 2\nd = 1\nfamilly = quadratic\n", "line 4");
  expect_error("[problem]\nn = 2\nd = 1\nfamilly = quadratic\n", "familly");
  expect_error("[probelm]\nn = 2\n", "line 1");
  expect_error("[problem]\nn = two\n", "line 2");
  expect_error("[problem]\nn = 2\nd = 1\n\n[algorithm]\nalpha = fast\n", "line 6");
  expect_error("[problem]\nn = 2\nd = 1\n\n[run]\nstrict_gate = maybe\n", "line 6");
  expect_error("[problem]\nn = 2\nd = 1\nfamily = cubic\n", "line 4");
  expect_error("[problem]\nn = 2\nd = 1\n\n[topology]\nkind = torus\n", "line 6");
  expect_error("[problem]\nn = 2\nd = 1\n\n[algorithm]\nhessian = bfgs\n", "line 6");
  // Cross-field checks fire after the line scan.
  expect_error("[problem]\nd = 1\n", "n must be >= 1");
  expect_error("[problem]\nn = 2\nd = 1\nm = 4\n\n[algorithm]\nb = 5\n", "exceeds");
  expect_error("[problem]\nn = 2\nd = 1\n\n[algorithm]\nM1 = 2.0\nM2 = 1.0\n", "curvature bounds");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_config_file("/nonexistent/cfg.ini")),
                       doctest::Contains("cannot open config file"), std::runtime_error);
}

TEST_CASE("auto step size and period resolve to their exact bounds") {
  const ExperimentConfig cfg = parse_config(compliant_text("", "max_iters = 50\n"));
  const AssembledExperiment ax = assemble(cfg, /*need_reference=*/false);
  CHECK(ax.problem.L() == 1.0);
  CHECK(ax.problem.mu() == 1.0);
  CHECK(ax.mix.sigma == 0.0);
  CHECK(ax.engine.alpha == 0.005);  // (1-sigma^2)^2 * mu * M1 / (200 L^2 M2^2)
  CHECK(ax.engine.T == 2254);       // ceil(400 * ln 280)
  CHECK(ax.B == 0.0);               // full batch
  CHECK(ax.gate.pass());
  CHECK(ax.certificate.pass());
}

TEST_CASE("strict gate failure writes the certificate and skips the run") {
  const fs::path dir = fresh_dir("dsqn_test_gatefail");
  ExperimentConfig cfg = parse_config(compliant_text("", "max_iters = 50\n"));
  cfg.alpha_auto = false;
  cfg.alpha = 0.1;  // far above the admissible step bound
  cfg.T_auto = false;
  cfg.T = 10;
  cfg.out_dir = dir.string();
  CHECK(run_experiment(cfg) == kExitGateFailure);
  CHECK(fs::exists(dir / "certificate.json"));
  CHECK(fs::exists(dir / "run_meta.json"));
  CHECK_FALSE(fs::exists(dir / "metrics.csv"));
  CHECK(slurp(dir / "run_meta.json").find("gate_failed") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("replications write per-seed streams plus their mean") {
  const fs::path dir = fresh_dir("dsqn_test_reps");
  ExperimentConfig cfg = parse_config(
      compliant_text("init = per_node_random\n", "max_iters = 40\nseed = 9\nreplications = 3\n"));
  cfg.out_dir = dir.string();
  CHECK(run_experiment(cfg) == kExitOk);
  for (const char* name : {"metrics_seed9.csv", "metrics_seed10.csv", "metrics_seed11.csv", "metrics_mean.csv"})
    CHECK(fs::exists(dir / name));
  CHECK_FALSE(fs::exists(dir / "metrics.csv"));

  const auto s9 = read_metrics_csv((dir / "metrics_seed9.csv").string());
  const auto s10 = read_metrics_csv((dir / "metrics_seed10.csv").string());
  const auto s11 = read_metrics_csv((dir / "metrics_seed11.csv").string());
  const auto mean = read_metrics_csv((dir / "metrics_mean.csv").string());
  REQUIRE(mean.size() == 41);
  REQUIRE(s9.size() == 41);
  // Different seeds draw different initial points.
  CHECK(s9[0].consensus_err != s10[0].consensus_err);
  for (std::size_t r = 0; r < mean.size(); ++r) {
    CHECK(mean[r].k == static_cast<long long>(r));
    CHECK(mean[r].grad_evals_cumulative == s9[r].grad_evals_cumulative);  // schedule-determined
    const double avg = (s9[r].consensus_err + s10[r].consensus_err + s11[r].consensus_err) / 3.0;
    CHECK(mean[r].consensus_err == doctest::Approx(avg).epsilon(1e-14));
  }
  fs::remove_all(dir);
}

TEST_CASE("reruns are byte-identical and compare reproduces the run stream") {
  const fs::path dir_a = fresh_dir("dsqn_test_run_a");
  const fs::path dir_b = fresh_dir("dsqn_test_run_b");
  const fs::path dir_c = fresh_dir("dsqn_test_cmp");
  ExperimentConfig cfg =
      parse_config(compliant_text("init = per_node_random\n", "max_iters = 40\nseed = 5\n"));

  cfg.out_dir = dir_a.string();
  REQUIRE(run_experiment(cfg) == kExitOk);
  cfg.out_dir = dir_b.string();
  REQUIRE(run_experiment(cfg) == kExitOk);
  const std::string run_bytes = slurp(dir_a / "metrics.csv");
  CHECK(run_bytes == slurp(dir_b / "metrics.csv"));

  cfg.out_dir = dir_c.string();
  REQUIRE(run_compare(cfg, {"framework"}) == kExitOk);
  CHECK(slurp(dir_c / "metrics_framework.csv") == run_bytes);
  const std::string cmp = slurp(dir_c / "compare.csv");
  CHECK(cmp.rfind("k,framework_evals,framework_opt_gap\n", 0) == 0);

  CHECK_THROWS_WITH_AS(static_cast<void>(run_compare(cfg, {"sgd"})), doctest::Contains("unknown method"),
                       std::runtime_error);
  for (const auto& d : {dir_a, dir_b, dir_c}) fs::remove_all(d);
}

TEST_CASE("epoch-boundary error weights contract on a compliant run") {
  const fs::path dir = fresh_dir("dsqn_test_epochs");
  ExperimentConfig cfg = parse_config(
      compliant_text("init = per_node_random\n", "max_iters = 6762\nseed = 2\n"));  // three full periods
  cfg.out_dir = dir.string();
  REQUIRE(run_experiment(cfg) == kExitOk);
  const auto rows = read_metrics_csv((dir / "metrics.csv").string());
  REQUIRE(rows.size() == 6763);
  const double u0 = rows[0].u_inf_q;
  const double u1 = rows[2254].u_inf_q;
  const double u2 = rows[4508].u_inf_q;
  const double u3 = rows[6762].u_inf_q;
  REQUIRE(u0 > 0.0);
  CHECK(u1 < 0.9 * u0);
  CHECK(u2 < 0.9 * u1);
  CHECK(u3 < 0.9 * u2);
  fs::remove_all(dir);
}

TEST_CASE("output root environment variable prefixes relative directories") {
  REQUIRE(setenv("DSQN_OUTPUT_ROOT", "/tmp/dsqn_root_test", 1) == 0);
  CHECK(resolve_output_dir("out") == std::string("/tmp/dsqn_root_test") + "/out");
  REQUIRE(setenv("DSQN_OUTPUT_ROOT", "", 1) == 0);
  CHECK(resolve_output_dir("out") == "out");  // empty value means unset
  REQUIRE(unsetenv("DSQN_OUTPUT_ROOT") == 0);
  CHECK(resolve_output_dir("out") == "out");
}

TEST_CASE("metrics CSV rows survive a write/read round trip bit for bit") {
  const fs::path file = fs::temp_directory_path() / "dsqn_test_metrics_rt.csv";
  std::vector<MetricsRecord> rows(3);
  rows[0] = {0, 0.1, 3.141592653589793, 1e-300, 2.0 / 3.0, 123456.789012345, 40};
  rows[1] = {1, 5e-324, -2.5e-17, 1.7976931348623157e308, 0.0, 1e16 + 1.0, 88};
  rows[2] = {2, 1.0000000000000002, 7.0, 0.3333333333333333, 9.999999999999999e-5, 42.0, 120};
  write_metrics_csv(file.string(), rows);
  const auto back = read_metrics_csv(file.string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    CHECK(back[r].k == rows[r].k);
    CHECK(back[r].consensus_err == rows[r].consensus_err);
    CHECK(back[r].opt_gap_raw == rows[r].opt_gap_raw);
    CHECK(back[r].opt_gap_scaled == rows[r].opt_gap_scaled);
    CHECK(back[r].tracking_err == rows[r].tracking_err);
    CHECK(back[r].u_inf_q == rows[r].u_inf_q);
    CHECK(back[r].grad_evals_cumulative == rows[r].grad_evals_cumulative);
  }

  // The reader refuses files that do not carry the expected header.
  {
    std::ofstream junk(file);
    junk << "k,consensus\n0,1\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(read_metrics_csv(file.string())),
                       doctest::Contains("unexpected metrics header"), std::runtime_error);
  fs::remove(file);

  CHECK_THROWS_AS(static_cast<void>(average_metrics({})), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(average_metrics({rows, {rows[0]}})), std::invalid_argument);
}
