#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "kernelsolve/commands.hpp"
#include "kernelsolve/config.hpp"
#include "kernelsolve/error.hpp"
#include "kernelsolve/oracle.hpp"
#include "kernelsolve/point_io.hpp"
#include "kernelsolve/report.hpp"
#include "kernelsolve/synthetic.hpp"
#include "oracles.hpp"

using namespace kernelsolve;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config(std::size_t n = 400) {
  return {{"schema", 1},
          {"dataset", {{"synthetic", "gaussian-mixture"}, {"n", n}, {"d", 3}}},
          {"kernel", {{"family", "gaussian"}, {"bandwidth", "median"}}},
          {"tree", {{"leaf_size", 48}}},
          {"compression", {{"tol", 1e-7}, {"max_rank", 64}, {"neighbors", 12}}},
          {"solver", {{"lambda", 0.5}}},
          {"seed", 4}};
}

std::set<std::string> keys(const json& j) {
  std::set<std::string> k;
  for (auto it = j.begin(); it != j.end(); ++it) k.insert(it.key());
  return k;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kernelsolve_test_harness";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("dense oracle") {
  SUBCASE("one point") {
    const PointSet p(1, 2, {0.3, -0.2});
    const DenseOracle o(p, KernelSpec::gaussian(1.0), 0.25);
    const std::vector<double> b{5.0};
    CHECK(o.solve(b)[0] == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("identity kernel") {
    const PointSet p = gen_synthetic(SyntheticKind::uniform_cube, 30, 2, 1);
    const DenseOracle o(p, KernelSpec::gaussian(1e-6 * min_pairwise_distance(p)), 1.0);
    const DenseMatrix b = oracle::normal_matrix(30, 3, 2);
    const DenseMatrix x = o.solve(b);
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(x(i, j) == doctest::Approx(b(i, j) / 2.0).epsilon(1e-14));
  }
  SUBCASE("agrees with conjugate gradients") {
    const PointSet p = gen_synthetic(SyntheticKind::gaussian_mixture, 300, 3, 3);
    const double h = median_pairwise_distance(p);
    const DenseOracle o(p, KernelSpec::gaussian(h), 0.1);
    DenseMatrix a = oracle::gaussian_matrix(p, p.ids(), h);
    for (std::size_t i = 0; i < 300; ++i) a(i, i) += 0.1;
    const auto b = oracle::normal_vector(300, 4);
    const auto x = oracle::cg_solve(a, b, 1e-14, 5000);
    CHECK(relative_error(o.solve(b), x) <= 1e-8);
    CHECK(relative_error(o.matvec(x), oracle::dense_apply(oracle::gaussian_matrix(p, p.ids(), h), x)) <= 1e-13);
  }
  SUBCASE("refuses oversized inputs") {
    const PointSet p = gen_synthetic(SyntheticKind::uniform_cube, 20, 2, 1);
    CHECK_THROWS_AS(DenseOracle(p, KernelSpec::gaussian(1.0), 1.0, 10), InvalidArgument);
  }
  const std::vector<double> a{1.0, 2.0}, b{1.0, 0.0};
  CHECK(relative_error(a, b) == 2.0);
  CHECK(max_abs_difference(a, b) == 2.0);
  CHECK(relative_error(std::vector<double>{0.0}, std::vector<double>{0.0}) == 0.0);
}

TEST_CASE("config parsing") {
  const RunConfig cfg = RunConfig::from_json(base_config());
  CHECK(cfg.median_bandwidth);
  CHECK(cfg.leaf_size == 48);
  CHECK(cfg.compression.tol == 1e-7);
  CHECK(cfg.lambda == 0.5);
  CHECK(RunConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  json no_kernel = base_config();
  no_kernel.erase("kernel");
  const RunConfig dflt = RunConfig::from_json(no_kernel);
  CHECK(dflt.kernel.family == KernelFamily::gaussian);
  CHECK(dflt.median_bandwidth);

  auto rejects = [](json j) { CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError); };
  json j = base_config();
  j["schema"] = 2;
  rejects(j);
  j = base_config();
  j.erase("schema");
  rejects(j);
  j = base_config();
  j["colour"] = "red";
  rejects(j);
  j = base_config();
  j["compression"]["tol"] = 1.5;
  rejects(j);
  j = base_config();
  j["tree"]["leaf_size"] = 1;
  rejects(j);
  j = base_config();
  j["solver"]["lambda"] = -1.0;
  rejects(j);
  j = base_config();
  j["kernel"]["bandwidth"] = "auto";
  rejects(j);
  j = base_config();
  j["dataset"]["path"] = "x.csv";
  rejects(j);
  j = base_config();
  j["dataset"] = {{"synthetic", "helix"}, {"n", 10}, {"d", 2}};
  rejects(j);
}

TEST_CASE("report round trip") {
  const Outcome out = execute("verify", base_config());
  REQUIRE(out.exit_code == ExitCode::ok);
  const RunReport r = RunReport::from_json(out.document);
  CHECK(r.to_json() == out.document);
  CHECK(out.document["schema"] == 1);
  CHECK(out.document["passed"] == true);
}

TEST_CASE("every command emits the same report keys") {
  json cfg = base_config(300);
  cfg["oracle"] = true;
  json krr = cfg;
  krr["dataset"] = {{"synthetic", "two-cluster"}, {"n", 300}, {"d", 2}};
  krr["test"] = {{"n", 50}};
  json bench = cfg;
  bench["bench"] = {{"sizes", {256, 512}}, {"repetitions", 1}};

  std::optional<std::set<std::string>> top, accuracy, structure;
  for (const std::string& cmd : command_names()) {
    const json& c = cmd == "krr" ? krr : cmd == "bench" ? bench : cfg;
    const Outcome out = execute(cmd, c);
    INFO(cmd);
    REQUIRE(out.exit_code == ExitCode::ok);
    if (!top) {
      top = keys(out.document);
      accuracy = keys(out.document["accuracy"]);
      structure = keys(out.document["structure"]);
    }
    CHECK(keys(out.document) == *top);
    CHECK(keys(out.document["accuracy"]) == *accuracy);
    CHECK(keys(out.document["structure"]) == *structure);
  }
}

TEST_CASE("solve on a single leaf matches the dense oracle") {
  json cfg = base_config(40);
  cfg["oracle"] = true;
  cfg["tree"]["leaf_size"] = 64;
  const Outcome out = execute("solve", cfg);
  REQUIRE(out.exit_code == ExitCode::ok);
  CHECK(out.document["accuracy"]["solve_rel_error"].get<double>() <= 1e-12);
  CHECK(out.document["structure"]["leaves"] == 1);
}

TEST_CASE("solve reads and writes files") {
  const PointSet pts = gen_synthetic(SyntheticKind::uniform_cube, 200, 2, 9);
  save_points(scratch("pts.bin"), pts, PointFormat::f64_binary);
  const auto b = oracle::normal_vector(200, 1);
  save_column(scratch("rhs.csv"), b);
  json cfg = base_config();
  cfg["dataset"] = {{"path", scratch("pts.bin").string()}, {"format", "f64-binary"}};
  cfg["rhs"] = scratch("rhs.csv").string();
  cfg["output"] = scratch("x.csv").string();
  cfg["oracle"] = true;
  const Outcome out = execute("solve", cfg);
  REQUIRE(out.exit_code == ExitCode::ok);
  const auto x = load_column(scratch("x.csv"));
  const DenseOracle o(pts, KernelSpec::gaussian(median_pairwise_distance(pts)), 0.5);
  CHECK(relative_error(x, o.solve(b)) <= 1e-4);
  CHECK(out.document["accuracy"]["roundtrip_rel_error"].get<double>() <= 1e-8);
}

TEST_CASE("krr command") {
  json cfg = base_config();
  cfg["dataset"] = {{"synthetic", "two-cluster"}, {"n", 600}, {"d", 3}, {"separation", 6.0}};
  cfg["test"] = {{"n", 200}};
  cfg["solver"]["lambda"] = 0.6;
  cfg["oracle"] = true;
  const Outcome out = execute("krr", cfg);
  REQUIRE(out.exit_code == ExitCode::ok);
  CHECK(out.document["accuracy"]["test_accuracy"].get<double>() >= 0.95);
  CHECK(out.document["accuracy"]["oracle_sign_agreement"].get<double>() >= 0.99);
}

TEST_CASE("exit codes") {
  CHECK(execute("verify", base_config()).exit_code == ExitCode::ok);

  json strict = base_config();
  strict["verify"] = {{"roundtrip_tol", 1e-300}};
  const Outcome failed = execute("verify", strict);
  CHECK(failed.exit_code == ExitCode::check_failed);
  CHECK(failed.document["passed"] == false);

  json bad = base_config();
  bad["schema"] = 0;
  const Outcome cfg_err = execute("solve", bad);
  CHECK(cfg_err.exit_code == ExitCode::config_error);
  CHECK(cfg_err.document["error"]["kind"] == "config");
  CHECK(execute("frobnicate", base_config()).exit_code == ExitCode::config_error);

  json missing = base_config();
  missing["dataset"] = {{"path", "/nonexistent/points.csv"}};
  CHECK(execute("build", missing).exit_code == ExitCode::config_error);

  json singular = base_config();
  fs::path dup = scratch("dup.csv");
  {
    std::ofstream f(dup);
    for (int i = 0; i < 60; ++i) f << "1,1\n";
  }
  singular["dataset"] = {{"path", dup.string()}};
  singular["kernel"] = {{"family", "gaussian"}, {"bandwidth", 1.0}};
  singular["solver"]["lambda"] = 0.0;
  singular["tree"]["leaf_size"] = 8;
  const Outcome num = execute("build", singular);
  CHECK(num.exit_code == ExitCode::numerical_error);
  CHECK(num.document["error"]["kind"] == "numerical");

  json big = base_config(300);
  big["oracle_cap"] = 100;
  CHECK(execute("verify", big).exit_code == ExitCode::config_error);
}

TEST_CASE("thread and seed overrides") {
  const Outcome a = execute("solve", base_config(), {}, 1, 77);
  const Outcome b = execute("solve", base_config(), {}, 3, 77);
  REQUIRE(a.exit_code == ExitCode::ok);
  CHECK(a.document["accuracy"] == b.document["accuracy"]);
  CHECK(a.document["config"]["seed"] == 77);
  CHECK(execute("solve", base_config(), {}, 0).exit_code == ExitCode::config_error);
}

TEST_CASE("bench reports growth exponents") {
  json cfg = base_config();
  cfg["bench"] = {{"sizes", {512, 1024}}, {"repetitions", 1}};
  const Outcome out = execute("bench", cfg);
  REQUIRE(out.exit_code == ExitCode::ok);
  CHECK(out.document["bench"]["rows"].size() == 2);
  CHECK(out.document["bench"]["growth_exponents"].contains("compress+factorize"));
  json file = base_config();
  file["dataset"] = {{"path", "x.csv"}};
  CHECK(execute("bench", file).exit_code == ExitCode::config_error);
}

TEST_CASE("tree dump") {
  CommandOptions opts;
  opts.dump_tree = scratch("tree.json").string();
  REQUIRE(execute("build", base_config(), opts).exit_code == ExitCode::ok);
  std::ifstream in(*opts.dump_tree);
  const json t = json::parse(in);
  CHECK(t.is_object());
}

TEST_CASE("growth exponent fit") {
  const std::vector<double> n{1000, 2000, 4000, 8000};
  std::vector<double> t;
  for (double x : n) t.push_back(3e-6 * std::pow(x, 1.5));
  CHECK(fit_growth_exponent(n, t) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(random_vector(10, 3) == random_vector(10, 3));
}
