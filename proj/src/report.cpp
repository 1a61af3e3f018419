#include "kernelsolve/report.hpp"

#include "kernelsolve/config.hpp"

namespace kernelsolve {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json timings_to_json(const PhaseTimings& t) {
  return {{"tree", t.tree}, {"knn", t.knn}, {"compress", t.compress}, {"factorize", t.factorize}, {"solve", t.solve}};
}

PhaseTimings timings_from_json(const json& j) {
  PhaseTimings t;
  t.tree = j.at("tree").get<double>();
  t.knn = j.at("knn").get<double>();
  t.compress = j.at("compress").get<double>();
  t.factorize = j.at("factorize").get<double>();
  t.solve = j.at("solve").get<double>();
  return t;
}

}  // namespace

bool RunReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

void RunReport::add_check(std::string name, bool ok, std::optional<double> value, std::optional<double> threshold) {
  checks.push_back({std::move(name), ok, value, threshold});
}

void RunReport::record_system(const KernelSystem& sys) {
  n = sys.points().size();
  d = sys.points().dim();
  depth = sys.tree().depth();
  leaves = sys.tree().leaves().size();
  compression = sys.kernel().stats();
  timings = sys.timings();
  if (sys.factorized()) {
    factor_memory_bytes = sys.factor().memory_bytes();
    diagnostics = sys.factor().diagnostics();
  }
}

json RunReport::to_json() const {
  json j;
  j["schema"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = config;
  j["passed"] = passed();
  j["accuracy"] = {{"matvec_rel_error", opt(matvec_rel_error)},
                   {"matvec_max_abs_error", opt(matvec_max_abs_error)},
                   {"solve_rel_error", opt(solve_rel_error)},
                   {"solve_max_abs_error", opt(solve_max_abs_error)},
                   {"roundtrip_rel_error", opt(roundtrip_rel_error)},
                   {"train_accuracy", opt(train_accuracy)},
                   {"test_accuracy", opt(test_accuracy)},
                   {"oracle_sign_agreement", opt(oracle_sign_agreement)}};

  json levels = json::array();
  for (const auto& l : compression.ranks_per_level)
    levels.push_back({{"level", l.level},
                      {"nodes", l.nodes},
                      {"min_rank", l.min_rank},
                      {"max_rank", l.max_rank},
                      {"mean_rank", l.mean_rank}});
  j["structure"] = {{"n", n},
                    {"d", d},
                    {"depth", depth},
                    {"leaves", leaves},
                    {"bandwidth", bandwidth},
                    {"ranks_per_level", levels},
                    {"max_rank", compression.max_rank},
                    {"degenerate_nodes", compression.degenerate_nodes},
                    {"coeff_growth_nodes", compression.coeff_growth_nodes},
                    {"max_abs_coeff", compression.max_abs_coeff},
                    {"compressed_memory_bytes", compression.memory_bytes},
                    {"factor_memory_bytes", factor_memory_bytes}};
  j["timings"] = timings_to_json(timings);
  j["diagnostics"] = {{"cholesky_fallbacks", diagnostics.cholesky_fallbacks},
                      {"z_condition_max_per_level", diagnostics.z_condition_max_per_level},
                      {"warnings", diagnostics.warnings}};

  json cks = json::array();
  for (const auto& c : checks)
    cks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", opt(c.value)}, {"threshold", opt(c.threshold)}});
  j["checks"] = cks;

  json rows = json::array();
  for (const auto& r : bench)
    rows.push_back({{"n", r.n}, {"max_rank", r.max_rank}, {"timings", timings_to_json(r.timings)}});
  json slopes = json::object();
  for (const auto& [phase, slope] : growth_exponents) slopes[phase] = slope;
  j["bench"] = {{"rows", rows}, {"growth_exponents", slopes}};
  return j;
}

RunReport RunReport::from_json(const json& j) {
  RunReport r;
  r.command = j.at("command").get<std::string>();
  r.config = j.at("config");
  const json& a = j.at("accuracy");
  r.matvec_rel_error = read_opt(a, "matvec_rel_error");
  r.matvec_max_abs_error = read_opt(a, "matvec_max_abs_error");
  r.solve_rel_error = read_opt(a, "solve_rel_error");
  r.solve_max_abs_error = read_opt(a, "solve_max_abs_error");
  r.roundtrip_rel_error = read_opt(a, "roundtrip_rel_error");
  r.train_accuracy = read_opt(a, "train_accuracy");
  r.test_accuracy = read_opt(a, "test_accuracy");
  r.oracle_sign_agreement = read_opt(a, "oracle_sign_agreement");

  const json& s = j.at("structure");
  r.n = s.at("n").get<std::size_t>();
  r.d = s.at("d").get<std::size_t>();
  r.depth = s.at("depth").get<std::size_t>();
  r.leaves = s.at("leaves").get<std::size_t>();
  r.bandwidth = s.at("bandwidth").get<double>();
  for (const json& l : s.at("ranks_per_level")) {
    LevelRankStats ls;
    ls.level = l.at("level").get<std::size_t>();
    ls.nodes = l.at("nodes").get<std::size_t>();
    ls.min_rank = l.at("min_rank").get<std::size_t>();
    ls.max_rank = l.at("max_rank").get<std::size_t>();
    ls.mean_rank = l.at("mean_rank").get<double>();
    r.compression.ranks_per_level.push_back(ls);
  }
  r.compression.max_rank = s.at("max_rank").get<std::size_t>();
  r.compression.degenerate_nodes = s.at("degenerate_nodes").get<std::size_t>();
  r.compression.coeff_growth_nodes = s.at("coeff_growth_nodes").get<std::size_t>();
  r.compression.max_abs_coeff = s.at("max_abs_coeff").get<double>();
  r.compression.memory_bytes = s.at("compressed_memory_bytes").get<std::size_t>();
  r.factor_memory_bytes = s.at("factor_memory_bytes").get<std::size_t>();

  r.timings = timings_from_json(j.at("timings"));
  const json& dg = j.at("diagnostics");
  r.diagnostics.cholesky_fallbacks = dg.at("cholesky_fallbacks").get<std::size_t>();
  r.diagnostics.z_condition_max_per_level = dg.at("z_condition_max_per_level").get<std::vector<double>>();
  r.diagnostics.warnings = dg.at("warnings").get<std::vector<std::string>>();

  for (const json& c : j.at("checks"))
    r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), read_opt(c, "value"),
                        read_opt(c, "threshold")});
  for (const json& row : j.at("bench").at("rows"))
    r.bench.push_back({row.at("n").get<std::size_t>(), timings_from_json(row.at("timings")),
                       row.at("max_rank").get<std::size_t>()});
  for (const auto& [phase, slope] : j.at("bench").at("growth_exponents").items())
    r.growth_exponents.emplace_back(phase, slope.get<double>());
  return r;
}

json tree_to_json(const PartitionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& nd : tree.nodes()) {
    json e = {{"id", nd.id}, {"level", nd.level}, {"begin", nd.begin}, {"end", nd.end}};
    e["children"] = nd.children ? json::array({nd.left(), nd.right()}) : json(nullptr);
    e["split"] = nd.split ? json{{"axis", nd.split->axis},
                                 {"direction", nd.split->direction},
                                 {"threshold", nd.split->threshold}}
                          : json(nullptr);
    nodes.push_back(e);
  }
  return {{"schema", kSchemaVersion},
          {"leaf_size", tree.leaf_size()},
          {"depth", tree.depth()},
          {"perm", tree.perm()},
          {"nodes", nodes}};
}

}  // namespace kernelsolve
