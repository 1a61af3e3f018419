#include "kernelsolve/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "kernelsolve/error.hpp"
#include "kernelsolve/oracle.hpp"
#include "kernelsolve/point_io.hpp"
#include "kernelsolve/random.hpp"
#include "kernelsolve/synthetic.hpp"

namespace kernelsolve {

using nlohmann::json;

namespace {

// stream keys for the seeded vectors each command draws
enum : std::uint64_t { kKeyRhs = 1, kKeyWeights = 2, kKeyTest = 3, kKeyVerify = 100 };

KernelSpec resolve_kernel(const RunConfig& cfg, const PointSet& points) {
  KernelSpec spec = cfg.kernel;
  if (cfg.median_bandwidth) {
    spec.bandwidth = median_pairwise_distance(points, 2048, cfg.seed);
    if (!(spec.bandwidth > 0.0)) spec.bandwidth = 1.0;
  }
  return spec;
}

SolverSettings settings_from(const RunConfig& cfg) {
  SolverSettings s;
  s.leaf_size = cfg.leaf_size;
  s.compression = cfg.compression;
  s.compression.seed = cfg.seed;
  s.compression.threads = cfg.threads;
  s.lambda = cfg.lambda;
  s.threads = cfg.threads;
  return s;
}

std::vector<double> load_or_random(const std::optional<std::string>& path, std::size_t n, std::uint64_t seed,
                                   const char* what) {
  if (!path) return random_vector(n, seed);
  std::vector<double> v = load_column(*path);
  if (v.size() != n)
    throw ConfigError(std::string(what) + " file has " + std::to_string(v.size()) + " rows, expected " +
                      std::to_string(n));
  return v;
}

void maybe_dump_tree(const CommandOptions& opts, const PartitionTree& tree) {
  if (!opts.dump_tree) return;
  std::ofstream out(*opts.dump_tree);
  if (!out) throw ConfigError("cannot write tree dump '" + *opts.dump_tree + "'");
  out << tree_to_json(tree).dump(1) << '\n';
}

void maybe_write(const std::optional<std::string>& path, std::span<const double> values) {
  if (path) save_column(*path, values);
}

std::vector<double> axpy(double a, std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

double accuracy(std::span<const double> pred, std::span<const double> labels) {
  if (pred.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += (pred[i] >= 0.0 ? 1.0 : -1.0) == labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

bool is_sign_labels(std::span<const double> labels) {
  return std::all_of(labels.begin(), labels.end(), [](double v) { return v == 1.0 || v == -1.0; });
}

struct Prepared {
  Dataset data;
  KernelSpec spec;
  std::unique_ptr<KernelSystem> sys;
};

Prepared prepare(const RunConfig& cfg, const CommandOptions& opts, RunReport& report, bool factor = true) {
  Prepared p{load_dataset(cfg.dataset, cfg.seed), {}, nullptr};
  p.spec = resolve_kernel(cfg, p.data.points);
  report.bandwidth = p.spec.bandwidth;
  p.sys = KernelSystem::build(p.data.points, p.spec, settings_from(cfg), factor);
  maybe_dump_tree(opts, p.sys->tree());
  return p;
}

/// Structural invariants of tree and skeletons, checked exhaustively.
std::optional<std::string> structural_violation(const CompressedKernel& ck) {
  const PartitionTree& tree = ck.tree();
  std::vector<std::size_t> sorted = tree.perm();
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k)
    if (sorted[k] != k) return "perm is not a bijection";
  if (tree.root().begin != 0 || tree.root().end != tree.point_count()) return "root does not own every point";
  for (const TreeNode& nd : tree.nodes()) {
    if (nd.size() == 0) return "empty node " + std::to_string(nd.id);
    if (nd.is_leaf()) {
      if (nd.size() > tree.leaf_size()) return "leaf " + std::to_string(nd.id) + " exceeds leaf capacity";
      continue;
    }
    const TreeNode& l = tree.node(nd.left());
    const TreeNode& r = tree.node(nd.right());
    if (l.begin != nd.begin || l.end != r.begin || r.end != nd.end)
      return "children of node " + std::to_string(nd.id) + " do not partition its range";
    if (l.size() < r.size() || l.size() - r.size() > 1) return "unbalanced split at node " + std::to_string(nd.id);
    if (!nd.parent) continue;
    const Skeleton& s = ck.skeleton(nd.id);
    const auto& ls = ck.skeleton(l.id).skel;
    const auto& rs = ck.skeleton(r.id).skel;
    for (std::size_t id : s.skel)
      if (std::find(ls.begin(), ls.end(), id) == ls.end() && std::find(rs.begin(), rs.end(), id) == rs.end())
        return "skeleton of node " + std::to_string(nd.id) + " is not nested in its children";
  }
  for (const TreeNode& nd : tree.nodes())
    if (nd.parent && ck.rank(nd.id) > ck.params().max_rank) return "rank above max_rank at node " + std::to_string(nd.id);
  return std::nullopt;
}

CommandResult cmd_build(const RunConfig& cfg, const CommandOptions& opts) {
  CommandResult res;
  auto p = prepare(cfg, opts, res.report);
  res.report.record_system(*p.sys);
  return res;
}

CommandResult cmd_solve(const RunConfig& cfg, const CommandOptions& opts) {
  CommandResult res;
  RunReport& rep = res.report;
  auto p = prepare(cfg, opts, rep);
  const std::size_t n = p.data.points.size();
  const auto b = load_or_random(cfg.rhs, n, SplitMix64(cfg.seed).split(kKeyRhs)(), "rhs");
  const auto x = p.sys->solve_original(b);
  const PhaseTimings t = p.sys->timings();

  const auto again = p.sys->solve_original(axpy(cfg.lambda, x, p.sys->matvec_original(x)));
  rep.roundtrip_rel_error = relative_error(again, x);
  if (cfg.oracle) {
    const DenseOracle oracle(p.data.points, p.spec, cfg.lambda, cfg.oracle_cap);
    const auto xd = oracle.solve(b);
    rep.solve_rel_error = relative_error(x, xd);
    rep.solve_max_abs_error = max_abs_difference(x, xd);
  }
  p.sys->timings() = t;
  rep.record_system(*p.sys);
  maybe_write(cfg.output, x);
  return res;
}

CommandResult cmd_matvec(const RunConfig& cfg, const CommandOptions& opts) {
  CommandResult res;
  RunReport& rep = res.report;
  auto p = prepare(cfg, opts, rep, false);
  const std::size_t n = p.data.points.size();
  const auto w = load_or_random(cfg.weights, n, SplitMix64(cfg.seed).split(kKeyWeights)(), "weights");
  const auto u = p.sys->matvec_original(w);
  if (cfg.oracle) {
    const DenseOracle oracle(p.data.points, p.spec, cfg.lambda, cfg.oracle_cap);
    const auto ud = oracle.matvec(w);
    rep.matvec_rel_error = relative_error(u, ud);
    rep.matvec_max_abs_error = max_abs_difference(u, ud);
  }
  rep.record_system(*p.sys);
  maybe_write(cfg.output, u);
  return res;
}

CommandResult cmd_krr(const RunConfig& cfg, const CommandOptions& opts) {
  CommandResult res;
  RunReport& rep = res.report;
  auto p = prepare(cfg, opts, rep);
  std::vector<double> labels;
  if (cfg.labels) {
    labels = load_column(*cfg.labels);
  } else if (p.data.labels) {
    labels = *p.data.labels;
  } else {
    throw ConfigError("krr needs labels: set 'labels' or use the two-cluster synthetic dataset");
  }
  if (labels.size() != p.data.points.size()) throw ConfigError("labels must have one row per point");

  const auto w = p.sys->solve_original(labels);
  const PhaseTimings t = p.sys->timings();

  std::optional<Dataset> test;
  if (cfg.test) {
    test = load_dataset(*cfg.test, SplitMix64(cfg.seed).split(kKeyTest)());
    if (cfg.test_labels) test->labels = load_column(*cfg.test_labels);
  } else if (cfg.test_n > 0) {
    if (!cfg.dataset.is_synthetic() || *cfg.dataset.synthetic != "two-cluster")
      throw ConfigError("test.n requires the two-cluster synthetic dataset");
    DatasetConfig tc = cfg.dataset;
    tc.n = cfg.test_n;
    test = load_dataset(tc, SplitMix64(cfg.seed).split(kKeyTest)());
  }
  if (test && test->points.dim() != p.data.points.dim()) throw ConfigError("test points have the wrong dimension");

  const auto train_pred = krr_predict(p.data.points, w, p.spec, p.data.points);
  const bool sign_labels = is_sign_labels(labels);
  if (sign_labels) rep.train_accuracy = accuracy(train_pred, labels);

  std::vector<double> test_pred;
  if (test) {
    test_pred = krr_predict(p.data.points, w, p.spec, test->points);
    if (test->labels) {
      if (test->labels->size() != test->points.size()) throw ConfigError("test labels must have one row per point");
      if (is_sign_labels(*test->labels)) rep.test_accuracy = accuracy(test_pred, *test->labels);
    }
  }

  if (cfg.oracle) {
    const DenseOracle oracle(p.data.points, p.spec, cfg.lambda, cfg.oracle_cap);
    const auto wd = oracle.solve(labels);
    rep.solve_rel_error = relative_error(w, wd);
    rep.solve_max_abs_error = max_abs_difference(w, wd);
    const PointSet& eval = test ? test->points : p.data.points;
    const auto fast = test ? test_pred : train_pred;
    const auto dense = krr_predict(p.data.points, wd, p.spec, eval);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < fast.size(); ++i) agree += (fast[i] >= 0.0) == (dense[i] >= 0.0);
    rep.oracle_sign_agreement = static_cast<double>(agree) / static_cast<double>(fast.size());
  }
  p.sys->timings() = t;
  rep.record_system(*p.sys);
  maybe_write(cfg.output, w);
  return res;
}

CommandResult cmd_verify(const RunConfig& cfg, const CommandOptions& opts) {
  CommandResult res;
  RunReport& rep = res.report;
  auto p = prepare(cfg, opts, rep);
  const std::size_t n = p.data.points.size();
  const DenseOracle oracle(p.data.points, p.spec, cfg.lambda, cfg.oracle_cap);
  KernelSystem& sys = *p.sys;
  const VerifyConfig& v = cfg.verify;
  SplitMix64 root = SplitMix64(cfg.seed).split(kKeyVerify);
  std::uint64_t key = 0;
  auto next_vector = [&] { return random_vector(n, root.split(key++)()); };

  const auto violation = structural_violation(sys.kernel());
  rep.add_check(violation ? "structure: " + *violation : "structure", !violation);

  {
    const auto w = next_vector();
    const auto fast = sys.matvec_original(w);
    const auto dense = oracle.matvec(w);
    rep.matvec_rel_error = relative_error(fast, dense);
    rep.matvec_max_abs_error = max_abs_difference(fast, dense);
    rep.add_check("matvec_vs_dense", *rep.matvec_rel_error <= v.matvec_tol, rep.matvec_rel_error, v.matvec_tol);
  }
  {
    const auto a = next_vector();
    const auto b = next_vector();
    const auto ka = sys.matvec_original(a);
    const auto kb = sys.matvec_original(b);
    const double scale = norm2(a) * norm2(b) * std::max(norm2(ka) / norm2(a), norm2(kb) / norm2(b));
    const double asym = std::abs(dot(a, kb) - dot(b, ka)) / scale;
    rep.add_check("operator_symmetry", asym <= v.symmetry_tol, asym, v.symmetry_tol);
  }
  {
    double worst = 0.0;
    for (std::size_t trial = 0; trial < v.trials; ++trial) {
      const auto w = next_vector();
      const auto x = sys.solve_original(axpy(cfg.lambda, w, sys.matvec_original(w)));
      worst = std::max(worst, relative_error(x, w));
    }
    rep.roundtrip_rel_error = worst;
    rep.add_check("roundtrip", worst <= v.roundtrip_tol, worst, v.roundtrip_tol);
  }
  {
    const auto b = next_vector();
    const auto x = sys.solve_original(b);
    const auto xd = oracle.solve(b);
    rep.solve_rel_error = relative_error(x, xd);
    rep.solve_max_abs_error = max_abs_difference(x, xd);
    rep.add_check("solve_vs_dense", *rep.solve_rel_error <= v.solve_tol, rep.solve_rel_error, v.solve_tol);

    const auto b2 = next_vector();
    const auto x2 = sys.solve_original(b2);
    const auto combo = sys.solve_original(axpy(2.5, b, b2));
    const double lin = relative_error(combo, axpy(2.5, x, x2));
    rep.add_check("solve_linearity", lin <= 1e-12, lin, 1e-12);
  }
  rep.record_system(sys);
  res.exit_code = rep.passed() ? ExitCode::ok : ExitCode::check_failed;
  return res;
}

template <typename Get>
double median_of(const std::vector<PhaseTimings>& reps, Get get) {
  std::vector<double> v;
  for (const auto& r : reps) v.push_back(get(r));
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

CommandResult cmd_bench(const RunConfig& cfg, const CommandOptions&) {
  if (!cfg.dataset.is_synthetic()) throw ConfigError("bench requires a synthetic dataset");
  CommandResult res;
  RunReport& rep = res.report;
  for (std::size_t n : cfg.bench.sizes) {
    DatasetConfig ds = cfg.dataset;
    ds.n = n;
    const Dataset data = load_dataset(ds, cfg.seed);
    const KernelSpec spec = resolve_kernel(cfg, data.points);
    rep.bandwidth = spec.bandwidth;
    std::vector<PhaseTimings> reps;
    std::size_t max_rank = 0;
    for (std::size_t r = 0; r < cfg.bench.repetitions; ++r) {
      auto sys = KernelSystem::build(data.points, spec, settings_from(cfg));
      sys->solve_original(random_vector(n, SplitMix64(cfg.seed).split(kKeyRhs)()));
      reps.push_back(sys->timings());
      max_rank = sys->kernel().stats().max_rank;
      if (r + 1 == cfg.bench.repetitions && n == cfg.bench.sizes.back()) rep.record_system(*sys);
    }
    BenchRow row;
    row.n = n;
    row.max_rank = max_rank;
    row.timings.tree = median_of(reps, [](const PhaseTimings& t) { return t.tree; });
    row.timings.knn = median_of(reps, [](const PhaseTimings& t) { return t.knn; });
    row.timings.compress = median_of(reps, [](const PhaseTimings& t) { return t.compress; });
    row.timings.factorize = median_of(reps, [](const PhaseTimings& t) { return t.factorize; });
    row.timings.solve = median_of(reps, [](const PhaseTimings& t) { return t.solve; });
    rep.bench.push_back(row);
  }

  if (rep.bench.size() >= 2) {
    std::vector<double> ns;
    for (const auto& row : rep.bench) ns.push_back(static_cast<double>(row.n));
    auto slope = [&](auto get) {
      std::vector<double> ts;
      for (const auto& row : rep.bench) ts.push_back(get(row.timings));
      return fit_growth_exponent(ns, ts);
    };
    rep.growth_exponents = {
        {"tree", slope([](const PhaseTimings& t) { return t.tree; })},
        {"knn", slope([](const PhaseTimings& t) { return t.knn; })},
        {"compress", slope([](const PhaseTimings& t) { return t.compress; })},
        {"factorize", slope([](const PhaseTimings& t) { return t.factorize; })},
        {"solve", slope([](const PhaseTimings& t) { return t.solve; })},
        {"compress+factorize", slope([](const PhaseTimings& t) { return t.compress + t.factorize; })},
    };
  }
  return res;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"build", "solve", "matvec", "krr", "verify", "bench"};
  return names;
}

Dataset load_dataset(const DatasetConfig& ds, std::uint64_t seed) {
  if (ds.path) return {load_points(*ds.path, ds.format), std::nullopt};
  if (*ds.synthetic == "two-cluster") {
    auto lp = gen_two_clusters(ds.n, ds.d, ds.separation, seed);
    return {std::move(lp.points), std::move(lp.labels)};
  }
  return {gen_synthetic(synthetic_kind_from_string(*ds.synthetic), ds.n, ds.d, seed), std::nullopt};
}

double fit_growth_exponent(std::span<const double> n, std::span<const double> t) {
  if (n.size() != t.size() || n.size() < 2) throw InvalidArgument("fit_growth_exponent: need at least two samples");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n.size(); ++i) {
    x.push_back(std::log(n[i]));
    y.push_back(std::log(std::max(t[i], 1e-9)));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("fit_growth_exponent: sizes must differ");
  return sxy / sxx;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& e : v) e = normal(rng);
  return v;
}

CommandResult run_command(std::string_view command, const RunConfig& cfg, const CommandOptions& opts) {
  CommandResult res;
  if (command == "build") res = cmd_build(cfg, opts);
  else if (command == "solve") res = cmd_solve(cfg, opts);
  else if (command == "matvec") res = cmd_matvec(cfg, opts);
  else if (command == "krr") res = cmd_krr(cfg, opts);
  else if (command == "verify") res = cmd_verify(cfg, opts);
  else if (command == "bench") res = cmd_bench(cfg, opts);
  else throw ConfigError("unknown command '" + std::string(command) + "'");
  res.report.command = std::string(command);
  res.report.config = cfg.to_json();
  return res;
}

json error_document(std::string_view kind, std::string_view message) {
  return {{"schema", kSchemaVersion}, {"error", {{"kind", kind}, {"message", message}}}};
}

Outcome execute(std::string_view command, const json& config, const CommandOptions& opts, std::optional<int> threads,
                std::optional<std::uint64_t> seed) {
  try {
    RunConfig cfg = RunConfig::from_json(config);
    if (threads) {
      if (*threads < 1) throw ConfigError("--threads must be >= 1");
      cfg.threads = cfg.compression.threads = *threads;
    }
    if (seed) cfg.seed = cfg.compression.seed = *seed;
    CommandResult res = run_command(command, cfg, opts);
    return {res.report.to_json(), res.exit_code};
  } catch (const ConfigError& e) {
    return {error_document("config", e.what()), ExitCode::config_error};
  } catch (const ParseError& e) {
    return {error_document("parse", e.what()), ExitCode::config_error};
  } catch (const DataError& e) {
    return {error_document("data", e.what()), ExitCode::config_error};
  } catch (const InvalidArgument& e) {
    return {error_document("invalid-argument", e.what()), ExitCode::config_error};
  } catch (const NumericalError& e) {
    return {error_document("numerical", e.what()), ExitCode::numerical_error};
  } catch (const nlohmann::json::exception& e) {
    return {error_document("config", e.what()), ExitCode::config_error};
  }
}

}  // namespace kernelsolve
