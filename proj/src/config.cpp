#include "kernelsolve/config.hpp"

#include <cmath>

#include "kernelsolve/error.hpp"
#include "kernelsolve/synthetic.hpp"

namespace kernelsolve {

namespace {

using nlohmann::json;

const json& require_object(const json& j, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  return j;
}

template <typename T>
T get_number(const json& obj, const char* key, T fallback, const char* where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(std::string(where) + "." + key + " must be a number");
    const T x = v.get<T>();
    if (!std::isfinite(x)) throw ConfigError(std::string(where) + "." + key + " must be finite");
    return x;
  } else {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
      throw ConfigError(std::string(where) + "." + key + " must be a non-negative integer");
    return static_cast<T>(v.get<unsigned long long>());
  }
}

std::optional<std::string> get_string(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) return std::nullopt;
  if (!obj.at(key).is_string()) throw ConfigError(std::string(where) + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

DatasetConfig parse_dataset(const json& j, const char* where) {
  require_object(j, where);
  reject_unknown(j, {"path", "format", "synthetic", "n", "d", "separation"}, where);
  DatasetConfig ds;
  ds.path = get_string(j, "path", where);
  ds.synthetic = get_string(j, "synthetic", where);
  if (ds.path.has_value() == ds.synthetic.has_value())
    throw ConfigError(std::string(where) + " needs exactly one of 'path' or 'synthetic'");
  if (ds.path) {
    try {
      ds.format = point_format_from_string(get_string(j, "format", where).value_or("csv"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string(where) + ".format: " + e.what());
    }
  } else {
    if (*ds.synthetic != "two-cluster") {
      try {
        synthetic_kind_from_string(*ds.synthetic);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(where) + ".synthetic: " + e.what());
      }
    }
    ds.n = get_number<std::size_t>(j, "n", 0, where);
    ds.d = get_number<std::size_t>(j, "d", 0, where);
    ds.separation = get_number<double>(j, "separation", 5.0, where);
    if (ds.n < 1 || ds.d < 1) throw ConfigError(std::string(where) + ": synthetic data needs n >= 1 and d >= 1");
    if (*ds.synthetic == "helix" && ds.d < 3) throw ConfigError(std::string(where) + ": helix needs d >= 3");
  }
  return ds;
}

json dataset_to_json(const DatasetConfig& ds) {
  json j = json::object();
  if (ds.path) {
    j["path"] = *ds.path;
    j["format"] = ds.format == PointFormat::csv ? "csv" : "f64-binary";
  } else {
    j["synthetic"] = *ds.synthetic;
    j["n"] = ds.n;
    j["d"] = ds.d;
    if (*ds.synthetic == "two-cluster") j["separation"] = ds.separation;
  }
  return j;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  require_object(j, "config");
  reject_unknown(j,
                 {"schema", "dataset", "kernel", "tree", "compression", "solver", "seed", "threads", "oracle_cap",
                  "oracle", "rhs", "weights", "labels", "output", "test", "verify", "bench"},
                 "config");
  if (!j.contains("schema") || !j.at("schema").is_number_integer() || j.at("schema").get<int>() != kSchemaVersion)
    throw ConfigError("config.schema must be " + std::to_string(kSchemaVersion));
  if (!j.contains("dataset")) throw ConfigError("config.dataset is required");

  RunConfig cfg;
  cfg.dataset = parse_dataset(j.at("dataset"), "dataset");

  if (j.contains("kernel")) {
    const json& k = require_object(j.at("kernel"), "kernel");
    reject_unknown(k, {"family", "bandwidth", "degree", "shift"}, "kernel");
    try {
      cfg.kernel.family = kernel_family_from_string(get_string(k, "family", "kernel").value_or("gaussian"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("kernel.family: ") + e.what());
    }
    if (k.contains("bandwidth") && k.at("bandwidth").is_string()) {
      if (k.at("bandwidth").get<std::string>() != "median")
        throw ConfigError("kernel.bandwidth must be a positive number or \"median\"");
      cfg.median_bandwidth = true;
    } else {
      cfg.kernel.bandwidth = get_number<double>(k, "bandwidth", 1.0, "kernel");
    }
    if (k.contains("degree") && !k.at("degree").is_number_integer()) throw ConfigError("kernel.degree must be an integer");
    cfg.kernel.degree = k.value("degree", 2);
    cfg.kernel.shift = get_number<double>(k, "shift", 1.0, "kernel");
    if (!cfg.median_bandwidth) {
      try {
        cfg.kernel.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
      }
    } else if (cfg.kernel.degree < 1) {
      throw ConfigError("kernel.degree must be >= 1");
    }
  } else {
    cfg.median_bandwidth = true;
  }

  if (j.contains("tree")) {
    const json& t = require_object(j.at("tree"), "tree");
    reject_unknown(t, {"leaf_size"}, "tree");
    cfg.leaf_size = get_number<std::size_t>(t, "leaf_size", 256, "tree");
  }
  if (cfg.leaf_size < 2) throw ConfigError("tree.leaf_size must be >= 2");

  if (j.contains("compression")) {
    const json& c = require_object(j.at("compression"), "compression");
    reject_unknown(c, {"tol", "max_rank", "samples", "neighbors"}, "compression");
    cfg.compression.tol = get_number<double>(c, "tol", 1e-5, "compression");
    cfg.compression.max_rank = get_number<std::size_t>(c, "max_rank", 256, "compression");
    cfg.compression.samples = get_number<std::size_t>(c, "samples", 0, "compression");
    cfg.compression.neighbors = get_number<std::size_t>(c, "neighbors", 32, "compression");
  }
  if (!(cfg.compression.tol > 0.0 && cfg.compression.tol < 1.0)) throw ConfigError("compression.tol must lie in (0, 1)");
  if (cfg.compression.max_rank < 1) throw ConfigError("compression.max_rank must be >= 1");

  if (j.contains("solver")) {
    const json& s = require_object(j.at("solver"), "solver");
    reject_unknown(s, {"lambda"}, "solver");
    cfg.lambda = get_number<double>(s, "lambda", 1.0, "solver");
  }
  if (cfg.lambda < 0.0) throw ConfigError("solver.lambda must be >= 0");

  cfg.seed = get_number<std::uint64_t>(j, "seed", 0, "config");
  cfg.threads = static_cast<int>(get_number<std::size_t>(j, "threads", 1, "config"));
  if (cfg.threads < 1 || cfg.threads > 1024) throw ConfigError("config.threads must lie in [1, 1024]");
  cfg.compression.seed = cfg.seed;
  cfg.compression.threads = cfg.threads;
  cfg.oracle_cap = get_number<std::size_t>(j, "oracle_cap", 8192, "config");
  if (j.contains("oracle")) {
    if (!j.at("oracle").is_boolean()) throw ConfigError("config.oracle must be a boolean");
    cfg.oracle = j.at("oracle").get<bool>();
  }

  cfg.rhs = get_string(j, "rhs", "config");
  cfg.weights = get_string(j, "weights", "config");
  cfg.labels = get_string(j, "labels", "config");
  cfg.output = get_string(j, "output", "config");

  if (j.contains("test")) {
    const json& t = require_object(j.at("test"), "test");
    if (t.contains("n") && !t.contains("path") && !t.contains("synthetic")) {
      reject_unknown(t, {"n"}, "test");
      cfg.test_n = get_number<std::size_t>(t, "n", 0, "test");
    } else {
      json copy = t;
      cfg.test_labels = get_string(t, "labels", "test");
      copy.erase("labels");
      cfg.test = parse_dataset(copy, "test");
    }
  }

  if (j.contains("verify")) {
    const json& v = require_object(j.at("verify"), "verify");
    reject_unknown(v, {"matvec_tol", "solve_tol", "roundtrip_tol", "symmetry_tol", "trials"}, "verify");
    cfg.verify.matvec_tol = get_number<double>(v, "matvec_tol", cfg.verify.matvec_tol, "verify");
    cfg.verify.solve_tol = get_number<double>(v, "solve_tol", cfg.verify.solve_tol, "verify");
    cfg.verify.roundtrip_tol = get_number<double>(v, "roundtrip_tol", cfg.verify.roundtrip_tol, "verify");
    cfg.verify.symmetry_tol = get_number<double>(v, "symmetry_tol", cfg.verify.symmetry_tol, "verify");
    cfg.verify.trials = get_number<std::size_t>(v, "trials", cfg.verify.trials, "verify");
    if (cfg.verify.trials < 1) throw ConfigError("verify.trials must be >= 1");
  }

  if (j.contains("bench")) {
    const json& b = require_object(j.at("bench"), "bench");
    reject_unknown(b, {"sizes", "repetitions"}, "bench");
    if (b.contains("sizes")) {
      const json& s = b.at("sizes");
      if (!s.is_array() || s.empty()) throw ConfigError("bench.sizes must be a non-empty array");
      cfg.bench.sizes.clear();
      for (const json& e : s) {
        if (!e.is_number_integer() || e.get<long long>() < 1) throw ConfigError("bench.sizes entries must be positive integers");
        cfg.bench.sizes.push_back(e.get<std::size_t>());
      }
    }
    cfg.bench.repetitions = get_number<std::size_t>(b, "repetitions", 3, "bench");
    if (cfg.bench.repetitions < 1) throw ConfigError("bench.repetitions must be >= 1");
  }
  return cfg;
}

json RunConfig::to_json() const {
  json j;
  j["schema"] = kSchemaVersion;
  j["dataset"] = dataset_to_json(dataset);
  json k;
  k["family"] = std::string(to_string(kernel.family));
  if (median_bandwidth)
    k["bandwidth"] = "median";
  else
    k["bandwidth"] = kernel.bandwidth;
  k["degree"] = kernel.degree;
  k["shift"] = kernel.shift;
  j["kernel"] = k;
  j["tree"] = {{"leaf_size", leaf_size}};
  j["compression"] = {{"tol", compression.tol},
                      {"max_rank", compression.max_rank},
                      {"samples", compression.samples},
                      {"neighbors", compression.neighbors}};
  j["solver"] = {{"lambda", lambda}};
  j["seed"] = seed;
  j["threads"] = threads;
  j["oracle_cap"] = oracle_cap;
  j["oracle"] = oracle;
  if (rhs) j["rhs"] = *rhs;
  if (weights) j["weights"] = *weights;
  if (labels) j["labels"] = *labels;
  if (output) j["output"] = *output;
  if (test) {
    json t = dataset_to_json(*test);
    if (test_labels) t["labels"] = *test_labels;
    j["test"] = t;
  } else if (test_n > 0) {
    j["test"] = {{"n", test_n}};
  }
  j["verify"] = {{"matvec_tol", verify.matvec_tol},
                 {"solve_tol", verify.solve_tol},
                 {"roundtrip_tol", verify.roundtrip_tol},
                 {"symmetry_tol", verify.symmetry_tol},
                 {"trials", verify.trials}};
  j["bench"] = {{"sizes", bench.sizes}, {"repetitions", bench.repetitions}};
  return j;
}

}  // namespace kernelsolve
