#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "kernelsolve/commands.hpp"

using kernelsolve::ExitCode;

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical kernel matrix compression and fast direct solver"};
  std::string command;
  std::string config_path;
  std::optional<std::string> out_path;
  kernelsolve::CommandOptions opts;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;

  app.add_option("command", command, "build | solve | matvec | krr | verify | bench")
      ->required()
      ->check(CLI::IsMember(kernelsolve::command_names()));
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_option("--dump-tree", opts.dump_tree, "write a JSON dump of the partition tree");
  app.add_option("--threads", threads, "worker threads (overrides the config)");
  app.add_option("--seed", seed, "root seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }

  kernelsolve::Outcome outcome;
  std::ifstream in(config_path);
  if (!in) {
    outcome = {kernelsolve::error_document("config", "cannot open config '" + config_path + "'"),
               ExitCode::config_error};
  } else {
    nlohmann::json cfg = nlohmann::json::parse(in, nullptr, false);
    if (cfg.is_discarded())
      outcome = {kernelsolve::error_document("config", "config '" + config_path + "' is not valid JSON"),
                 ExitCode::config_error};
    else
      outcome = kernelsolve::execute(command, cfg, opts, threads, seed);
  }

  const std::string text = outcome.document.dump(2);
  if (out_path) {
    std::ofstream out(*out_path);
    if (!out) {
      std::cerr << "cannot write '" << *out_path << "'\n";
      return static_cast<int>(ExitCode::config_error);
    }
    out << text << '\n';
  } else {
    std::cout << text << '\n';
  }
  if (outcome.exit_code != ExitCode::ok && outcome.document.contains("error"))
    std::cerr << "kernelsolve: " << outcome.document["error"]["message"].get<std::string>() << '\n';
  return static_cast<int>(outcome.exit_code);
}
