#include <iostream>

#include <CLI11.hpp>

#include "tbq/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Time-bin qudit encoder, QKD and tomography simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TBQ_VERSION);

  tbq::cli::RunRequest request;
  std::string output;
  for (const auto& name : tbq::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("scenario", request.scenario, "scenario YAML file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", request.overrides, "override a field, e.g. --set qkd.mu=0.5")->take_all();
    sub->add_option("-o,--output", output, "output directory (defaults to the scenario's output_dir)");
    sub->callback([&request, name] { request.subcommand = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tbq::cli::kExitConfig;
  }
  if (!output.empty()) request.output_dir = output;

  const auto outcome = tbq::cli::run(request, std::cerr);
  if (outcome.exit_code == tbq::cli::kExitOk) {
    for (const auto& a : outcome.artifacts) std::cout << (outcome.output_dir / a).string() << "\n";
  }
  return outcome.exit_code;
}
