// Subcommand orchestration behind the `tbq` executable.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tbq/scenario.hpp"

namespace tbq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitStatistics = 4;

const std::vector<std::string>& subcommands();

struct RunRequest {
  std::string subcommand;
  std::filesystem::path scenario;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> output_dir;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::filesystem::path output_dir;
  std::vector<std::string> artifacts;  // file names inside output_dir
};

/// Parses the scenario, runs the subcommand and writes its artifacts plus
/// manifest.json. Errors map to exit codes 2/3/4; nothing is thrown.
RunOutcome run(const RunRequest& request, std::ostream& log);

/// Runs on an already parsed scenario (throws tbq::Error subclasses).
std::vector<std::string> run_scenario(const std::string& subcommand, const Scenario& scenario,
                                      const std::filesystem::path& output_dir, std::ostream& log);

int exit_code_for(const std::exception& e);

}  // namespace tbq::cli
