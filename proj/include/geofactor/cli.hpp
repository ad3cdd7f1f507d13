#pragma once

#include "geofactor/io.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace geofactor {

/// Everything that determines a solver output, embedded in every JSON it writes.
/// Wall time is printed but kept out of the JSON so reruns are byte-identical.
struct RunManifest
{
  std::string command;
  /// (path, FNV-1a digest of the file bytes).
  std::vector<std::pair<std::string, std::string>> inputs;
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;

  Json to_json() const;
};

/// Version strings of the library and its dependencies.
Json versions_json();

enum ExitCode : int
{
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitUsage = 2,
};

/// Runs one command line (without the program name). Summaries go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace geofactor
