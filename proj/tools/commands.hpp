#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace slgp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Version string recorded in run manifests.
const char* version();

/// Settings read from a `--config` file: either `key = value` lines
/// (optionally grouped under `[subcommand]` headers) or a JSON run manifest,
/// whose "config" object is replayed. Keys are option names without dashes.
struct ConfigFile {
  std::string command;  ///< subcommand recorded in a manifest; empty for key=value files
  std::map<std::string, std::string> values;
};

ConfigFile read_config_file(const std::filesystem::path& path, const std::string& subcommand);

/// Runs the tool on `args` (without the program name). Normal output goes to
/// `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace slgp::cli
