#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace specflow {

/// Exit codes of the scenario runner.
/// 0: all requested methods agree; 1: configuration or execution error;
/// 2: methods disagree or a report is flagged as untrustworthy.
inline constexpr int kExitAgreement = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDisagreement = 2;

struct CliOptions {
    std::string verb;  ///< run | sweep | plotdata
    std::string config_path;
    std::string out_dir = ".";
    std::string format;  ///< overrides output.format when nonempty
    int threads = 1;
    std::optional<std::uint64_t> seed_override;
};

/// Loads the JSON config, executes the verb, writes report files into
/// out_dir, and returns the process exit code. Validation errors are printed
/// to stderr naming the offending field.
int run_cli(const CliOptions& options);

/// argv front end (flag parsing + dispatch).
int run_cli(int argc, const char* const* argv);

}  // namespace specflow
