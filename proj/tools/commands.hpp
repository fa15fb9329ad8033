#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bvcf::cli {

/// Options shared by every command; unset optionals keep the scenario's value.
struct CommandOptions {
  std::vector<std::string> scenarios;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> snapshot_stride;
  bool batch = false;
  // validate-kernel
  std::size_t samples = 10000;
  // decay-fit overrides
  std::optional<double> lambda;
  std::vector<double> window;
};

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

/// Each command writes human-readable progress to `log` and returns an exit code.
int cmd_run(const CommandOptions& opts, std::ostream& log);
int cmd_equilibrium(const CommandOptions& opts, std::ostream& log);
int cmd_compare_oracle(const CommandOptions& opts, std::ostream& log);
int cmd_validate_kernel(const CommandOptions& opts, std::ostream& log);
int cmd_decay_fit(const CommandOptions& opts, std::ostream& log);

/// Worker count for --batch, from BVCF_WORKERS (default 1).
int batch_workers();

}  // namespace bvcf::cli
