#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace isac {

/// Options shared by the batch commands.
struct CliOptions {
    std::string out_dir = ".";
    int threads = 1;
    std::optional<uint64_t> seed;          // overrides [mc] seed
    std::optional<int> support_halfwidth;  // overrides the default truncation
    double scale = 1.0;                    // >= 1, desk-scale reduction
    bool noiseless = false;                // simulate: drop the noise term
};

// Each command returns a process exit code and reports through `out`.
int cmd_validate(const std::string& scenario_path, const CliOptions& opts, std::ostream& out);
int cmd_simulate(const std::string& scenario_path, const CliOptions& opts, std::ostream& out);
int cmd_estimate(const std::string& scenario_path, const CliOptions& opts, std::ostream& out);
int cmd_crlb(const std::string& scenario_path, const CliOptions& opts, std::ostream& out);
int cmd_rmse(const std::string& scenario_path, const CliOptions& opts, std::ostream& out);

} // namespace isac
