#ifndef CDA_CLI_HPP
#define CDA_CLI_HPP

#include "cda/config.hpp"
#include "cda/csv.hpp"
#include "cda/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

namespace cda
{

struct CliOptions
{
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> epochs;
    bool resync = false;
};

/// Result of coarse alignment, refinement, and the fine loop on one world.
struct SyncRun
{
    std::unique_ptr<SyncEngine> engine;
    Eigen::VectorXd coarse;
    SyncReport refinement;
    SyncReport fine;
};

/// Runs the full synchronization process and audits the TDMA log.
SyncRun run_sync(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t epochs);

/// Each command returns its rendered outputs; nothing touches the disk until
/// the caller commits them. Summaries go to `log`.
OutputSet cmd_sync(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log);
OutputSet cmd_beamform(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log);
OutputSet cmd_steer(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log);
OutputSet cmd_montecarlo(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log);
OutputSet cmd_pattern(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log);

/// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cda

#endif // CDA_CLI_HPP
