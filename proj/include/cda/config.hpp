#ifndef CDA_CONFIG_HPP
#define CDA_CONFIG_HPP

#include "cda/beamform.hpp"
#include "cda/clocks.hpp"
#include "cda/consensus.hpp"
#include "cda/montecarlo.hpp"
#include "cda/pipeline.hpp"
#include "cda/world.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cda
{

inline constexpr int kConfigVersion = 1;

struct LinkOverride
{
    NodeId tx = 0;
    NodeId rx = 0;
    LinkModel link{};
};

struct SyncScenario
{
    ClockNoiseConfig clocks{};
    LinkModel link{};
    std::vector< LinkOverride > overrides;
    SyncOptions options{};
    StageSchedule schedule = StageSchedule::standard();
    std::size_t epochs = 120;
    std::string topology = "complete";
};

struct BeamformRun
{
    std::size_t trials = 76;
    double theta_deg = 0.0;
    std::size_t histogram_bins = 20;
    std::size_t resync_epochs = 1; // fine epochs between trials with --resync
};

struct SteerRun
{
    std::vector< double > angles_deg{0, 5, 10, 15, 20, 25, 30, 35, 40, 45};
    std::size_t repeats = 2;
};

struct PatternRun
{
    double start_deg = -90.0;
    double stop_deg = 90.0;
    double step_deg = 1.0;
    double steer_deg = 0.0;
    std::size_t nodes = 0; // first k nodes of the array, 0 = all

    std::vector< double > grid() const;
};

/// Everything one run needs. Built from a versioned JSON document; every
/// object rejects keys it does not know.
struct ScenarioConfig
{
    int version = kConfigVersion;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    ArrayGeometry array = ArrayGeometry::reference_default();
    Graph graph = Graph::complete(6);
    SyncScenario sync{};
    BeamformScenario beamform{};
    BeamformRun beamform_run{};
    SteerRun steer{};
    TimingErrorStudyConfig montecarlo{};
    PatternRun pattern{};

    std::string canonical; // sorted-key dump of the source document
    std::uint64_t hash = 0; // FNV-1a of `canonical`
};

/// Parses and validates. Throws ConfigError with a path-qualified message.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

/// Nodes at the array positions with clocks drawn from the scenario's noise
/// model; links from the default plus overrides.
World build_world(const ScenarioConfig& cfg, std::uint64_t seed);

} // namespace cda

#endif // CDA_CONFIG_HPP
