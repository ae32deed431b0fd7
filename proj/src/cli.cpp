#include "cda/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace cda
{

namespace
{
std::uint64_t effective_seed(const ScenarioConfig& cfg, const CliOptions& opts) { return opts.seed.value_or(cfg.seed); }

double ps(double seconds) { return seconds / kPico; }

void add_table(OutputSet& out, const std::string& name, const CsvTable& table, const ScenarioConfig& cfg,
               std::uint64_t seed)
{
    out.add(name, table.render(cfg.hash, seed));
}

CsvTable sync_table(const SyncReport& report, bool with_step)
{
    std::vector<std::string> cols{"epoch", "node", "true_offset_ps", "est_error_ps", "correction_ps", "converged"};
    if (with_step)
        cols.insert(cols.begin(), "step");
    CsvTable t(cols);
    for (const auto& r : report.rows)
    {
        std::vector<std::string> cells{fmt(r.epoch), fmt(r.node), fmt(ps(r.true_offset)), fmt(ps(r.est_error)),
                                       fmt(ps(r.correction)), r.converged ? "1" : "0"};
        if (with_step)
            cells.insert(cells.begin(), fmt(r.epoch));
        t.row(cells);
    }
    return t;
}

CsvTable gain_table(const std::vector<GainRecord>& records, std::size_t nodes)
{
    std::vector<std::string> cols{"epoch", "theta_deg", "g_c", "power_ratio", "combined_peak"};
    for (std::size_t i = 0; i < nodes; ++i)
        cols.push_back("peak_" + std::to_string(i));
    for (std::size_t i = 0; i < nodes; ++i)
        cols.push_back("delay_ps_" + std::to_string(i));
    for (std::size_t i = 0; i < nodes; ++i)
        cols.push_back("delay_error_ps_" + std::to_string(i));
    CsvTable t(cols);
    for (const auto& r : records)
    {
        std::vector<std::string> cells{fmt(r.epoch), fmt(r.theta_deg), fmt(r.g_c), fmt(r.power_ratio),
                                       fmt(r.combined_peak)};
        for (double v : r.solo_peaks)
            cells.push_back(fmt(v));
        for (double v : r.delays)
            cells.push_back(fmt(ps(v)));
        for (double v : r.delay_errors)
            cells.push_back(fmt(ps(v)));
        t.row(cells);
    }
    return t;
}

// Beamforming world driven either by drawn timing errors or by a live
// synchronization run advanced between evaluations.
class GainSource
{
public:
    GainSource(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log)
        : cfg_(cfg), seed_(effective_seed(cfg, opts)), bf_(cfg.beamform, mix_seed(seed_, {0xbeefULL}))
    {
        if (opts.resync)
        {
            sync_ = run_sync(cfg, seed_, opts.epochs.value_or(cfg.sync.epochs));
            const auto& est = sync_.engine->latest_estimates();
            std::vector<double> ranges = bf_.range_estimates();
            for (NodeId n = 1; n < cfg.array.size(); ++n)
            {
                const auto it = est.find({0, n});
                if (it != est.end())
                    ranges[n] = it->second.range;
            }
            bf_.set_range_estimates(ranges);
            log << "resync: " << sync_.fine.rows.size() / std::max<std::size_t>(1, cfg.array.size())
                << " fine epochs before calibration\n";
        }
        bf_.calibrate_farfield(current_errors());
    }

    GainRecord next(double theta_deg, std::size_t epoch)
    {
        if (sync_.engine)
        {
            sync_.engine->run_fine_loop(cfg_.beamform_run.resync_epochs);
            return bf_.evaluate_gain(theta_deg, current_errors(), epoch);
        }
        return bf_.evaluate_gain(theta_deg, bf_.draw_timing_errors(), epoch);
    }

    BeamformExperiment& experiment() { return bf_; }

private:
    Eigen::VectorXd current_errors() const
    {
        if (!sync_.engine)
            return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg_.array.size()));
        // The array-wide common offset shifts every emission together and
        // does not affect coherence; the receiver only sees relative error.
        const World& w = sync_.engine->world();
        const Eigen::VectorXd off = w.offsets(w.now());
        return off.array() - off.mean();
    }

    const ScenarioConfig& cfg_;
    std::uint64_t seed_;
    BeamformExperiment bf_;
    SyncRun sync_;
};

} // namespace

SyncRun run_sync(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t epochs)
{
    if (cfg.array.size() < 2)
        throw ConfigError("synchronization needs at least two nodes");
    SyncRun run;
    run.engine = std::make_unique<SyncEngine>(build_world(cfg, seed), cfg.graph, cfg.sync.options);
    run.coarse = run.engine->coarse_align();
    run.refinement = run.engine->run_refinement(cfg.sync.schedule);
    run.fine = run.engine->run_fine_loop(epochs);
    if (const auto clash = audit_tdma(run.engine->world()))
        throw Error("TDMA audit failed: " + *clash);
    return run;
}

OutputSet cmd_sync(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log)
{
    const std::uint64_t seed = effective_seed(cfg, opts);
    const SyncRun run = run_sync(cfg, seed, opts.epochs.value_or(cfg.sync.epochs));
    const std::size_t n = cfg.array.size();

    OutputSet out;
    add_table(out, "sync_report.csv", sync_table(run.fine, false), cfg, seed);
    add_table(out, "refinement_report.csv", sync_table(run.refinement, true), cfg, seed);

    CsvTable summary({"node", "mean_abs_error_ps", "max_abs_error_ps"});
    const auto mean = run.fine.mean_abs_error(n);
    const auto worst = run.fine.max_abs_error(n);
    log << "node  mean|err| (ps)  max|err| (ps)\n";
    for (std::size_t i = 0; i < n; ++i)
    {
        summary.row({fmt(i), fmt(ps(mean[i])), fmt(ps(worst[i]))});
        char line[96];
        std::snprintf(line, sizeof line, "%4zu  %14.2f  %13.2f\n", i, ps(mean[i]), ps(worst[i]));
        log << line;
    }
    add_table(out, "sync_summary.csv", summary, cfg, seed);
    log << "fine epochs: " << run.fine.rows.size() / n << ", lost exchanges: " << run.fine.lost_exchanges << "\n";
    return out;
}

OutputSet cmd_beamform(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log)
{
    const std::uint64_t seed = effective_seed(cfg, opts);
    const std::size_t trials = opts.trials.value_or(cfg.beamform_run.trials);
    if (trials == 0)
        throw ConfigError("beamform needs at least one trial");
    GainSource source(cfg, opts, log);
    std::vector<GainRecord> records;
    for (std::size_t t = 0; t < trials; ++t)
        records.push_back(source.next(cfg.beamform_run.theta_deg, t));

    double lo = 1.0, hi = 0.0, sum = 0.0;
    for (const auto& r : records)
    {
        lo = std::min(lo, r.g_c);
        hi = std::max(hi, r.g_c);
        sum += r.g_c;
    }
    const double mean = sum / static_cast<double>(records.size());

    const std::size_t bins = cfg.beamform_run.histogram_bins;
    const double edge_lo = std::floor(lo * 100.0) / 100.0;
    const double edge_hi = std::max(edge_lo + 0.01, std::ceil(hi * 100.0) / 100.0);
    const double width = (edge_hi - edge_lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& r : records)
    {
        auto b = static_cast<std::size_t>(std::floor((r.g_c - edge_lo) / width));
        counts[std::min(b, bins - 1)]++;
    }
    CsvTable hist({"bin_low", "bin_high", "count"});
    for (std::size_t b = 0; b < bins; ++b)
        hist.row({fmt(edge_lo + width * static_cast<double>(b)), fmt(edge_lo + width * static_cast<double>(b + 1)),
                  fmt(counts[b])});

    OutputSet out;
    add_table(out, "gain_records.csv", gain_table(records, cfg.array.size()), cfg, seed);
    add_table(out, "gain_histogram.csv", hist, cfg, seed);
    char line[128];
    std::snprintf(line, sizeof line, "trials: %zu  mean G_c: %.4f  min: %.4f  max: %.4f\n", trials, mean, lo, hi);
    log << line;
    return out;
}

OutputSet cmd_steer(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log)
{
    const std::uint64_t seed = effective_seed(cfg, opts);
    const std::size_t repeats = opts.trials.value_or(cfg.steer.repeats);
    if (repeats == 0)
        throw ConfigError("steer needs at least one repeat per angle");
    GainSource source(cfg, opts, log);
    std::vector<GainRecord> records;
    CsvTable ideal({"theta_deg", "ideal_perfect", "ideal_position_error", "ideal_perfect_db", "ideal_position_error_db"});
    std::size_t epoch = 0;
    log << "theta  mean G_c  ideal  ideal(pos err)\n";
    for (double theta : cfg.steer.angles_deg)
    {
        double sum = 0.0;
        for (std::size_t r = 0; r < repeats; ++r)
        {
            records.push_back(source.next(theta, epoch++));
            sum += records.back().g_c;
        }
        const SteerIdealPoint p = source.experiment().ideal_gain(theta);
        ideal.row({fmt(theta), fmt(p.perfect), fmt(p.position_error), fmt(power_to_db(p.perfect * p.perfect)),
                   fmt(power_to_db(p.position_error * p.position_error))});
        char line[96];
        std::snprintf(line, sizeof line, "%5.1f  %8.4f  %5.4f  %14.4f\n", theta, sum / static_cast<double>(repeats),
                      p.perfect, p.position_error);
        log << line;
    }
    OutputSet out;
    add_table(out, "steer.csv", gain_table(records, cfg.array.size()), cfg, seed);
    add_table(out, "steer_ideal.csv", ideal, cfg, seed);
    return out;
}

OutputSet cmd_montecarlo(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log)
{
    TimingErrorStudyConfig study = cfg.montecarlo;
    study.seed = effective_seed(cfg, opts);
    if (opts.trials)
        study.trials = *opts.trials;
    const auto curve = probability_curve(study);

    CsvTable t({"N", "sigma_frac", "p_exceed", "ci_low", "ci_high"});
    for (const auto& pt : curve)
        t.row({fmt(pt.array_size), fmt(pt.sigma_fraction), fmt(pt.p.estimate), fmt(pt.p.low), fmt(pt.p.high)});
    for (std::size_t n : study.array_sizes)
    {
        const auto x = threshold_crossing(curve, n, 0.9);
        char line[96];
        if (x)
            std::snprintf(line, sizeof line, "N=%zu: P(G_c >= %.2f) falls below 0.9 at sigma/T = %.4f\n", n,
                          study.gain_threshold, *x);
        else
            std::snprintf(line, sizeof line, "N=%zu: P(G_c >= %.2f) stays above 0.9 on the grid\n", n,
                          study.gain_threshold);
        log << line;
    }
    OutputSet out;
    add_table(out, "montecarlo.csv", t, cfg, study.seed);
    return out;
}

OutputSet cmd_pattern(const ScenarioConfig& cfg, const CliOptions& opts, std::ostream& log)
{
    ArrayGeometry geom = cfg.array;
    if (cfg.pattern.nodes > 0)
        geom.positions.resize(cfg.pattern.nodes);
    geom.validate(1);
    const std::size_t n = geom.size();
    std::vector<double> ranges(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        ranges[i] = (geom.positions[i] - geom.positions.front()).norm();
    const ComplexVector w = command_weights(
        beamform_delays(geom, BeamformCalibration::zero(n), ranges, cfg.pattern.steer_deg, cfg.beamform.carrier_hz));
    const auto grid = cfg.pattern.grid();
    const Eigen::VectorXd p = array_power_pattern(geom, w, grid, cfg.beamform.carrier_hz);

    CsvTable t({"theta_deg", "normalized_power", "normalized_power_db"});
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        const double v = p[static_cast<Eigen::Index>(i)];
        t.row({fmt(grid[i]), fmt(v), fmt(std::max(-120.0, power_to_db(v)))});
    }
    log << "pattern: " << n << " node(s), " << grid.size() << " angles, steered to " << cfg.pattern.steer_deg
        << " deg\n";
    OutputSet out;
    add_table(out, "pattern.csv", t, cfg, effective_seed(cfg, opts));
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Coherent distributed array synchronization and beamforming simulator", "cdasim"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    std::size_t epochs = 0;
    bool resync = false;

    app.add_option("--config", config_path, "Scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
    auto* o_out = app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
    auto* o_seed = app.add_option("--seed", seed, "Random seed (overrides the config)");
    auto* o_trials = app.add_option("--trials", trials, "Trials (beamform, montecarlo) or repeats per angle (steer)");
    auto* o_epochs = app.add_option("--epochs", epochs, "Fine-loop epochs");
    app.add_flag("--resync", resync, "Run synchronization before beamforming and between trials");

    using Command = OutputSet (*)(const ScenarioConfig&, const CliOptions&, std::ostream&);
    const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands{
        {"sync", {"Coarse alignment, refinement, and the fine TWTT/consensus loop", cmd_sync}},
        {"beamform", {"Calibrate and measure coherent gain at a fixed angle", cmd_beamform}},
        {"steer", {"Coherent gain while steering, with ideal curves", cmd_steer}},
        {"montecarlo", {"Coherent gain exceedance probability under timing error", cmd_montecarlo}},
        {"pattern", {"Array power pattern cut", cmd_pattern}},
    };
    for (const auto& [name, info] : commands)
        app.add_subcommand(name, info.first);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    CliOptions opts;
    if (*o_out)
        opts.out = out_dir;
    if (*o_seed)
        opts.seed = seed;
    if (*o_trials)
        opts.trials = trials;
    if (*o_epochs)
        opts.epochs = epochs;
    opts.resync = resync;

    try
    {
        const ScenarioConfig cfg = load_config(config_path);
        for (const auto& [name, info] : commands)
        {
            if (!app.got_subcommand(name))
                continue;
            const OutputSet files = info.second(cfg, opts, out);
            const std::filesystem::path dir = opts.out.value_or(std::filesystem::path(cfg.output_dir));
            files.commit(dir);
            for (const auto& [file, content] : files.files())
                out << "wrote " << (dir / file).string() << "\n";
        }
        return 0;
    }
    catch (const ConfigError& e)
    {
        err << "config error: " << e.what() << "\n";
        return 1;
    }
    catch (const Error& e)
    {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace cda
