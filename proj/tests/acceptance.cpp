// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// Every check recomputes its expectation from an independent oracle where the
// criterion is derived (long-double estimator evaluation, direct phasor sums,
// spectral rate of W) and compares against the stated bound otherwise.

#include "cda/beamform.hpp"
#include "cda/cli.hpp"
#include "cda/config.hpp"
#include "cda/consensus.hpp"
#include "cda/montecarlo.hpp"
#include "cda/pipeline.hpp"
#include "cda/signal.hpp"
#include "cda/twtt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace cda;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string str(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

ScenarioConfig default_config() { return load_config(CDA_DEFAULT_SCENARIO); }

// ---------------------------------------------------------------------------
// 1. Exceedance probability vs timing error
// ---------------------------------------------------------------------------
Outcome timing_error_study()
{
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioConfig cfg = default_config();
    TimingErrorStudyConfig mc = cfg.montecarlo;
    mc.trials = 1000;
    mc.seed = cfg.seed;
    const auto curve = probability_curve(mc);
    const double secs = std::chrono::duration< double >(std::chrono::steady_clock::now() - t0).count();

    const auto c6 = threshold_crossing(curve, 6, 0.9);
    const auto p20 = point_at(curve, 20, 0.10);
    const bool ok = c6 && *c6 >= 0.085 && *c6 <= 0.105 && p20 && std::abs(p20->p.estimate - 0.9) <= 0.05 &&
                    secs < 60.0;
    return {ok, str("N=6 crossing %.4f, N=20 P(0.10)=%.3f, %.1f s", c6.value_or(-1.0),
                    p20 ? p20->p.estimate : -1.0, secs)};
}

// ---------------------------------------------------------------------------
// 2. Consensus convergence
// ---------------------------------------------------------------------------
Eigen::VectorXd consensus_epoch(const Eigen::VectorXd& t, const Eigen::MatrixXd& w)
{
    return t + consensus_step(bias_matrix_from_times(t), w);
}

double spread(const Eigen::VectorXd& t) { return t.maxCoeff() - t.minCoeff(); }

Outcome consensus_convergence()
{
    // Complete graph, algebraic loop on 100 random starts within +-1 us.
    const Eigen::MatrixXd full = build_weights(Graph::complete(6));
    double worst_complete = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
    {
        RandomStream rng(seed);
        Eigen::VectorXd t(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            t[i] = rng.uniform(-1e-6, 1e-6);
        t = consensus_epoch(consensus_epoch(t, full), full);
        worst_complete = std::max(worst_complete, spread(t));
    }

    // Complete graph through the simulated TWTT chain with noiseless links.
    std::vector< Node > nodes;
    RandomStream rng(3);
    ClockNoiseConfig clocks;
    clocks.initial_offset_range = 1e-6;
    for (double x : {0.0, -0.648, -0.368, 0.213, 0.551, 0.813})
    {
        Node n;
        n.position = Vector3(x, 0.0, 0.0);
        n.clock = Clock::draw(clocks, rng);
        nodes.push_back(n);
    }
    SyncOptions opts;
    opts.bias_snr_db = kInf;
    SyncEngine engine(World(nodes, LinkModel{}, 4), Graph::complete(6), opts);
    engine.run_fine_loop(2);
    const double simulated = engine.world().max_pairwise_offset(engine.world().now());

    // Ring and path: measured contraction vs the second-largest eigenvalue modulus.
    double worst_rel = 0.0;
    for (const Graph& g : {Graph::ring(6), Graph::path(6)})
    {
        const Eigen::MatrixXd w = build_weights(g);
        const double slem = second_largest_eigenvalue_modulus(w);
        RandomStream r(11);
        Eigen::VectorXd t(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            t[i] = r.uniform(-1e-6, 1e-6);
        const int from = 5;
        const int to = 40;
        double s_from = 0.0;
        for (int k = 1; k <= to; ++k)
        {
            t = consensus_epoch(t, w);
            if (k == from)
                s_from = spread(t);
        }
        const double rate = std::pow(spread(t) / s_from, 1.0 / (to - from));
        worst_rel = std::max(worst_rel, std::abs(rate - slem) / slem);
    }
    const bool ok = worst_complete < 1e-12 && simulated < 1e-12 && worst_rel <= 0.10;
    return {ok, str("complete: %.2e s algebraic, %.2e s simulated after 2 epochs; ring/path rate error %.1f%%",
                    worst_complete, simulated, 100.0 * worst_rel)};
}

// ---------------------------------------------------------------------------
// 3. End-to-end synchronization accuracy over 20 seeds
// ---------------------------------------------------------------------------
Outcome sync_accuracy()
{
    const ScenarioConfig cfg = default_config();
    const std::size_t seeds = 20;
    struct Run
    {
        double mean = 0.0;
        double max = 0.0;
        std::string error;
    };
    auto one = [&cfg](std::uint64_t seed) {
        Run r;
        try
        {
            const SyncRun s = run_sync(cfg, seed, cfg.sync.epochs);
            const auto mean = s.fine.mean_abs_error(cfg.array.size());
            const auto max = s.fine.max_abs_error(cfg.array.size());
            r.mean = *std::max_element(mean.begin(), mean.end());
            r.max = *std::max_element(max.begin(), max.end());
        }
        catch (const std::exception& e)
        {
            r.error = e.what();
        }
        return r;
    };

    const std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    std::vector< Run > runs(seeds);
    for (std::size_t base = 0; base < seeds; base += workers)
    {
        std::vector< std::future< Run > > jobs;
        for (std::size_t i = base; i < std::min(seeds, base + workers); ++i)
            jobs.push_back(std::async(std::launch::async, one, cfg.seed + i));
        for (std::size_t i = 0; i < jobs.size(); ++i)
            runs[base + i] = jobs[i].get();
    }

    std::size_t good = 0;
    double worst_mean = 0.0, worst_max = 0.0;
    for (const auto& r : runs)
    {
        if (r.error.empty() && r.mean <= 36e-12 && r.max <= 150e-12)
            ++good;
        worst_mean = std::max(worst_mean, r.mean);
        worst_max = std::max(worst_max, r.max);
    }
    const bool ok = good * 10 >= seeds * 9;
    return {ok, str("%.0f/20 runs within bounds; worst per-node mean %.1f ps, worst max %.1f ps",
                    static_cast< double >(good), worst_mean / kPico, worst_max / kPico)};
}

// ---------------------------------------------------------------------------
// 4. Coherent gain
// ---------------------------------------------------------------------------
Outcome beamforming_gain()
{
    const ScenarioConfig cfg = default_config();
    BeamformScenario sc = cfg.beamform;
    sc.timing_error_sigma = 36e-12;
    sc.carrier_hz = 1.05e9;
    BeamformExperiment ex(sc, mix_seed(cfg.seed, {0xacce}));
    ex.calibrate_farfield();
    double sum = 0.0, lo = 1.0;
    const int trials = 76;
    for (int t = 0; t < trials; ++t)
    {
        const double g = ex.evaluate_gain(0.0, ex.draw_timing_errors()).g_c;
        sum += g;
        lo = std::min(lo, g);
    }
    const double mean = sum / trials;

    // Zero timing error, calibrated hardware, noiseless receiver.
    BeamformScenario clean = cfg.beamform;
    clean.rx_snr_db = kInf;
    BeamformExperiment ideal(clean, mix_seed(cfg.seed, {0xacce, 1}));
    ideal.calibrate_farfield();
    const double g0 = ideal.evaluate_gain(0.0, Eigen::VectorXd::Zero(6)).g_c;

    const bool ok = mean >= 0.95 && mean <= 1.0 && std::abs(g0 - 1.0) <= 1e-6;
    return {ok, str("mean G_c %.4f (min %.4f) over 76 trials at 36 ps; zero-error |G_c - 1| = %.1e", mean, lo,
                    std::abs(g0 - 1.0))};
}

// ---------------------------------------------------------------------------
// 5. Estimator oracles and range precision
// ---------------------------------------------------------------------------
Outcome estimator_oracles()
{
    RandomStream rng(505);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i)
    {
        const double base = rng.uniform(-2.0, 2.0);
        TimestampQuad q{base, base + rng.uniform(-1e-5, 1e-5), base + rng.uniform(1e-4, 1e-3),
                        base + rng.uniform(1e-3, 2e-3), 0, 0, 1};
        const long double fwd = static_cast< long double >(q.t_rx_m) - q.t_tx_n;
        const long double rev = static_cast< long double >(q.t_rx_n) - q.t_tx_m;
        const double off = static_cast< double >(0.5L * (fwd - rev));
        const double rng_s = static_cast< double >(0.5L * (fwd + rev));
        const double scale = std::max({std::abs(q.t_tx_n), std::abs(q.t_rx_n), 1e-3});
        worst = std::max(worst, std::abs(estimate_offset(q) - off) / scale);
        worst = std::max(worst, std::abs(estimate_range(q) / kSpeedOfLight - rng_s) / scale);
    }

    // Range precision at 20 dB over 500 simulated epochs.
    std::vector< Node > nodes(2);
    nodes[1].position = Vector3(0.813, 0.0, 0.0);
    ClockState s;
    s.beta = 3.3e-9;
    nodes[1].clock = Clock(s);
    LinkModel link;
    link.snr_db = 20.0;
    World w(nodes, link, 20);
    WaveformSpec spec;
    spec.kind = WaveformKind::two_tone_lfm;
    spec.bandwidth = 40e6;
    spec.sample_rate = 200e6;
    const RfChain chain = RfChain::make(spec, 64, BiasTrainingOptions{}, 9.0);
    const double window = 200e-9;
    const double width = 2 * window + 1e-6 + 200e-9;
    double m = 0.0, m2 = 0.0;
    const int epochs = 500;
    for (int k = 0; k < epochs; ++k)
    {
        const double t0 = 1e-3 * (k + 1);
        const double r = estimate_range(exchange(0, 1, chain, w, {t0, window, width}, {t0 + width, window, width}, k));
        m += r;
        m2 += r * r;
    }
    m /= epochs;
    const double sd = std::sqrt(std::max(0.0, m2 / epochs - m * m));
    const bool ok = worst <= 1e-15 && sd < 0.01;
    return {ok, str("max relative deviation %.1e over 1000 quads; range std %.2f mm at 20 dB (bias %.2f mm)", worst,
                    sd * 1e3, (m - 0.813) * 1e3)};
}

// ---------------------------------------------------------------------------
// 6. ToA refinement sweep
// ---------------------------------------------------------------------------
Outcome toa_refinement()
{
    WaveformSpec spec;
    spec.kind = WaveformKind::two_tone_lfm;
    spec.bandwidth = 40e6;
    spec.sample_rate = 200e6;
    spec.pulse_duration = 1e-6;
    const SampledSignal templ = synthesize(spec);
    const BiasTable table = build_bias_table(spec, 64);
    const BiasTable none;
    double raw = 0.0, fixed = 0.0;
    for (int i = 0; i <= 100; ++i)
    {
        const double truth = 50.0 + i / 100.0;
        const SampledSignal rx{fractional_delay(templ.samples, truth, templ.size() + 120), spec.sample_rate, 0.0};
        const SampledSignal mf = matched_filter(rx, templ);
        raw = std::max(raw, std::abs(refine_peak(mf, none).toa * spec.sample_rate - truth));
        fixed = std::max(fixed, std::abs(refine_peak(mf, table).toa * spec.sample_rate - truth));
    }
    const double ts = 1.0 / spec.sample_rate;
    const bool ok = fixed * ts < 50e-12 && raw >= 2.0 * fixed;
    return {ok, str("max |ToA error| %.2f ps corrected vs %.2f ps raw (%.1fx)", fixed * ts / kPico, raw * ts / kPico,
                    raw / fixed)};
}

// ---------------------------------------------------------------------------
// 7. Pattern equivalence and steering deviation
// ---------------------------------------------------------------------------
Outcome pattern_equivalence()
{
    const ArrayGeometry g = ArrayGeometry::reference_default();
    const double f = 1.05e9;
    // Half-power point of sinc^2 by bisection for the element oracle.
    double lo = 0.1, hi = 0.9;
    for (int i = 0; i < 200; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        const double v = std::sin(kPi * mid) / (kPi * mid);
        (v * v > 0.5 ? lo : hi) = mid;
    }
    const double k = 2.0 * 0.5 * (lo + hi) / deg_to_rad(78.0);

    std::vector< double > grid;
    for (int d = -90; d <= 90; ++d)
        grid.push_back(d);
    RandomStream rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial)
    {
        ComplexVector w(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            w[i] = trial == 0 ? Complex(1.0) : std::polar(rng.uniform(0.5, 1.0), rng.uniform(0.0, kTwoPi));
        const Eigen::VectorXd p = array_power_pattern(g, w, grid, f);
        std::vector< double > o;
        for (double d : grid)
        {
            const double th = d * kPi / 180.0;
            const double u = kPi * k * th;
            const double e = u == 0.0 ? 1.0 : std::abs(std::sin(u) / u);
            Complex sum = 0.0;
            for (std::size_t n = 0; n < 6; ++n)
                sum += w[static_cast< Eigen::Index >(n)] * e *
                       std::exp(Complex(0.0, kTwoPi * f * g.positions[n].x() * std::sin(th) / kSpeedOfLight));
            o.push_back(std::norm(sum));
        }
        const double peak = *std::max_element(o.begin(), o.end());
        // Relative to the peak everywhere; pointwise down to -60 dB, below
        // which nulls are set by cancellation rather than by the model.
        for (std::size_t i = 0; i < o.size(); ++i)
        {
            const double ref = o[i] / peak;
            const double diff = std::abs(p[static_cast< Eigen::Index >(i)] - ref);
            worst = std::max(worst, diff);
            if (ref > 1e-6)
                worst = std::max(worst, diff / ref);
        }
    }

    // Deviation of the ideal-with-position-errors curve from the perfect one,
    // in dB, averaged over [0, 15], (15, 30] and (30, 45] degrees.
    const ScenarioConfig cfg = default_config();
    BeamformExperiment ex(cfg.beamform, 1);
    double band[3] = {0, 0, 0}, within30 = 0.0;
    int count[3] = {0, 0, 0}, n30 = 0;
    for (int d = 0; d <= 45; ++d)
    {
        const SteerIdealPoint pt = ex.ideal_gain(d);
        const double dev = std::abs(20.0 * std::log10(pt.position_error / pt.perfect));
        const int b = d <= 15 ? 0 : (d <= 30 ? 1 : 2);
        band[b] += dev;
        ++count[b];
        if (d <= 30)
        {
            within30 += dev;
            ++n30;
        }
    }
    for (int b = 0; b < 3; ++b)
        band[b] /= count[b];
    within30 /= n30;
    const bool grows = band[0] < band[1] && band[1] < band[2] && band[2] > within30;
    const bool ok = worst <= 1e-9 && grows;
    return {ok, str("pattern max relative error %.1e; mean deviation %.2f / %.2f / %.2f dB over 0-15 / 15-30 / 30-45 deg",
                    worst, band[0], band[1], band[2])};
}

// ---------------------------------------------------------------------------
// 8. Byte-reproducible outputs
// ---------------------------------------------------------------------------
Outcome determinism()
{
    ScenarioConfig cfg = default_config();
    cfg.sync.epochs = 10;
    cfg.beamform_run.trials = 8;
    cfg.steer.repeats = 1;
    cfg.montecarlo.trials = 200;

    using Command = OutputSet (*)(const ScenarioConfig&, const CliOptions&, std::ostream&);
    const std::vector< std::pair< std::string, Command > > commands{
        {"sync", cmd_sync}, {"beamform", cmd_beamform}, {"steer", cmd_steer},
        {"montecarlo", cmd_montecarlo}, {"pattern", cmd_pattern}};
    std::size_t files = 0;
    std::vector< std::string > differing;
    for (const auto& [name, cmd] : commands)
    {
        CliOptions opts;
        std::ostringstream log;
        const OutputSet a = cmd(cfg, opts, log);
        const OutputSet b = cmd(cfg, opts, log);
        files += a.files().size();
        if (a.files() != b.files() || a.files().empty())
            differing.push_back(name);
    }
    // Resynchronized beamforming exercises the sync engine and beamforming together.
    CliOptions resync;
    resync.resync = true;
    resync.epochs = 5;
    std::ostringstream log;
    if (cmd_beamform(cfg, resync, log).files() != cmd_beamform(cfg, resync, log).files())
        differing.push_back("beamform --resync");

    std::string detail = std::to_string(files) + " files from 5 commands plus a resynchronized beamform run";
    detail += differing.empty() ? ", all byte-identical across two runs" : ", differing:";
    for (const auto& d : differing)
        detail += " " + d;
    return {differing.empty(), detail};
}

} // namespace

int main()
{
    const std::vector< std::pair< std::string, Outcome (*)() > > criteria{
        {"1 timing-error exceedance study", timing_error_study},
        {"2 consensus convergence", consensus_convergence},
        {"3 end-to-end sync accuracy", sync_accuracy},
        {"4 beamforming coherent gain", beamforming_gain},
        {"5 TWTT estimator oracles", estimator_oracles},
        {"6 ToA refinement", toa_refinement},
        {"7 pattern equivalence and steering deviation", pattern_equivalence},
        {"8 determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria)
    {
        Outcome o;
        try
        {
            o = check();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
