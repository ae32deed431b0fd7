#include "cda/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cda
{

namespace
{
using json = nlohmann::json;

// Typed, path-aware view of one JSON object. Every key read is remembered;
// finish() rejects the rest.
class Section
{
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    double number(const std::string& key, double fallback)
    {
        if (!has(key))
            return fallback;
        return as_number(j_.at(key), key);
    }

    std::size_t count(const std::string& key, std::size_t fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get< long long >() < 0)
            throw ConfigError(where(key) + " must be a non-negative integer");
        return v.get< std::size_t >();
    }

    bool flag(const std::string& key, bool fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean())
            throw ConfigError(where(key) + " must be true or false");
        return v.get< bool >();
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = j_.at(key);
        if (!v.is_string())
            throw ConfigError(where(key) + " must be a string");
        return v.get< std::string >();
    }

    std::vector< double > numbers(const std::string& key, std::vector< double > fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = j_.at(key);
        if (!v.is_array())
            throw ConfigError(where(key) + " must be an array of numbers");
        std::vector< double > out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(as_number(v[i], key + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector< std::size_t > counts(const std::string& key, std::vector< std::size_t > fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = j_.at(key);
        if (!v.is_array())
            throw ConfigError(where(key) + " must be an array of integers");
        std::vector< std::size_t > out;
        for (const auto& e : v)
        {
            if (!e.is_number_integer() || e.get< long long >() < 0)
                throw ConfigError(where(key) + " must hold non-negative integers");
            out.push_back(e.get< std::size_t >());
        }
        return out;
    }

    Vector3 vec3(const json& v, const std::string& key) const
    {
        if (!v.is_array() || v.size() != 3)
            throw ConfigError(where(key) + " must be [x, y, z]");
        return {as_number(v[0], key), as_number(v[1], key), as_number(v[2], key)};
    }

    const json* raw(const std::string& key)
    {
        if (!has(key))
            return nullptr;
        return &j_.at(key);
    }

    Section child(const std::string& key)
    {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
    }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError(where(item.key()) + ": unknown key");
    }

    std::string where(const std::string& key = {}) const
    {
        if (key.empty())
            return path_.empty() ? std::string("config") : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    double as_number(const json& v, const std::string& key) const
    {
        // SNRs may be written as "inf" for noiseless links.
        if (v.is_string())
        {
            const auto s = v.get< std::string >();
            if (s == "inf" || s == "+inf")
                return kInf;
            if (s == "-inf")
                return -kInf;
            throw ConfigError(where(key) + " must be a number");
        }
        if (!v.is_number())
            throw ConfigError(where(key) + " must be a number");
        return v.get< double >();
    }

    const json& j_;
    std::string path_;
    std::set< std::string > seen_;
};

LinkModel read_link(Section& s, const LinkModel& base)
{
    LinkModel l = base;
    l.snr_db = s.number("snr_db", l.snr_db);
    l.reciprocal = s.flag("reciprocal", l.reciprocal);
    l.extra_delay = s.number("extra_delay", l.extra_delay);
    l.asymmetry = s.number("asymmetry", l.asymmetry);
    l.echo_delay = s.number("echo_delay", l.echo_delay);
    l.echo_gain = s.number("echo_gain", l.echo_gain);
    return l;
}

RefinementStep read_step(Section s, const RefinementStep& base)
{
    RefinementStep r = base;
    r.sample_rate = s.number("sample_rate", r.sample_rate);
    r.tone_separation = s.number("tone_separation", r.tone_separation);
    r.tdma_window = s.number("tdma_window", r.tdma_window);
    r.pulse_duration = s.number("pulse_duration", r.pulse_duration);
    s.finish();
    return r;
}

void read_array(Section s, ScenarioConfig& cfg)
{
    if (const json* p = s.raw("positions"))
    {
        if (!p->is_array())
            throw ConfigError(s.where("positions") + " must be an array");
        cfg.array.positions.clear();
        for (std::size_t i = 0; i < p->size(); ++i)
        {
            const json& e = (*p)[i];
            const std::string key = "positions[" + std::to_string(i) + "]";
            if (e.is_number())
                cfg.array.positions.emplace_back(e.get< double >(), 0.0, 0.0);
            else
                cfg.array.positions.push_back(s.vec3(e, key));
        }
    }
    if (const json* r = s.raw("receiver"))
        cfg.array.receiver = s.vec3(*r, "receiver");
    Section e = s.child("element");
    ElementPattern& el = cfg.array.element;
    el.beamwidth_az_deg = e.number("beamwidth_az_deg", el.beamwidth_az_deg);
    el.beamwidth_el_deg = e.number("beamwidth_el_deg", el.beamwidth_el_deg);
    el.boresight_gain_dbi = e.number("boresight_gain_dbi", el.boresight_gain_dbi);
    const std::string plane = e.text("array_plane", el.array_plane_is_azimuth ? "azimuth" : "elevation");
    if (plane != "azimuth" && plane != "elevation")
        throw ConfigError(e.where("array_plane") + " must be \"azimuth\" or \"elevation\"");
    el.array_plane_is_azimuth = plane == "azimuth";
    e.finish();
    s.finish();
    cfg.array.validate(1);
}

void read_graph(Section s, ScenarioConfig& cfg)
{
    const std::size_t n = cfg.array.size();
    cfg.sync.topology = s.text("topology", cfg.sync.topology);
    const std::string& t = cfg.sync.topology;
    if (t == "complete")
        cfg.graph = Graph::complete(n);
    else if (t == "ring")
        cfg.graph = Graph::ring(n);
    else if (t == "path")
        cfg.graph = Graph::path(n);
    else if (t == "custom")
    {
        const json* e = s.raw("edges");
        if (e == nullptr || !e->is_array())
            throw ConfigError(s.where("edges") + " is required for a custom topology");
        std::vector< std::pair< NodeId, NodeId > > edges;
        for (const auto& pair : *e)
        {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned())
                throw ConfigError(s.where("edges") + " entries must be [a, b] node indices");
            edges.emplace_back(pair[0].get< NodeId >(), pair[1].get< NodeId >());
        }
        cfg.graph = Graph(n, std::move(edges));
        if (!cfg.graph.connected())
            throw ConfigError(s.where("edges") + " must connect every node");
    }
    else
        throw ConfigError(s.where("topology") + " must be complete, ring, path or custom");
    if (t != "custom" && s.has("edges"))
        throw ConfigError(s.where("edges") + " is only valid with a custom topology");
    s.finish();
}

void read_sync(Section s, ScenarioConfig& cfg)
{
    SyncScenario& sy = cfg.sync;
    {
        Section c = s.child("clocks");
        sy.clocks.random_walk_sigma = c.number("random_walk_sigma", sy.clocks.random_walk_sigma);
        sy.clocks.jitter_sigma = c.number("jitter_sigma", sy.clocks.jitter_sigma);
        sy.clocks.initial_offset_range = c.number("initial_offset_range", sy.clocks.initial_offset_range);
        sy.clocks.residual_freq_offset_sigma =
            c.number("residual_freq_offset_sigma", sy.clocks.residual_freq_offset_sigma);
        c.finish();
        sy.clocks.validate();
    }
    {
        Section l = s.child("links");
        sy.link = read_link(l, sy.link);
        if (const json* o = l.raw("overrides"))
        {
            if (!o->is_array())
                throw ConfigError(l.where("overrides") + " must be an array");
            for (std::size_t i = 0; i < o->size(); ++i)
            {
                Section e((*o)[i], l.where("overrides[" + std::to_string(i) + "]"));
                LinkOverride ov;
                ov.tx = e.count("tx", 0);
                ov.rx = e.count("rx", 0);
                if (!e.has("tx") || !e.has("rx"))
                    throw ConfigError(e.where() + " needs tx and rx");
                if (ov.tx >= cfg.array.size() || ov.rx >= cfg.array.size() || ov.tx == ov.rx)
                    throw ConfigError(e.where() + " references an invalid node pair");
                ov.link = read_link(e, sy.link);
                e.finish();
                ov.link.validate();
                sy.overrides.push_back(ov);
            }
        }
        l.finish();
        sy.link.validate();
    }
    {
        Section c = s.child("control_network");
        ControlNetworkModel& m = sy.options.control;
        m.latency_mean = c.number("latency_mean", m.latency_mean);
        m.latency_jitter = c.number("latency_jitter", m.latency_jitter);
        m.loss_probability = c.number("loss_probability", m.loss_probability);
        m.retransmit_timeout = c.number("retransmit_timeout", m.retransmit_timeout);
        m.max_retries = c.count("max_retries", m.max_retries);
        c.finish();
        m.validate();
    }
    SyncOptions& o = sy.options;
    sy.epochs = s.count("epochs", sy.epochs);
    o.carrier_hz = s.number("carrier_hz", o.carrier_hz);
    o.epoch_period = s.number("epoch_period", o.epoch_period);
    o.detection_threshold_db = s.number("detection_threshold_db", o.detection_threshold_db);
    o.qls_window = static_cast< int >(s.count("qls_window", static_cast< std::size_t >(o.qls_window)));
    o.bias_points = s.count("bias_points", o.bias_points);
    o.bias_snr_db = s.number("bias_snr_db", o.bias_snr_db);
    o.bias_averages = s.count("bias_averages", o.bias_averages);
    o.guard_samples = s.number("guard_samples", o.guard_samples);
    o.epoch_lead = s.number("epoch_lead", o.epoch_lead);
    o.aggregator = s.count("aggregator", o.aggregator);
    o.smoothing = s.number("smoothing", o.smoothing);
    o.fine_convergence = s.number("fine_convergence", o.fine_convergence);
    if (s.has("fine"))
        o.fine = read_step(s.child("fine"), o.fine);

    if (s.has("schedule"))
    {
        Section sc = s.child("schedule");
        const std::string mode = sc.text("mode", "geometric");
        if (mode == "geometric")
        {
            const StageSchedule std_sched = StageSchedule::standard();
            const RefinementStep first = read_step(sc.child("first"), std_sched.steps.front());
            const RefinementStep last = read_step(sc.child("last"), std_sched.steps.back());
            sy.schedule = StageSchedule::geometric(first, last, sc.count("steps", 5));
        }
        else if (mode == "explicit")
        {
            const json* steps = sc.raw("steps");
            if (steps == nullptr || !steps->is_array())
                throw ConfigError(sc.where("steps") + " must list the refinement steps");
            sy.schedule.steps.clear();
            for (std::size_t i = 0; i < steps->size(); ++i)
                sy.schedule.steps.push_back(
                    read_step(Section((*steps)[i], sc.where("steps[" + std::to_string(i) + "]")), RefinementStep{}));
        }
        else
            throw ConfigError(sc.where("mode") + " must be geometric or explicit");
        sc.finish();
    }
    s.finish();

    if (o.aggregator >= cfg.array.size())
        throw ConfigError(s.where("aggregator") + " is not a node");
    if (!(o.epoch_period > 0.0) || !(o.carrier_hz > 0.0) || !(o.guard_samples >= 0.0) || !(o.epoch_lead >= 0.0))
        throw ConfigError(s.where() + ": epoch_period and carrier_hz must be positive, guard and lead non-negative");
    if (!(o.smoothing >= 0.0 && o.smoothing < 1.0))
        throw ConfigError(s.where("smoothing") + " must be in [0, 1)");
    if (o.qls_window < 3 || o.qls_window % 2 == 0)
        throw ConfigError(s.where("qls_window") + " must be odd and at least 3");
    if (o.bias_points < 16)
        throw ConfigError(s.where("bias_points") + " must be at least 16");
    try
    {
        sy.schedule.validate();
        o.fine.waveform(o.carrier_hz).validate();
    }
    catch (const SignalError& e)
    {
        throw ConfigError(s.where() + ": " + e.what());
    }
}

void read_beamform(Section s, ScenarioConfig& cfg)
{
    BeamformScenario& b = cfg.beamform;
    b.carrier_hz = s.number("carrier_hz", b.carrier_hz);
    b.rx_sample_rate = s.number("rx_sample_rate", b.rx_sample_rate);
    b.rx_snr_db = s.number("rx_snr_db", b.rx_snr_db);
    b.cw_pulse_width = s.number("cw_pulse_width", b.cw_pulse_width);
    b.chirp_bandwidth = s.number("chirp_bandwidth", b.chirp_bandwidth);
    b.chirp_duration = s.number("chirp_duration", b.chirp_duration);
    b.timing_error_sigma = s.number("timing_error_sigma", b.timing_error_sigma);
    b.detection_threshold_db = s.number("detection_threshold_db", b.detection_threshold_db);
    b.bias_points = s.count("bias_points", b.bias_points);
    b.hardware_phase = s.numbers("hardware_phase", b.hardware_phase);
    b.hardware_delay = s.numbers("hardware_delay", b.hardware_delay);
    b.range_bias = s.numbers("range_bias", b.range_bias);
    b.position_error = s.numbers("position_error", b.position_error);
    cfg.beamform_run.trials = s.count("trials", cfg.beamform_run.trials);
    cfg.beamform_run.theta_deg = s.number("theta_deg", cfg.beamform_run.theta_deg);
    cfg.beamform_run.histogram_bins = s.count("histogram_bins", cfg.beamform_run.histogram_bins);
    cfg.beamform_run.resync_epochs = s.count("resync_epochs", cfg.beamform_run.resync_epochs);
    s.finish();
    if (cfg.beamform_run.histogram_bins == 0)
        throw ConfigError(s.where("histogram_bins") + " must be positive");
    if (!(std::abs(cfg.beamform_run.theta_deg) <= 90.0))
        throw ConfigError(s.where("theta_deg") + " must be within [-90, 90]");
    if (b.bias_points < 16)
        throw ConfigError(s.where("bias_points") + " must be at least 16");
    b.geometry = cfg.array;
    if (cfg.array.size() >= 2)
    {
        b.validate();
        try
        {
            WaveformSpec{WaveformKind::lfm_up, b.chirp_duration, b.chirp_bandwidth, b.rx_sample_rate, b.carrier_hz}
                .validate();
            WaveformSpec{WaveformKind::cw_pulse, b.cw_pulse_width, 0.0, b.rx_sample_rate, b.carrier_hz}.validate();
        }
        catch (const SignalError& e)
        {
            throw ConfigError(s.where() + ": " + e.what());
        }
    }
}

void read_steer(Section s, ScenarioConfig& cfg)
{
    cfg.steer.angles_deg = s.numbers("angles_deg", cfg.steer.angles_deg);
    cfg.steer.repeats = s.count("repeats", cfg.steer.repeats);
    s.finish();
    if (cfg.steer.angles_deg.empty() || cfg.steer.repeats == 0)
        throw ConfigError(s.where() + " needs at least one angle and one repeat");
    for (double a : cfg.steer.angles_deg)
        if (!(std::abs(a) <= 90.0))
            throw ConfigError(s.where("angles_deg") + " must lie within [-90, 90]");
}

void read_montecarlo(Section s, ScenarioConfig& cfg)
{
    TimingErrorStudyConfig& m = cfg.montecarlo;
    m.array_sizes = s.counts("array_sizes", m.array_sizes);
    m.sigma_fractions = s.numbers("sigma_fractions", m.sigma_fractions);
    m.trials = s.count("trials", m.trials);
    m.gain_threshold = s.number("gain_threshold", m.gain_threshold);
    s.finish();
    m.validate();
}

void read_pattern(Section s, ScenarioConfig& cfg)
{
    PatternRun& p = cfg.pattern;
    p.start_deg = s.number("start_deg", p.start_deg);
    p.stop_deg = s.number("stop_deg", p.stop_deg);
    p.step_deg = s.number("step_deg", p.step_deg);
    p.steer_deg = s.number("steer_deg", p.steer_deg);
    p.nodes = s.count("nodes", p.nodes);
    s.finish();
    if (!(p.step_deg > 0.0) || !(p.stop_deg >= p.start_deg) || p.start_deg < -90.0 || p.stop_deg > 90.0)
        throw ConfigError(s.where() + " needs -90 <= start_deg <= stop_deg <= 90 and step_deg > 0");
    if (p.nodes > cfg.array.size())
        throw ConfigError(s.where("nodes") + " exceeds the array size");
    if (!(std::abs(p.steer_deg) <= 90.0))
        throw ConfigError(s.where("steer_deg") + " must be within [-90, 90]");
}
} // namespace

std::vector< double > PatternRun::grid() const
{
    std::vector< double > g;
    const auto count = static_cast< std::size_t >(std::floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i)
        g.push_back(start_deg + step_deg * static_cast< double >(i));
    return g;
}

std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ScenarioConfig parse_config(const std::string& text)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }

    ScenarioConfig cfg;
    Section root(doc, "");
    if (!root.has("version"))
        throw ConfigError("config.version is required");
    cfg.version = static_cast< int >(root.count("version", 0));
    if (cfg.version != kConfigVersion)
        throw ConfigError("config.version " + std::to_string(cfg.version) + " is not supported (expected " +
                          std::to_string(kConfigVersion) + ")");
    if (!root.has("seed"))
        throw ConfigError("config.seed is required");
    {
        const json& s = doc.at("seed");
        if (!s.is_number_unsigned())
            throw ConfigError("seed must be a non-negative integer");
        cfg.seed = s.get< std::uint64_t >();
    }
    cfg.output_dir = root.text("output_dir", cfg.output_dir);

    read_array(root.child("array"), cfg);
    read_graph(root.child("graph"), cfg);
    read_sync(root.child("sync"), cfg);
    read_beamform(root.child("beamform"), cfg);
    read_steer(root.child("steer"), cfg);
    read_montecarlo(root.child("montecarlo"), cfg);
    read_pattern(root.child("pattern"), cfg);
    root.finish();

    cfg.montecarlo.seed = cfg.seed;
    cfg.canonical = doc.dump();
    cfg.hash = fnv1a(cfg.canonical);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

World build_world(const ScenarioConfig& cfg, std::uint64_t seed)
{
    RandomStream clock_rng(mix_seed(seed, {0xc10cULL}));
    std::vector< Node > nodes;
    for (const auto& p : cfg.array.positions)
        nodes.push_back({Clock::draw(cfg.sync.clocks, clock_rng), p});
    World world(std::move(nodes), cfg.sync.link, mix_seed(seed, {0x3017dULL}));
    for (const auto& o : cfg.sync.overrides)
        world.set_link(o.tx, o.rx, o.link);
    return world;
}

} // namespace cda
