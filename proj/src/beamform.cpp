#include "cda/beamform.hpp"

#include "cda/channel.hpp"

#include <algorithm>
#include <cmath>

namespace cda
{

namespace
{
std::vector< double > or_zeros(const std::vector< double >& v, std::size_t n) { return v.empty() ? std::vector< double >(n, 0.0) : v; }

double side_of(double x, double x0)
{
    if (x > x0)
        return 1.0;
    if (x < x0)
        return -1.0;
    return 0.0;
}

// exp(j 2 pi f t) with the whole cycles removed before scaling.
Complex carrier_rotation(double carrier_hz, double t)
{
    return std::polar(1.0, kTwoPi * cycle_fraction(carrier_hz, t));
}
} // namespace

void ElementPattern::validate() const
{
    if (!(beamwidth_az_deg > 0.0 && beamwidth_az_deg < 360.0) || !(beamwidth_el_deg > 0.0 && beamwidth_el_deg < 360.0))
        throw ConfigError("element beamwidths must be in (0, 360) degrees");
}

Eigen::VectorXd ArrayGeometry::axis_positions() const
{
    Eigen::VectorXd x(static_cast< Eigen::Index >(size()));
    for (std::size_t n = 0; n < size(); ++n)
        x[static_cast< Eigen::Index >(n)] = positions[n].x();
    return x;
}

ArrayGeometry ArrayGeometry::reference_default()
{
    ArrayGeometry g;
    for (double x : {0.0, -0.648, -0.368, 0.213, 0.551, 0.813})
        g.positions.emplace_back(x, 0.0, 0.0);
    g.receiver = Vector3(0.0, 0.0, 16.3);
    return g;
}

void ArrayGeometry::validate(std::size_t min_nodes) const
{
    if (size() < min_nodes)
        throw ConfigError("array needs at least " + std::to_string(min_nodes) + " node(s)");
    if (!receiver.allFinite())
        throw ConfigError("receiver position must be finite");
    for (const auto& p : positions)
    {
        if (!p.allFinite())
            throw ConfigError("node positions must be finite");
        if ((p - receiver).norm() < 1e-9)
            throw ConfigError("receiver coincides with a node");
    }
    element.validate();
}

BeamformCalibration BeamformCalibration::zero(std::size_t n)
{
    BeamformCalibration c;
    c.phi0.assign(n, 0.0);
    c.tau_bf_cal.assign(n, 0.0);
    c.delta_cal.assign(n, 0.0);
    c.d_true.assign(n, 0.0);
    return c;
}

void BeamformCalibration::require(std::size_t n) const
{
    if (phi0.size() != n || tau_bf_cal.size() != n || delta_cal.size() != n)
        throw CalibrationError("calibration table has " + std::to_string(phi0.size()) + " entries, array has " +
                               std::to_string(n));
}

Eigen::VectorXd array_power_pattern(const ArrayGeometry& geom, const ComplexVector& weights,
                                    const std::vector< double >& angles_deg, double carrier_hz,
                                    PatternNormalization norm)
{
    Eigen::VectorXd p(static_cast< Eigen::Index >(angles_deg.size()));
    for (std::size_t i = 0; i < angles_deg.size(); ++i)
        p[static_cast< Eigen::Index >(i)] =
            std::norm(array_factor< double >(geom, weights, deg_to_rad(angles_deg[i]), carrier_hz));
    if (p.size() == 0)
        return p;
    double ref = 0.0;
    if (norm == PatternNormalization::grid_peak)
        ref = p.maxCoeff();
    else
        ref = std::pow(weights.cwiseAbs().sum(), 2);
    if (ref > 0.0)
        p /= ref;
    return p;
}

std::vector< BeamformCommand > beamform_delays(const ArrayGeometry& geom, const BeamformCalibration& cal,
                                               const std::vector< double >& ranges, double theta_deg,
                                               double carrier_hz)
{
    const std::size_t n = geom.size();
    cal.require(n);
    if (ranges.size() != n)
        throw CalibrationError("missing range estimate for beamforming");
    if (!(theta_deg >= -90.0 && theta_deg <= 90.0))
        throw Error("steering angle must be within [-90, 90] degrees");
    const double s = std::sin(deg_to_rad(theta_deg));
    const double x0 = geom.positions.front().x();
    std::vector< BeamformCommand > out(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double side = i == 0 ? 0.0 : side_of(geom.positions[i].x(), x0);
        const double delay = side * (ranges[i] / kSpeedOfLight - cal.delta_cal[i]) * s + cal.tau_bf_cal[i];
        out[i].delay = delay;
        out[i].phase = wrap_phase(-(kTwoPi * cycle_fraction(carrier_hz, delay) + cal.phi0[i]));
    }
    return out;
}

ComplexVector command_weights(const std::vector< BeamformCommand >& commands)
{
    ComplexVector w(static_cast< Eigen::Index >(commands.size()));
    for (std::size_t i = 0; i < commands.size(); ++i)
        w[static_cast< Eigen::Index >(i)] = std::polar(1.0, commands[i].phase);
    return w;
}

std::vector< double > calibrate_ranges(const std::vector< double >& delay_estimates,
                                       const std::vector< double >& true_distances)
{
    if (delay_estimates.size() != true_distances.size())
        throw CalibrationError("range calibration needs one truth per estimate");
    std::vector< double > out(delay_estimates.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = i == 0 ? 0.0 : delay_estimates[i] - true_distances[i] / kSpeedOfLight;
    return out;
}

double coherent_gain_from_phasors(const ComplexVector& phasors)
{
    const double total = phasors.cwiseAbs().sum();
    return total > 0.0 ? std::abs(phasors.sum()) / total : 0.0;
}

void BeamformScenario::validate() const
{
    geometry.validate(2);
    const std::size_t n = geometry.size();
    auto check = [n](const std::vector< double >& v, const char* name) {
        if (!v.empty() && v.size() != n)
            throw ConfigError(std::string(name) + " needs one entry per node");
    };
    check(hardware_phase, "hardware_phase");
    check(hardware_delay, "hardware_delay");
    check(range_bias, "range_bias");
    check(position_error, "position_error");
    if (!(carrier_hz > 0.0) || !(rx_sample_rate > 0.0))
        throw ConfigError("beamform carrier and receiver sample rate must be positive");
    if (!(cw_pulse_width > 0.0) || !(chirp_duration > 0.0) || !(chirp_bandwidth > 0.0))
        throw ConfigError("beamform pulse parameters must be positive");
    if (!(timing_error_sigma >= 0.0))
        throw ConfigError("timing_error_sigma must be non-negative");
    if (std::isnan(rx_snr_db))
        throw ConfigError("rx_snr_db must be a number");
}

BeamformExperiment::BeamformExperiment(BeamformScenario scenario, std::uint64_t seed)
    : sc_(std::move(scenario)), rng_(seed)
{
    sc_.validate();
    const std::size_t n = sc_.geometry.size();
    sc_.hardware_phase = or_zeros(sc_.hardware_phase, n);
    sc_.hardware_delay = or_zeros(sc_.hardware_delay, n);
    sc_.range_bias = or_zeros(sc_.range_bias, n);
    sc_.position_error = or_zeros(sc_.position_error, n);

    WaveformSpec cw{WaveformKind::cw_pulse, sc_.cw_pulse_width, 0.0, sc_.rx_sample_rate, sc_.carrier_hz};
    WaveformSpec up{WaveformKind::lfm_up, sc_.chirp_duration, sc_.chirp_bandwidth, sc_.rx_sample_rate, sc_.carrier_hz};
    WaveformSpec down = up;
    down.kind = WaveformKind::lfm_down;
    cw_ = synthesize(cw);
    up_ = synthesize(up);
    down_ = synthesize(down);
    BiasTrainingOptions training;
    training.seed = mix_seed(seed, {0xca1ULL});
    up_table_ = build_bias_table(up, sc_.bias_points, training);
    down_table_ = build_bias_table(down, sc_.bias_points, training);
    lead_ = std::max(sc_.cw_pulse_width, sc_.chirp_duration);

    cal_ = BeamformCalibration::zero(n);
    for (NodeId i = 0; i < n; ++i)
        cal_.d_true[i] = true_distance(i);
    std::vector< double > estimates(n, 0.0);
    for (NodeId i = 1; i < n; ++i)
        estimates[i] = cal_.d_true[i] + kSpeedOfLight * sc_.range_bias[i];
    set_range_estimates(std::move(estimates));
}

double BeamformExperiment::true_distance(NodeId n) const
{
    return (sc_.geometry.positions.at(n) - sc_.geometry.positions.front()).norm();
}

void BeamformExperiment::set_calibration(BeamformCalibration cal)
{
    cal.require(sc_.geometry.size());
    cal_ = std::move(cal);
}

void BeamformExperiment::set_range_estimates(std::vector< double > calibration_ranges)
{
    if (calibration_ranges.size() != sc_.geometry.size())
        throw ConfigError("range estimates need one entry per node");
    cal_ranges_ = std::move(calibration_ranges);
    ranges_ = cal_ranges_;
    for (std::size_t i = 1; i < ranges_.size(); ++i)
        ranges_[i] += sc_.position_error[i];
}

Eigen::VectorXd BeamformExperiment::draw_timing_errors()
{
    Eigen::VectorXd e(static_cast< Eigen::Index >(sc_.geometry.size()));
    for (Eigen::Index i = 0; i < e.size(); ++i)
        e[i] = rng_.normal(sc_.timing_error_sigma);
    return e;
}

SampledSignal BeamformExperiment::capture(const std::vector< Emission >& emissions,
                                          const Eigen::VectorXd& clock_error, double length)
{
    const auto& geom = sc_.geometry;
    const double d_ref = (geom.receiver - geom.positions.front()).norm();
    SampledSignal rx;
    rx.sample_rate = sc_.rx_sample_rate;
    rx.start_time = 0.0;
    rx.samples = ComplexVector::Zero(static_cast< Eigen::Index >(std::llround(length * sc_.rx_sample_rate)));
    for (const auto& e : emissions)
    {
        const Vector3 los = geom.receiver - geom.positions.at(e.node);
        const double dist = los.norm();
        const double eps = clock_error.size() > 0 ? clock_error[static_cast< Eigen::Index >(e.node)] : 0.0;
        const double h = sc_.hardware_delay[e.node];
        // A node whose clock runs ahead by eps emits early by eps and carries
        // 2 pi f eps of extra LO phase; the receiver's own LO is the reference.
        const double arrival = lead_ + e.offset + e.command.delay - eps + h + (dist - d_ref) / kSpeedOfLight;
        const double amp = geom.element.amplitude(std::atan2(los.x(), los.z())) * d_ref / dist;
        const Complex gain = amp * std::polar(1.0, e.command.phase + sc_.hardware_phase[e.node]) *
                             carrier_rotation(sc_.carrier_hz, eps - h - dist / kSpeedOfLight);
        add_delayed(rx, *e.pulse, arrival, gain);
    }
    add_awgn(rx.samples, noise_variance_for(1.0, sc_.rx_snr_db), rng_);
    return rx;
}

const BeamformCalibration& BeamformExperiment::calibrate_farfield(const Eigen::VectorXd& clock_error)
{
    const std::size_t n = sc_.geometry.size();
    BeamformCalibration cal = BeamformCalibration::zero(n);
    cal.d_true = cal_.d_true;

    // Node 0's up-chirp and node n's down-chirp share one capture in
    // consecutive TDM slots, each recovered with its own matched filter.
    const double gap = 0.1 * sc_.chirp_duration;
    const double second = sc_.chirp_duration + gap;
    const double length = 2.0 * lead_ + 2.0 * sc_.chirp_duration + gap;
    PeakOptions peak;
    peak.floor_exclusion = up_.size();
    for (NodeId i = 1; i < n; ++i)
    {
        const SampledSignal both = capture({{0, 0.0, {}, &up_}, {i, second, {}, &down_}}, clock_error, length);
        ToAEstimate ref, other;
        try
        {
            ref = refine_peak(matched_filter(both, up_), up_table_, peak);
            other = refine_peak(matched_filter(both, down_), down_table_, peak);
        }
        catch (const SignalError& e)
        {
            throw CalibrationError("calibration chirp pair 0-" + std::to_string(i) + ": " + e.what());
        }
        if (ref.snr_estimate < sc_.detection_threshold_db || other.snr_estimate < sc_.detection_threshold_db)
            throw CalibrationError("calibration chirp pair 0-" + std::to_string(i) + " below detection threshold");
        const double dt = other.toa - second - ref.toa;
        const double dphi = std::arg(other.peak_value) - std::arg(ref.peak_value);
        cal.tau_bf_cal[i] = -dt;
        cal.phi0[i] = wrap_phase(dphi + kTwoPi * cycle_fraction(sc_.carrier_hz, dt));
    }

    std::vector< double > estimates(n, 0.0);
    for (NodeId i = 1; i < n; ++i)
        estimates[i] = cal_ranges_[i] / kSpeedOfLight;
    cal.delta_cal = calibrate_ranges(estimates, cal.d_true);
    cal_ = std::move(cal);
    return cal_;
}

GainRecord BeamformExperiment::evaluate_gain(double theta_deg, const Eigen::VectorXd& timing_error,
                                             std::size_t epoch)
{
    const std::size_t n = sc_.geometry.size();
    if (timing_error.size() != 0 && static_cast< std::size_t >(timing_error.size()) != n)
        throw EvaluationError("timing error vector does not match the array");
    const auto commands = beamform_delays(sc_.geometry, cal_, ranges_, theta_deg, sc_.carrier_hz);

    GainRecord rec;
    rec.epoch = epoch;
    rec.theta_deg = theta_deg;
    rec.solo_peaks.resize(n);
    rec.delays.assign(n, 0.0);
    rec.delay_errors.assign(n, 0.0);

    auto detect = [this](const SampledSignal& rx, const SampledSignal& templ, const BiasTable& table,
                         const std::string& what) {
        PeakOptions peak;
        peak.floor_exclusion = templ.size();
        ToAEstimate est;
        try
        {
            est = refine_peak(matched_filter(rx, templ), table, peak);
        }
        catch (const SignalError& e)
        {
            throw EvaluationError(what + ": " + e.what());
        }
        if (est.snr_estimate < sc_.detection_threshold_db)
            throw EvaluationError(what + ": peak below detection threshold");
        return est;
    };

    const double cw_len = 2.0 * lead_ + sc_.cw_pulse_width;
    const double cw_gain = static_cast< double >(cw_.size());
    std::vector< Emission > all;
    double solo_sum = 0.0;
    for (NodeId i = 0; i < n; ++i)
    {
        const Emission e{i, 0.0, commands[i], &cw_};
        all.push_back(e);
        const ToAEstimate est = detect(capture({e}, timing_error, cw_len), cw_, {}, "solo pulse " + std::to_string(i));
        rec.solo_peaks[i] = est.peak_magnitude / cw_gain;
        solo_sum += rec.solo_peaks[i];
    }
    const ToAEstimate comb = detect(capture(all, timing_error, cw_len), cw_, {}, "combined pulse");
    rec.combined_peak = comb.peak_magnitude / cw_gain;
    rec.g_c = rec.combined_peak / solo_sum;
    rec.power_ratio = rec.g_c * rec.g_c;

    const double lfm_len = 2.0 * lead_ + sc_.chirp_duration;
    const double s = std::sin(deg_to_rad(theta_deg));
    const double x0 = sc_.geometry.positions.front().x();
    double toa0 = 0.0;
    for (NodeId i = 0; i < n; ++i)
    {
        const ToAEstimate est =
            detect(capture({{i, 0.0, commands[i], &up_}}, timing_error, lfm_len), up_, up_table_, "LFM pulse " + std::to_string(i));
        if (i == 0)
            toa0 = est.toa;
        rec.delays[i] = est.toa - toa0;
        rec.delay_errors[i] = rec.delays[i] - (sc_.geometry.positions[i].x() - x0) * s / kSpeedOfLight;
    }
    return rec;
}

SteerIdealPoint BeamformExperiment::ideal_gain(double theta_deg) const
{
    const std::size_t n = sc_.geometry.size();
    const BeamformCalibration zero = BeamformCalibration::zero(n);
    std::vector< double > exact(n, 0.0);
    std::vector< double > with_error(n, 0.0);
    for (NodeId i = 1; i < n; ++i)
    {
        exact[i] = true_distance(i);
        with_error[i] = exact[i] + sc_.position_error[i];
    }
    auto gain = [&](const std::vector< double >& ranges) {
        const ComplexVector w = command_weights(beamform_delays(sc_.geometry, zero, ranges, theta_deg, sc_.carrier_hz));
        const Eigen::VectorXd p = array_power_pattern(sc_.geometry, w, {0.0}, sc_.carrier_hz,
                                                      PatternNormalization::coherent_sum);
        return std::sqrt(p[0]);
    };
    return {theta_deg, gain(exact), gain(with_error)};
}

SteerResult BeamformExperiment::steer_sweep(const std::vector< double >& angles_deg, std::size_t repeats)
{
    SteerResult out;
    std::size_t epoch = 0;
    for (double theta : angles_deg)
    {
        for (std::size_t r = 0; r < repeats; ++r)
            out.measured.push_back(evaluate_gain(theta, draw_timing_errors(), epoch++));
        out.ideal.push_back(ideal_gain(theta));
    }
    return out;
}

} // namespace cda
