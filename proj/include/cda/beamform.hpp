#ifndef CDA_BEAMFORM_HPP
#define CDA_BEAMFORM_HPP

#include "cda/common.hpp"
#include "cda/random.hpp"
#include "cda/signal.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

namespace cda
{

/// sinc(u)^2 = 1/2 at u = kSincHalfPower (normalised sinc).
inline constexpr double kSincHalfPower = 0.4429464706890664;

/// Normalised-sinc amplitude pattern whose half-power width in the array
/// plane equals the selected beamwidth: E(theta) = |sinc(k theta)|,
/// k = 2 * kSincHalfPower / beamwidth.
struct ElementPattern
{
    double beamwidth_az_deg = 78.0;
    double beamwidth_el_deg = 56.0;
    double boresight_gain_dbi = 10.0; // reported only; patterns are normalised
    bool array_plane_is_azimuth = true;

    double array_plane_beamwidth_rad() const
    {
        return deg_to_rad(array_plane_is_azimuth ? beamwidth_az_deg : beamwidth_el_deg);
    }
    double sinc_scale() const { return 2.0 * kSincHalfPower / array_plane_beamwidth_rad(); }

    template < typename Scalar >
    Scalar amplitude(Scalar theta_rad) const
    {
        const Scalar u = Scalar(sinc_scale()) * theta_rad;
        if (u == Scalar(0))
            return Scalar(1);
        const Scalar x = Scalar(kPi) * u;
        return std::abs(std::sin(x) / x);
    }

    void validate() const;
};

/// Node positions along the array axis (x), boresight +z, receiver fixed.
/// Node 0 is the reference for ranging and calibration.
struct ArrayGeometry
{
    std::vector< Vector3 > positions;
    Vector3 receiver{0.0, 0.0, 16.3};
    ElementPattern element{};

    std::size_t size() const { return positions.size(); }
    Eigen::VectorXd axis_positions() const;

    /// Six nodes at x = 0, -0.648, -0.368, 0.213, 0.551, 0.813 m, receiver
    /// 16.3 m out at broadside.
    static ArrayGeometry reference_default();

    /// Needs at least `min_nodes` nodes, finite coordinates, and a receiver
    /// away from every node.
    void validate(std::size_t min_nodes = 2) const;
};

/// Static per-node calibration; entries for the reference node are zero.
struct BeamformCalibration
{
    std::vector< double > phi0;       // rad
    std::vector< double > tau_bf_cal; // s
    std::vector< double > delta_cal;  // s, static range bias
    std::vector< double > d_true;     // m, measured inter-node distance to node 0

    static BeamformCalibration zero(std::size_t n);
    /// Throws CalibrationError unless every table has n entries.
    void require(std::size_t n) const;
};

struct BeamformCommand
{
    double delay = 0.0; // s
    double phase = 0.0; // rad, wrapped to [0, 2 pi)
};

enum class PatternNormalization
{
    grid_peak,     // unity at the largest value on the grid
    coherent_sum,  // relative to (sum |w_n|)^2, i.e. a perfectly phased array at boresight
};

/// Far-field array factor sum_n w_n E(theta) exp(j 2 pi f x_n sin(theta) / c).
template < typename Scalar >
std::complex< Scalar > array_factor(const ArrayGeometry& geom,
                                    const Eigen::Matrix< std::complex< Scalar >, Eigen::Dynamic, 1 >& weights,
                                    Scalar theta_rad, Scalar carrier_hz)
{
    if (static_cast< std::size_t >(weights.size()) != geom.size())
        throw Error("array_factor: weight count does not match the geometry");
    const Scalar k = Scalar(kTwoPi) * carrier_hz / Scalar(kSpeedOfLight);
    const Scalar e = geom.element.amplitude(theta_rad);
    const Scalar s = std::sin(theta_rad);
    std::complex< Scalar > sum(0);
    for (std::size_t n = 0; n < geom.size(); ++n)
    {
        const Scalar phase = k * Scalar(geom.positions[n].x()) * s;
        sum += weights[static_cast< Eigen::Index >(n)] * std::polar(e, phase);
    }
    return sum;
}

/// |array_factor|^2 over a grid of angles in degrees.
Eigen::VectorXd array_power_pattern(const ArrayGeometry& geom, const ComplexVector& weights,
                                    const std::vector< double >& angles_deg, double carrier_hz,
                                    PatternNormalization norm = PatternNormalization::grid_peak);

/// Per-node transmit delay and carrier phase for steering angle theta:
///   delay = s_n (r_n / c - delta_cal_n) sin(theta) + tau_bf_cal_n
///   phase = -(2 pi f delay + phi0_n)
/// where s_n is the side of node n relative to node 0 along the array axis
/// and r_n the estimated range to node 0 (r_0 is ignored).
std::vector< BeamformCommand > beamform_delays(const ArrayGeometry& geom, const BeamformCalibration& cal,
                                               const std::vector< double >& ranges, double theta_deg,
                                               double carrier_hz);

/// Unit-magnitude complex weights exp(j phase_n) from beamform commands.
ComplexVector command_weights(const std::vector< BeamformCommand >& commands);

/// delta_cal_n = estimate_n - d_n / c, reference entry forced to zero.
std::vector< double > calibrate_ranges(const std::vector< double >& delay_estimates,
                                       const std::vector< double >& true_distances);

/// |sum p_n| / sum |p_n|; the noiseless coherent gain of received phasors.
double coherent_gain_from_phasors(const ComplexVector& phasors);

struct GainRecord
{
    std::size_t epoch = 0;
    double theta_deg = 0.0;
    std::vector< double > solo_peaks;
    double combined_peak = 0.0;
    double g_c = 0.0;         // amplitude ratio combined / sum(solo)
    double power_ratio = 0.0; // g_c^2
    std::vector< double > delays;       // s, LFM inter-arrival delay of node n relative to node 0
    std::vector< double > delay_errors; // s, delay minus the geometric steering delay
};

struct SteerIdealPoint
{
    double theta_deg = 0.0;
    double perfect = 0.0;        // amplitude gain, exact positions
    double position_error = 0.0; // amplitude gain, steering from positions carrying the range errors
};

struct SteerResult
{
    std::vector< GainRecord > measured;
    std::vector< SteerIdealPoint > ideal;
};

/// Hardware and channel description of the beamforming testbed.
struct BeamformScenario
{
    ArrayGeometry geometry = ArrayGeometry::reference_default();
    double carrier_hz = 1.05e9;
    double rx_sample_rate = 1e9;
    double rx_snr_db = 30.0; // per sample, one node's CW pulse at the receiver
    double cw_pulse_width = 1e-6;
    double chirp_bandwidth = 160e6;
    double chirp_duration = 2e-6;
    double timing_error_sigma = 36e-12; // s, drawn per node and evaluation when no sync run supplies errors
    double detection_threshold_db = 9.0;
    std::size_t bias_points = 64;
    std::vector< double > hardware_phase; // rad, unknown to the array; empty = zeros
    std::vector< double > hardware_delay; // s, unknown static transmit delay; empty = zeros
    std::vector< double > range_bias;     // s, static TWTT range bias removed by delta_cal; empty = zeros
    std::vector< double > position_error; // m, range error left after calibration; empty = zeros

    void validate() const;
};

/// Sampled simulation of the receiver-side experiments: far-field chirp
/// calibration, seven-pulse CW coherent-gain evaluation with LFM
/// inter-arrival delays, and the steering sweep.
class BeamformExperiment
{
public:
    BeamformExperiment(BeamformScenario scenario, std::uint64_t seed);

    const BeamformScenario& scenario() const { return sc_; }
    const BeamformCalibration& calibration() const { return cal_; }
    void set_calibration(BeamformCalibration cal);

    /// Estimated ranges to node 0 used for steering: the calibration-time
    /// estimates plus the residual position error. The calibration-time
    /// estimates default to the true distances plus the static bias.
    const std::vector< double >& range_estimates() const { return ranges_; }
    void set_range_estimates(std::vector< double > calibration_ranges);

    /// Chirp calibration against the receiver. clock_error holds the node
    /// clock offsets during calibration (s; empty = zero). Also fills
    /// delta_cal from the range estimates. Throws CalibrationError.
    const BeamformCalibration& calibrate_farfield(const Eigen::VectorXd& clock_error = {});

    /// Independent N(0, timing_error_sigma) offsets per node.
    Eigen::VectorXd draw_timing_errors();

    /// Seven-pulse evaluation at steering angle theta with the given clock
    /// offsets (s). Throws EvaluationError when a peak is missed.
    GainRecord evaluate_gain(double theta_deg, const Eigen::VectorXd& timing_error, std::size_t epoch = 0);

    /// Ideal amplitude gains at the fixed receiver for steering angle theta.
    SteerIdealPoint ideal_gain(double theta_deg) const;

    /// `repeats` evaluations per angle, each with fresh timing errors.
    SteerResult steer_sweep(const std::vector< double >& angles_deg, std::size_t repeats);

private:
    struct Emission
    {
        NodeId node = 0;
        double offset = 0.0; // s, scheduled start within the capture
        BeamformCommand command{};
        const SampledSignal* pulse = nullptr;
    };

    SampledSignal capture(const std::vector< Emission >& emissions, const Eigen::VectorXd& clock_error,
                          double length);
    double true_distance(NodeId n) const;

    BeamformScenario sc_;
    RandomStream rng_;
    BeamformCalibration cal_;
    std::vector< double > cal_ranges_;
    std::vector< double > ranges_;
    SampledSignal cw_;
    SampledSignal up_;
    SampledSignal down_;
    BiasTable up_table_;
    BiasTable down_table_;
    double lead_ = 0.0;
};

} // namespace cda

#endif // CDA_BEAMFORM_HPP
