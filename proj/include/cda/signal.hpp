#ifndef CDA_SIGNAL_HPP
#define CDA_SIGNAL_HPP

#include "cda/common.hpp"
#include "cda/random.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace cda
{

enum class WaveformKind
{
    two_tone_lfm,
    cw_pulse,
    lfm_up,
    lfm_down,
};

WaveformKind parse_waveform_kind(std::string_view name);
std::string_view to_string(WaveformKind kind);

struct WaveformSpec
{
    WaveformKind kind = WaveformKind::two_tone_lfm;
    double pulse_duration = 1e-6; // s
    double bandwidth = 40e6;      // Hz; tone separation for two_tone_lfm
    double sample_rate = 200e6;   // Sa/s, complex baseband
    double carrier_hz = 2.1e9;    // bookkeeping only, simulation is baseband

    std::size_t sample_count() const;
    void validate() const;
};

struct SampledSignal
{
    ComplexVector samples;
    double sample_rate = 1.0;
    double start_time = 0.0; // local seconds of samples[0]

    std::size_t size() const { return static_cast<std::size_t>(samples.size()); }
    double sample_period() const { return 1.0 / sample_rate; }
    double time_of(double index) const { return start_time + index / sample_rate; }
};

struct ToAEstimate
{
    double toa = 0.0; // refined, sub-sample, in the signal's local time base
    double peak_magnitude = 0.0;
    std::ptrdiff_t peak_index = 0;
    double fractional = 0.0;   // bias-corrected offset of the peak from peak_index, in samples
    double snr_estimate = 0.0; // dB, peak power over off-peak mean power
    Complex peak_value{};
};

/// Residual-bias correction for the quadratic peak fit, indexed by the raw
/// fractional vertex offset. Periodic with period one sample; evaluated by
/// linear interpolation.
class BiasTable
{
public:
    BiasTable() = default;
    BiasTable(std::vector<double> raw_offsets, std::vector<double> residuals);

    /// Residual (raw estimate minus truth, in samples) to subtract at the
    /// given raw fractional offset. Zero for an empty table.
    double correction(double raw_fraction) const;

    bool empty() const { return keys_.empty(); }
    std::size_t size() const { return keys_.size(); }
    const std::vector<double>& keys() const { return keys_; }
    const std::vector<double>& residuals() const { return values_; }

private:
    std::vector<double> keys_;   // sorted, in [-0.5, 0.5)
    std::vector<double> values_; // samples
};

struct BiasTrainingOptions
{
    double snr_db = 40.0;
    std::size_t averages = 8;
    int qls_window = 3;
    std::uint64_t seed = 0x5eed;
};

struct PeakOptions
{
    // Three samples keep the fit inside the main lobe when the waveform
    // occupies close to the full sample rate.
    int qls_window = 3;
    /// Lags within this many samples of the peak are excluded from the noise
    /// floor used for snr_estimate. Zero means qls_window.
    std::size_t floor_exclusion = 0;
};

/// Unit-peak baseband samples. Two-tone LFM is two LFM chirps, each sweeping
/// the full tone separation, centred at +/- separation/2:
///   s(t) = exp(j*pi*(B/T)*t^2) * cos(pi*B*t),  t in [-T/2, T/2),
/// so the pair occupies [-B, B] with no gap between the tones.
SampledSignal synthesize(const WaveformSpec& spec);

/// Cross-correlation y[l] = sum_k r[k+l] * conj(h[k]) for l in [0, r.size()).
/// Output index l corresponds to the template starting at received sample l,
/// so the output shares the received start_time.
SampledSignal matched_filter(const SampledSignal& received, const SampledSignal& templ);

/// Least-squares quadratic through an odd-length window centred on the peak;
/// returns the vertex offset from the centre sample.
double qls_vertex(std::span<const double> window);

/// Two-stage refinement: peak pick, quadratic least-squares vertex, then the
/// bias-table correction. Throws SignalError when the peak touches the edge.
ToAEstimate refine_peak(const SampledSignal& mf_output, const BiasTable& table, const PeakOptions& opts = {});

/// Sweeps n_points fractional delays of the waveform through the matched
/// filter and records the mean raw-QLS residual per delay.
BiasTable build_bias_table(const WaveformSpec& spec, std::size_t n_points, const BiasTrainingOptions& opts = {});

/// Band-limited delay on an FFT grid: out[k] = x(k - delay_samples), length out_len.
ComplexVector fractional_delay(const ComplexVector& x, double delay_samples, std::size_t out_len);

/// Mean |x|^2.
double mean_power(const ComplexVector& x);

/// Smallest power of two >= n.
std::size_t fft_size_for(std::size_t n);

/// Forward/inverse FFT helpers (inverse is 1/N scaled).
ComplexVector fft_forward(const ComplexVector& x);
ComplexVector fft_inverse(const ComplexVector& x);

} // namespace cda

#endif // CDA_SIGNAL_HPP
