#ifndef CDA_CHANNEL_HPP
#define CDA_CHANNEL_HPP

#include "cda/common.hpp"
#include "cda/random.hpp"
#include "cda/signal.hpp"

namespace cda
{

struct LinkModel
{
    double snr_db = kInf;      // per-sample SNR at the receiver input
    bool reciprocal = true;    // forward/reverse delay identical within an epoch
    double extra_delay = 0.0;  // s, static hardware/group delay per direction
    double asymmetry = 0.0;    // s, added to the reverse direction when !reciprocal
    double echo_delay = 0.0;   // s, optional single specular echo (off when echo_gain == 0)
    double echo_gain = 0.0;    // linear amplitude relative to the direct path

    void validate() const;
};

/// Geometric plus hardware delay of a link, ||tx - rx|| / c + extra_delay.
double propagation_delay(const Vector3& tx, const Vector3& rx, const LinkModel& link);

/// Noise variance per complex sample realising snr_db against signal_power.
double noise_variance_for(double signal_power, double snr_db);

/// Adds circular complex white Gaussian noise of the given total variance.
void add_awgn(ComplexVector& x, double variance, RandomStream& rng);

/// Superimposes `pulse` (scaled by gain) onto `capture` so that its first
/// sample lands at `arrival_time` in the capture's time base. Fractional-sample
/// accurate; pulses partially outside the capture are truncated.
void add_delayed(SampledSignal& capture, const SampledSignal& pulse, double arrival_time, Complex gain = 1.0);

/// Delays a signal over the tx->rx link on its own sample grid, adds the
/// optional echo, and adds AWGN to realise link.snr_db against the mean
/// power of the input. Output keeps the input start_time and is extended by
/// the whole-sample delay.
SampledSignal propagate(const SampledSignal& signal, const Vector3& tx_pos, const Vector3& rx_pos,
                        const LinkModel& link, RandomStream& rng);

} // namespace cda

#endif // CDA_CHANNEL_HPP
