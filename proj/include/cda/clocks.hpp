#ifndef CDA_CLOCKS_HPP
#define CDA_CLOCKS_HPP

#include "cda/common.hpp"
#include "cda/random.hpp"

namespace cda
{

struct ClockNoiseConfig
{
    double random_walk_sigma = 0.0;          // s / sqrt(s), diffusion of the dynamic bias
    double jitter_sigma = 0.0;               // s, per-read white jitter
    double initial_offset_range = 0.0;       // s, static offset drawn from U(-r, r)
    double residual_freq_offset_sigma = 0.0; // dimensionless, 0 => alpha == 1 exactly

    void validate() const;
};

/// Ground truth of one node oscillator. The local clock reads
///   T(t) = alpha * t + beta + delta_dynamic(t) + nu + correction
/// with nu ~ N(0, noise_sigma^2) drawn fresh on every read.
struct ClockState
{
    double alpha = 1.0;
    double beta = 0.0;
    double delta_dynamic = 0.0;
    double noise_sigma = 0.0;
    double correction = 0.0;
};

/// Returns a copy of the state with the correction accumulated.
ClockState apply_correction(ClockState state, double amount);

class Clock
{
public:
    Clock() = default;
    explicit Clock(ClockState state, double random_walk_sigma = 0.0, double start_time = 0.0);

    /// Draws alpha and beta for one node. alpha is exactly 1 unless a
    /// residual frequency offset sigma is configured.
    static Clock draw(const ClockNoiseConfig& cfg, RandomStream& rng, double start_time = 0.0);

    /// Local reading at global time t. Advances the random-walk bias from the
    /// last read up to t (never backwards) and adds fresh jitter.
    double read(double t, RandomStream& rng);

    /// Reading without jitter and without advancing the random walk.
    double read_noiseless(double t) const;

    /// Global time at which the noiseless reading equals `local`.
    double global_time_at(double local) const;

    /// read_noiseless(t) - t.
    double offset(double t) const { return read_noiseless(t) - t; }

    void apply_correction(double amount);

    const ClockState& state() const { return state_; }
    double random_walk_sigma() const { return walk_sigma_; }
    double last_update() const { return last_t_; }

private:
    void advance(double t, RandomStream& rng);

    ClockState state_{};
    double walk_sigma_ = 0.0;
    double last_t_ = 0.0;
};

/// Carrier phase 2*pi*f*T + phi0 reduced to [0, 2*pi).
double lo_phase(double local_time, double carrier_hz, double phi0);

/// LO phase of a clock at global time t using its noiseless reading.
double lo_phase(const Clock& clock, double t, double carrier_hz, double phi0);

} // namespace cda

#endif // CDA_CLOCKS_HPP
