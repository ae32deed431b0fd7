#include "cda/clocks.hpp"

#include <cmath>

namespace cda
{

void ClockNoiseConfig::validate() const
{
    if (!(random_walk_sigma >= 0.0) || !(jitter_sigma >= 0.0) || !(initial_offset_range >= 0.0) ||
        !(residual_freq_offset_sigma >= 0.0))
        throw ConfigError("clock noise parameters must be non-negative");
}

ClockState apply_correction(ClockState state, double amount)
{
    state.correction += amount;
    return state;
}

Clock::Clock(ClockState state, double random_walk_sigma, double start_time)
    : state_(state), walk_sigma_(random_walk_sigma), last_t_(start_time)
{
    if (!(state_.alpha > 0.0))
        throw ConfigError("clock alpha must be positive");
}

Clock Clock::draw(const ClockNoiseConfig& cfg, RandomStream& rng, double start_time)
{
    cfg.validate();
    ClockState s;
    s.alpha = 1.0;
    if (cfg.residual_freq_offset_sigma > 0.0)
        s.alpha = 1.0 + rng.normal(cfg.residual_freq_offset_sigma);
    s.beta = cfg.initial_offset_range > 0.0 ? rng.uniform(-cfg.initial_offset_range, cfg.initial_offset_range) : 0.0;
    s.noise_sigma = cfg.jitter_sigma;
    return Clock(s, cfg.random_walk_sigma, start_time);
}

void Clock::advance(double t, RandomStream& rng)
{
    if (t <= last_t_)
        return;
    if (walk_sigma_ > 0.0)
        state_.delta_dynamic += rng.normal(walk_sigma_ * std::sqrt(t - last_t_));
    last_t_ = t;
}

double Clock::read(double t, RandomStream& rng)
{
    advance(t, rng);
    return read_noiseless(t) + rng.normal(state_.noise_sigma);
}

double Clock::read_noiseless(double t) const
{
    // Summed offset-first so that small terms are not absorbed by t.
    const double bias = state_.beta + state_.delta_dynamic + state_.correction;
    if (state_.alpha == 1.0)
        return t + bias;
    return state_.alpha * t + bias;
}

double Clock::global_time_at(double local) const
{
    const double bias = state_.beta + state_.delta_dynamic + state_.correction;
    if (state_.alpha == 1.0)
        return local - bias;
    return (local - bias) / state_.alpha;
}

void Clock::apply_correction(double amount) { state_ = cda::apply_correction(state_, amount); }

double lo_phase(double local_time, double carrier_hz, double phi0)
{
    // Reduce cycles before scaling by 2*pi; f*T can reach 1e12 cycles.
    return wrap_phase(kTwoPi * cycle_fraction(carrier_hz, local_time) + phi0);
}

double lo_phase(const Clock& clock, double t, double carrier_hz, double phi0)
{
    return lo_phase(clock.read_noiseless(t), carrier_hz, phi0);
}

} // namespace cda
