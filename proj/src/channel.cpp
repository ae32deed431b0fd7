#include "cda/channel.hpp"

#include <cmath>

namespace cda
{

void LinkModel::validate() const
{
    if (std::isnan(snr_db))
        throw ConfigError("link snr_db must be a number or +inf");
    if (!std::isfinite(extra_delay) || !std::isfinite(asymmetry))
        throw ConfigError("link delays must be finite");
    if (!(echo_delay >= 0.0) || !(echo_gain >= 0.0))
        throw ConfigError("echo parameters must be non-negative");
}

double propagation_delay(const Vector3& tx, const Vector3& rx, const LinkModel& link)
{
    return (tx - rx).norm() / kSpeedOfLight + link.extra_delay;
}

double noise_variance_for(double signal_power, double snr_db)
{
    if (!std::isfinite(snr_db) && snr_db > 0.0)
        return 0.0;
    return signal_power / db_to_power(snr_db);
}

void add_awgn(ComplexVector& x, double variance, RandomStream& rng)
{
    if (variance <= 0.0)
        return;
    const double sigma = std::sqrt(variance / 2.0);
    for (Eigen::Index k = 0; k < x.size(); ++k)
        x[k] += Complex(rng.normal(sigma), rng.normal(sigma));
}

void add_delayed(SampledSignal& capture, const SampledSignal& pulse, double arrival_time, Complex gain)
{
    if (capture.sample_rate != pulse.sample_rate)
        throw SignalError("add_delayed: sample-rate mismatch");
    const double pos = (arrival_time - capture.start_time) * capture.sample_rate;
    if (!std::isfinite(pos))
        throw SignalError("add_delayed: non-finite arrival");

    // Render the pulse into a padded local buffer, then accumulate at the
    // whole-sample offset. The pad carries the band-limited interpolation tails.
    const auto pad = static_cast<Eigen::Index>(64);
    const double base = std::floor(pos) - static_cast<double>(pad);
    const double local_delay = pos - base;
    const auto np = static_cast<Eigen::Index>(pulse.size());
    const Eigen::Index local_len = np + 2 * pad;
    const ComplexVector local = fractional_delay(pulse.samples, local_delay, static_cast<std::size_t>(local_len));

    const auto n = capture.samples.size();
    const auto first = static_cast<Eigen::Index>(base);
    for (Eigen::Index i = 0; i < local_len; ++i)
    {
        const Eigen::Index k = first + i;
        if (k < 0 || k >= n)
            continue;
        capture.samples[k] += gain * local[i];
    }
}

SampledSignal propagate(const SampledSignal& signal, const Vector3& tx_pos, const Vector3& rx_pos,
                        const LinkModel& link, RandomStream& rng)
{
    const double delay = propagation_delay(tx_pos, rx_pos, link);
    const double delay_samples = delay * signal.sample_rate;
    if (!(delay_samples >= 0.0))
        throw SignalError("propagate: negative link delay");

    std::size_t extra = static_cast<std::size_t>(std::ceil(delay_samples));
    if (link.echo_gain > 0.0)
        extra = static_cast<std::size_t>(std::ceil(delay_samples + link.echo_delay * signal.sample_rate));
    const std::size_t out_len = signal.size() + extra;

    SampledSignal out;
    out.sample_rate = signal.sample_rate;
    out.start_time = signal.start_time;
    out.samples = fractional_delay(signal.samples, delay_samples, out_len);
    if (link.echo_gain > 0.0)
        out.samples +=
            link.echo_gain * fractional_delay(signal.samples, delay_samples + link.echo_delay * signal.sample_rate, out_len);

    add_awgn(out.samples, noise_variance_for(mean_power(signal.samples), link.snr_db), rng);
    return out;
}

} // namespace cda
