#include "cda/twtt.hpp"

#include "cda/channel.hpp"

#include <cmath>

namespace cda
{

PairEstimate estimate_pair(const TimestampQuad& q)
{
    return {estimate_offset(q), estimate_range(q), q.epoch, q.n, q.m};
}

RfChain RfChain::make(const WaveformSpec& spec, std::size_t bias_points, const BiasTrainingOptions& training,
                      double detection_threshold_db)
{
    RfChain chain;
    chain.spec = spec;
    chain.pulse = synthesize(spec);
    chain.table = build_bias_table(spec, bias_points, training);
    chain.peak.qls_window = training.qls_window;
    chain.peak.floor_exclusion = chain.pulse.size();
    chain.detection_threshold_db = detection_threshold_db;
    return chain;
}

OneWayResult transmit_one_way(World& world, NodeId tx, NodeId rx, const RfChain& chain, const SlotTiming& slot)
{
    if (tx == rx)
        throw Error("exchange requires distinct nodes");
    RandomStream& rng = world.rng();
    Clock& tx_clock = world.node(tx).clock;
    Clock& rx_clock = world.node(rx).clock;
    const LinkModel& link = world.link(tx, rx);

    // Emission is scheduled on a DAC edge of the transmitter's clock; the
    // recorded timestamp carries that clock's read jitter.
    const double scheduled_local = slot.slot_start + slot.tdma_window;
    const double t_emit = tx_clock.global_time_at(scheduled_local);
    OneWayResult out;
    out.tx_timestamp = tx_clock.read(t_emit, rng);

    const double pulse_len = static_cast<double>(chain.pulse.size()) / chain.spec.sample_rate;
    world.record({tx, t_emit, t_emit + pulse_len});

    const double t_arrive = t_emit + world.directed_delay(tx, rx);
    const double local_arrival = rx_clock.read(t_arrive, rng);

    SampledSignal capture;
    capture.sample_rate = chain.spec.sample_rate;
    capture.start_time = slot.slot_start;
    capture.samples =
        ComplexVector::Zero(static_cast<Eigen::Index>(std::llround(slot.slot_width * chain.spec.sample_rate)));
    add_delayed(capture, chain.pulse, local_arrival);
    if (link.echo_gain > 0.0)
        add_delayed(capture, chain.pulse, local_arrival + link.echo_delay, link.echo_gain);
    add_awgn(capture.samples, noise_variance_for(mean_power(chain.pulse.samples), link.snr_db), rng);

    try
    {
        out.toa = refine_peak(matched_filter(capture, chain.pulse), chain.table, chain.peak);
    }
    catch (const SignalError& e)
    {
        throw LostExchange(tx, rx, e.what());
    }
    if (out.toa.snr_estimate < chain.detection_threshold_db)
        throw LostExchange(tx, rx, "peak SNR " + std::to_string(out.toa.snr_estimate) + " dB below threshold");
    out.rx_timestamp = out.toa.toa;
    return out;
}

TimestampQuad exchange(NodeId n, NodeId m, const RfChain& chain, World& world, const SlotTiming& forward,
                       const SlotTiming& reverse, std::size_t epoch)
{
    const OneWayResult fwd = transmit_one_way(world, n, m, chain, forward);
    const OneWayResult rev = transmit_one_way(world, m, n, chain, reverse);
    TimestampQuad q;
    q.t_tx_n = fwd.tx_timestamp;
    q.t_rx_m = fwd.rx_timestamp;
    q.t_tx_m = rev.tx_timestamp;
    q.t_rx_n = rev.rx_timestamp;
    q.epoch = epoch;
    q.n = n;
    q.m = m;
    return q;
}

} // namespace cda
