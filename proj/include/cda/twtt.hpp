#ifndef CDA_TWTT_HPP
#define CDA_TWTT_HPP

#include "cda/common.hpp"
#include "cda/signal.hpp"
#include "cda/world.hpp"

namespace cda
{

/// The four timestamps of one two-way exchange between nodes n and m, each
/// in the local time of the node that took it.
template < typename Scalar = double >
struct BasicTimestampQuad
{
    Scalar t_tx_n{}; // n's clock when n transmits
    Scalar t_rx_m{}; // m's clock when n's waveform arrives
    Scalar t_tx_m{}; // m's clock when m transmits back
    Scalar t_rx_n{}; // n's clock when m's waveform arrives
    std::size_t epoch = 0;
    NodeId n = 0;
    NodeId m = 0;
};

using TimestampQuad = BasicTimestampQuad< double >;

/// Clock offset of m relative to n:
///   0.5 * [(t_rx_m - t_tx_n) - (t_rx_n - t_tx_m)].
/// Positive when m's clock is ahead of n's. Propagation delay and holdoff cancel.
template < typename Scalar >
Scalar estimate_offset(const BasicTimestampQuad< Scalar >& q)
{
    const Scalar forward = q.t_rx_m - q.t_tx_n;
    const Scalar reverse = q.t_rx_n - q.t_tx_m;
    return Scalar(0.5) * (forward - reverse);
}

/// Range (c/2) * [(t_rx_m - t_tx_n) + (t_rx_n - t_tx_m)]. Clock offsets cancel.
template < typename Scalar >
Scalar estimate_range(const BasicTimestampQuad< Scalar >& q)
{
    const Scalar forward = q.t_rx_m - q.t_tx_n;
    const Scalar reverse = q.t_rx_n - q.t_tx_m;
    return Scalar(kSpeedOfLight / 2.0) * (forward + reverse);
}

/// The same exchange seen with the roles of n and m swapped.
template < typename Scalar >
BasicTimestampQuad< Scalar > swap_roles(const BasicTimestampQuad< Scalar >& q)
{
    return {q.t_tx_m, q.t_rx_n, q.t_tx_n, q.t_rx_m, q.epoch, q.m, q.n};
}

struct PairEstimate
{
    double offset = 0.0; // s, m relative to n
    double range = 0.0;  // m; may go slightly negative under noise, not clamped
    std::size_t epoch = 0;
    NodeId n = 0;
    NodeId m = 0;
};

PairEstimate estimate_pair(const TimestampQuad& q);

/// Waveform, matched-filter template, bias table and detection settings
/// shared by every exchange of one synchronization stage.
struct RfChain
{
    WaveformSpec spec;
    SampledSignal pulse;
    BiasTable table;
    PeakOptions peak;
    double detection_threshold_db = 9.0;

    static RfChain make(const WaveformSpec& spec, std::size_t bias_points, const BiasTrainingOptions& training,
                        double detection_threshold_db);
};

/// TDMA placement of one directed transmission, in the local time of the
/// transmitting and receiving nodes. The transmitter emits at
/// slot_start + tdma_window; the receiver captures [slot_start, slot_start + slot_width).
struct SlotTiming
{
    double slot_start = 0.0;
    double tdma_window = 0.0;
    double slot_width = 0.0;
};

struct OneWayResult
{
    double tx_timestamp = 0.0;
    double rx_timestamp = 0.0;
    ToAEstimate toa;
};

/// Transmits the chain's waveform from tx to rx in the given slot and
/// returns the transmit timestamp (tx clock) and refined ToA (rx clock).
/// Throws LostExchange when the peak is undetectable or at the capture edge.
OneWayResult transmit_one_way(World& world, NodeId tx, NodeId rx, const RfChain& chain, const SlotTiming& slot);

/// Full two-way exchange: n -> m in `forward`, then m -> n in `reverse`.
TimestampQuad exchange(NodeId n, NodeId m, const RfChain& chain, World& world, const SlotTiming& forward,
                       const SlotTiming& reverse, std::size_t epoch);

} // namespace cda

#endif // CDA_TWTT_HPP
