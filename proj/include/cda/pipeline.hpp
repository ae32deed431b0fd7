#ifndef CDA_PIPELINE_HPP
#define CDA_PIPELINE_HPP

#include "cda/consensus.hpp"
#include "cda/twtt.hpp"
#include "cda/world.hpp"

#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace cda
{

/// Waveform and TDMA parameters of one synchronization stage.
struct RefinementStep
{
    double sample_rate = 200e6;    // Sa/s
    double tone_separation = 40e6; // Hz
    double tdma_window = 5e-6;     // s, tolerated clock disagreement during capture
    double pulse_duration = 1e-6;  // s

    WaveformSpec waveform(double carrier_hz) const;
};

struct StageSchedule
{
    std::vector< RefinementStep > steps;

    /// Sample rate and tone separation non-decreasing, window non-increasing.
    void validate() const;

    /// Geometric interpolation of every parameter between the endpoints.
    static StageSchedule geometric(const RefinementStep& first, const RefinementStep& last, std::size_t count);

    /// Five steps from 5 MSa/s, 2 MHz, 10 ms to 200 MSa/s, 40 MHz, 5 us. Pulse
    /// length is held at 200 samples.
    static StageSchedule standard();
};

/// Slot layout of one epoch in every node's local time. Slot i starts at
/// epoch_start + slot_offsets[i]; each slot is wide enough for the tolerated
/// disagreement on either side of the nominal emission time.
struct TdmaPlan
{
    std::vector< double > slot_offsets;
    double slot_width = 0.0;
    double epoch_period = 0.0;

    static TdmaPlan build(std::size_t transmissions, double tdma_window, double pulse_duration, double max_propagation,
                          double guard, double min_epoch_period);

    /// Slots disjoint and wide enough for pulse, propagation and guard.
    void validate(double tdma_window, double pulse_duration, double max_propagation, double guard) const;
};

/// Control-plane (Wi-Fi/TCP) message model for the coarse stage and the
/// timestamp exchange: latency = mean + U(0, jitter), lost messages are
/// retransmitted after a timeout.
struct ControlNetworkModel
{
    double latency_mean = 2e-3;
    double latency_jitter = 5e-3;
    double loss_probability = 0.0;
    double retransmit_timeout = 0.2;
    std::size_t max_retries = 5;

    void validate() const;
};

struct SyncRecord
{
    std::size_t epoch = 0;
    NodeId node = 0;
    double true_offset = 0.0; // s, node offset from the network mean before correction
    double est_error = 0.0;   // s, applied correction minus the correction the true offsets call for
    double correction = 0.0;  // s, applied
    bool converged = false;
};

struct SyncReport
{
    std::vector< SyncRecord > rows;
    std::vector< PairEstimate > pairs;
    std::size_t lost_exchanges = 0;

    /// Per-node mean and max |est_error| over all rows.
    std::vector< double > mean_abs_error(std::size_t nodes) const;
    std::vector< double > max_abs_error(std::size_t nodes) const;
};

struct SyncOptions
{
    double carrier_hz = 2.1e9;
    double epoch_period = 1.0;
    double detection_threshold_db = 9.0;
    int qls_window = 3;
    std::size_t bias_points = 64;
    double bias_snr_db = 40.0;
    std::size_t bias_averages = 8;
    double guard_samples = 16.0;
    double epoch_lead = 1e-3; // s between the epoch announcement and the first slot
    NodeId aggregator = 0;
    double smoothing = 0.0; // exponential smoothing of the bias matrix, 0 = off
    double fine_convergence = 100e-12;
    RefinementStep fine{};
    ControlNetworkModel control{};
};

/// Runs the staged synchronization process on one World: coarse packet
/// alignment, the refinement schedule, and the steady-state TWTT plus
/// average-consensus loop. Consensus is evaluated on the aggregator from the
/// shared timestamp set; each node's correction is its own w_n . delta_n.
class SyncEngine
{
public:
    SyncEngine(World world, Graph graph, SyncOptions options);

    /// Network-packet alignment of every node to the aggregator's clock.
    /// Returns the applied corrections. Throws UnreachableNode when a node
    /// exhausts its retries.
    Eigen::VectorXd coarse_align();

    /// One TWTT + consensus epoch per step. Throws RefinementDivergence when
    /// residual offsets do not fit the following stage's window.
    SyncReport run_refinement(const StageSchedule& schedule);

    /// Steady-state loop at the fine-stage waveform.
    SyncReport run_fine_loop(std::size_t epochs);

    World& world() { return world_; }
    const World& world() const { return world_; }
    const Graph& graph() const { return graph_; }
    const Eigen::MatrixXd& weights() const { return weights_; }
    const SyncOptions& options() const { return options_; }

    /// Most recent estimate per unordered pair (n < m).
    const std::map< std::pair< NodeId, NodeId >, PairEstimate >& latest_estimates() const { return latest_; }

    /// Most recent measured bias matrix and weights actually used.
    const Eigen::MatrixXd& last_bias_matrix() const { return last_bias_; }
    const Eigen::MatrixXd& last_weights() const { return last_weights_; }

private:
    const RfChain& chain_for(const RefinementStep& step);
    void run_epoch(const RfChain& chain, double tdma_window, double convergence, SyncReport& report);
    bool fits(double tdma_window, double sample_rate) const;

    World world_;
    Graph graph_;
    Eigen::MatrixXd weights_;
    SyncOptions options_;
    std::size_t epoch_ = 0;
    std::size_t steps_run_ = 0;
    std::map< std::tuple< double, double, double >, RfChain > chains_;
    std::map< std::pair< NodeId, NodeId >, PairEstimate > latest_;
    Eigen::MatrixXd last_bias_;
    Eigen::MatrixXd last_weights_;
    Eigen::MatrixXd smoothed_;
};

} // namespace cda

#endif // CDA_PIPELINE_HPP
