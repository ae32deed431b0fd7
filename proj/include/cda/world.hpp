#ifndef CDA_WORLD_HPP
#define CDA_WORLD_HPP

#include "cda/channel.hpp"
#include "cda/clocks.hpp"
#include "cda/common.hpp"
#include "cda/random.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cda
{

struct Node
{
    Clock clock;
    Vector3 position = Vector3::Zero();
};

/// One on-air transmission, in global time.
struct TxEvent
{
    NodeId tx = 0;
    double start = 0.0;
    double end = 0.0;
};

/// Ground-truth simulation state for the synchronization stack: node clocks
/// and positions, directed link models, the run's random stream, and the
/// transmission log used for the TDMA audit. Single-owner; not thread-safe.
class World
{
public:
    World(std::vector<Node> nodes, const LinkModel& default_link, std::uint64_t seed);

    std::size_t size() const { return nodes_.size(); }
    Node& node(NodeId i) { return nodes_.at(i); }
    const Node& node(NodeId i) const { return nodes_.at(i); }

    const LinkModel& link(NodeId tx, NodeId rx) const;
    void set_link(NodeId tx, NodeId rx, const LinkModel& link);

    /// Propagation delay of the directed link; non-reciprocal links add their
    /// asymmetry when tx > rx.
    double directed_delay(NodeId tx, NodeId rx) const;
    double max_propagation_delay() const;

    RandomStream& rng() { return rng_; }

    double now() const { return now_; }
    void advance_to(double t);

    void record(const TxEvent& e) { events_.push_back(e); }
    const std::vector<TxEvent>& events() const { return events_; }
    void clear_events() { events_.clear(); }

    /// Noiseless clock offsets T_n(t) - t.
    Eigen::VectorXd offsets(double t) const;

    /// Offsets relative to the network mean.
    Eigen::VectorXd centred_offsets(double t) const;

    /// Largest |offset_n - offset_m| at time t.
    double max_pairwise_offset(double t) const;

private:
    std::vector<Node> nodes_;
    std::vector<LinkModel> links_; // row-major tx * N + rx
    RandomStream rng_;
    double now_ = 0.0;
    std::vector<TxEvent> events_;
};

/// Checks that no two logged transmissions overlap at any receiver.
/// Returns a description of the first collision, if any.
std::optional<std::string> audit_tdma(const World& world);

} // namespace cda

#endif // CDA_WORLD_HPP
