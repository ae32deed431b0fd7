#include "cda/world.hpp"

#include <algorithm>
#include <sstream>

namespace cda
{

World::World(std::vector<Node> nodes, const LinkModel& default_link, std::uint64_t seed)
    : nodes_(std::move(nodes)), links_(nodes_.size() * nodes_.size(), default_link), rng_(seed)
{
    default_link.validate();
}

const LinkModel& World::link(NodeId tx, NodeId rx) const
{
    if (tx >= size() || rx >= size())
        throw Error("link index out of range");
    return links_[tx * size() + rx];
}

void World::set_link(NodeId tx, NodeId rx, const LinkModel& link)
{
    if (tx >= size() || rx >= size())
        throw Error("link index out of range");
    link.validate();
    links_[tx * size() + rx] = link;
}

double World::directed_delay(NodeId tx, NodeId rx) const
{
    const LinkModel& l = link(tx, rx);
    double d = propagation_delay(node(tx).position, node(rx).position, l);
    if (!l.reciprocal && tx > rx)
        d += l.asymmetry;
    return d;
}

double World::max_propagation_delay() const
{
    double worst = 0.0;
    for (NodeId a = 0; a < size(); ++a)
        for (NodeId b = 0; b < size(); ++b)
            if (a != b)
                worst = std::max(worst, directed_delay(a, b) + link(a, b).echo_delay);
    return worst;
}

void World::advance_to(double t)
{
    if (t < now_)
        throw Error("world time cannot move backwards");
    now_ = t;
}

Eigen::VectorXd World::offsets(double t) const
{
    Eigen::VectorXd o(static_cast<Eigen::Index>(size()));
    for (NodeId i = 0; i < size(); ++i)
        o[static_cast<Eigen::Index>(i)] = nodes_[i].clock.offset(t);
    return o;
}

Eigen::VectorXd World::centred_offsets(double t) const
{
    Eigen::VectorXd o = offsets(t);
    return o.array() - o.mean();
}

double World::max_pairwise_offset(double t) const
{
    const Eigen::VectorXd o = offsets(t);
    return o.maxCoeff() - o.minCoeff();
}

std::optional<std::string> audit_tdma(const World& world)
{
    struct Arrival
    {
        double start;
        double end;
        NodeId tx;
    };
    for (NodeId rx = 0; rx < world.size(); ++rx)
    {
        std::vector<Arrival> arrivals;
        for (const auto& e : world.events())
        {
            if (e.tx == rx)
                continue;
            const double d = world.directed_delay(e.tx, rx);
            arrivals.push_back({e.start + d, e.end + d + world.link(e.tx, rx).echo_delay, e.tx});
        }
        std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) { return a.start < b.start; });
        for (std::size_t i = 1; i < arrivals.size(); ++i)
        {
            if (arrivals[i].start < arrivals[i - 1].end)
            {
                std::ostringstream os;
                os << "transmissions from node " << arrivals[i - 1].tx << " and node " << arrivals[i].tx
                   << " overlap at node " << rx << " (t=" << arrivals[i].start << " s)";
                return os.str();
            }
        }
    }
    return std::nullopt;
}

} // namespace cda
