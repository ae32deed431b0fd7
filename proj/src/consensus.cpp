#include "cda/consensus.hpp"

#include <queue>

namespace cda
{

Graph::Graph(std::size_t node_count, std::vector< std::pair< NodeId, NodeId > > edges)
    : n_(node_count), degree_(node_count, 0), adjacency_(node_count * node_count, 0)
{
    for (auto [a, b] : edges)
    {
        if (a >= n_ || b >= n_)
            throw ConfigError("graph edge references unknown node");
        if (a == b)
            throw ConfigError("graph edges may not be self-loops");
        if (a > b)
            std::swap(a, b);
        if (adjacency_[a * n_ + b])
            continue;
        adjacency_[a * n_ + b] = 1;
        adjacency_[b * n_ + a] = 1;
        ++degree_[a];
        ++degree_[b];
        edges_.emplace_back(a, b);
    }
}

Graph Graph::complete(std::size_t n)
{
    std::vector< std::pair< NodeId, NodeId > > e;
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = a + 1; b < n; ++b)
            e.emplace_back(a, b);
    return Graph(n, std::move(e));
}

Graph Graph::ring(std::size_t n)
{
    std::vector< std::pair< NodeId, NodeId > > e;
    for (NodeId a = 0; a + 1 < n; ++a)
        e.emplace_back(a, a + 1);
    if (n > 2)
        e.emplace_back(n - 1, 0);
    return Graph(n, std::move(e));
}

Graph Graph::path(std::size_t n)
{
    std::vector< std::pair< NodeId, NodeId > > e;
    for (NodeId a = 0; a + 1 < n; ++a)
        e.emplace_back(a, a + 1);
    return Graph(n, std::move(e));
}

bool Graph::has_edge(NodeId a, NodeId b) const
{
    if (a >= n_ || b >= n_)
        return false;
    return adjacency_[a * n_ + b] != 0;
}

bool Graph::connected() const
{
    if (n_ == 0)
        return false;
    std::vector< char > seen(n_, 0);
    std::queue< NodeId > q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty())
    {
        const NodeId a = q.front();
        q.pop();
        for (NodeId b = 0; b < n_; ++b)
            if (!seen[b] && adjacency_[a * n_ + b])
            {
                seen[b] = 1;
                ++count;
                q.push(b);
            }
    }
    return count == n_;
}

} // namespace cda
