#ifndef CDA_CONSENSUS_HPP
#define CDA_CONSENSUS_HPP

#include "cda/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <utility>
#include <vector>

namespace cda
{

/// Undirected connectivity graph over nodes 0..N-1.
class Graph
{
public:
    Graph() = default;
    Graph(std::size_t node_count, std::vector< std::pair< NodeId, NodeId > > edges);

    static Graph complete(std::size_t n);
    static Graph ring(std::size_t n);
    static Graph path(std::size_t n);

    std::size_t size() const { return n_; }
    const std::vector< std::pair< NodeId, NodeId > >& edges() const { return edges_; }
    bool has_edge(NodeId a, NodeId b) const;
    std::size_t degree(NodeId a) const { return degree_.at(a); }
    bool connected() const;

private:
    std::size_t n_ = 0;
    std::vector< std::pair< NodeId, NodeId > > edges_; // normalised a < b, unique
    std::vector< std::size_t > degree_;
    std::vector< char > adjacency_;
};

template < typename Scalar >
using MatrixX = Eigen::Matrix< Scalar, Eigen::Dynamic, Eigen::Dynamic >;

template < typename Scalar >
using VectorX = Eigen::Matrix< Scalar, Eigen::Dynamic, 1 >;

/// Metropolis-Hastings weights: 1/(1 + max(deg n, deg m)) on each edge,
/// the remainder on the diagonal, zero elsewhere. Throws ConfigError when
/// the graph is disconnected.
template < typename Scalar = double >
MatrixX< Scalar > build_weights(const Graph& g)
{
    if (g.size() == 0)
        throw ConfigError("graph has no nodes");
    if (!g.connected())
        throw ConfigError("graph is disconnected");
    const auto n = static_cast< Eigen::Index >(g.size());
    MatrixX< Scalar > w = MatrixX< Scalar >::Zero(n, n);
    for (const auto& [a, b] : g.edges())
    {
        const Scalar v = Scalar(1) / Scalar(1 + std::max(g.degree(a), g.degree(b)));
        w(static_cast< Eigen::Index >(a), static_cast< Eigen::Index >(b)) = v;
        w(static_cast< Eigen::Index >(b), static_cast< Eigen::Index >(a)) = v;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        w(i, i) = Scalar(1) - w.row(i).sum();
    return w;
}

/// Symmetric, doubly stochastic, entries in [0, 1], zero off the graph.
template < typename Derived >
bool is_valid_weight_matrix(const Eigen::MatrixBase< Derived >& w, const Graph& g, double tol = 1e-12)
{
    const auto n = w.rows();
    if (n != w.cols() || static_cast< std::size_t >(n) != g.size())
        return false;
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > tol)
        return false;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        if (std::abs(w.row(i).sum() - 1.0) > tol || std::abs(w.col(i).sum() - 1.0) > tol)
            return false;
        for (Eigen::Index j = 0; j < n; ++j)
        {
            const double v = w(i, j);
            if (v < -tol || v > 1.0 + tol)
                return false;
            if (i != j && !g.has_edge(static_cast< NodeId >(i), static_cast< NodeId >(j)) && v != 0.0)
                return false;
        }
    }
    return true;
}

/// Correction for one node from its weight row and its bias column:
/// w_n . delta_n, where delta_n[m] is node m's offset relative to node n.
template < typename RowDerived, typename ColDerived >
typename RowDerived::Scalar local_correction(const Eigen::MatrixBase< RowDerived >& weight_row,
                                             const Eigen::MatrixBase< ColDerived >& bias_column)
{
    return weight_row.dot(bias_column);
}

/// Average-consensus time update for every node. `offsets` is the bias
/// matrix Delta with column n holding each node's offset relative to n
/// (Delta(m, n) = T_m - T_n, measured). Returns the per-node corrections
/// w_n . delta_n to add to each clock.
template < typename DerivedD, typename DerivedW >
VectorX< typename DerivedW::Scalar > consensus_step(const Eigen::MatrixBase< DerivedD >& offsets,
                                                   const Eigen::MatrixBase< DerivedW >& weights)
{
    const auto n = weights.rows();
    if (weights.cols() != n || offsets.rows() != n || offsets.cols() != n)
        throw Error("consensus_step: dimension mismatch");
    VectorX< typename DerivedW::Scalar > c(n);
    for (Eigen::Index i = 0; i < n; ++i)
        c[i] = local_correction(weights.row(i), offsets.col(i));
    return c;
}

/// Removes an erased pair for one epoch: the pair weight moves onto both
/// diagonals, which keeps the matrix symmetric and doubly stochastic.
template < typename Scalar >
void drop_pair(MatrixX< Scalar >& w, NodeId a, NodeId b)
{
    const auto i = static_cast< Eigen::Index >(a);
    const auto j = static_cast< Eigen::Index >(b);
    const Scalar v = w(i, j);
    w(i, j) = Scalar(0);
    w(j, i) = Scalar(0);
    w(i, i) += v;
    w(j, j) += v;
}

/// Second-largest eigenvalue modulus of a symmetric weight matrix; the
/// asymptotic per-step contraction of disagreement under consensus.
template < typename Derived >
double second_largest_eigenvalue_modulus(const Eigen::MatrixBase< Derived >& w)
{
    Eigen::SelfAdjointEigenSolver< Eigen::MatrixXd > solver(w.template cast< double >());
    Eigen::VectorXd ev = solver.eigenvalues().cwiseAbs();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater< double >());
    return ev.size() > 1 ? ev[1] : 0.0;
}

/// Bias matrix from true clock values: Delta(m, n) = T_m - T_n.
template < typename Derived >
MatrixX< typename Derived::Scalar > bias_matrix_from_times(const Eigen::MatrixBase< Derived >& times)
{
    const auto n = times.size();
    MatrixX< typename Derived::Scalar > d(n, n);
    for (Eigen::Index col = 0; col < n; ++col)
        for (Eigen::Index row = 0; row < n; ++row)
            d(row, col) = times[row] - times[col];
    return d;
}

} // namespace cda

#endif // CDA_CONSENSUS_HPP
