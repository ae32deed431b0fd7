#ifndef CDA_MONTECARLO_HPP
#define CDA_MONTECARLO_HPP

#include "cda/common.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace cda
{

/// Normalised matched-filter peak of a sum of unit rectangular pulses
/// shifted by `delays`, against the ideal unshifted rectangle:
///   G_c = (1/N) sum_n max(0, 1 - |delta_n| / T).
/// Envelope only; carrier phase plays no part.
template < typename Derived >
typename Derived::Scalar coherent_gain_cw(const Eigen::MatrixBase< Derived >& delays,
                                          typename Derived::Scalar pulse_width)
{
    using Scalar = typename Derived::Scalar;
    if (!(pulse_width > Scalar(0)))
        throw Error("coherent_gain_cw: pulse width must be positive");
    if (delays.size() == 0)
        return Scalar(0);
    const auto overlap = (Scalar(1) - delays.array().abs() / pulse_width).max(Scalar(0));
    return overlap.sum() / Scalar(delays.size());
}

struct TimingErrorStudyConfig
{
    std::vector< std::size_t > array_sizes{6, 12, 20, 100};
    std::vector< double > sigma_fractions; // sigma / T; empty = 0..0.30 in steps of 0.005
    std::size_t trials = 1000;
    double gain_threshold = 0.9;
    std::uint64_t seed = 1;

    std::vector< double > sigma_grid() const;
    void validate() const;
};

/// Wilson score interval for k successes in n trials.
struct ProportionInterval
{
    double estimate = 0.0;
    double low = 0.0;
    double high = 0.0;
};
ProportionInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

struct ProbabilityPoint
{
    std::size_t array_size = 0;
    double sigma_fraction = 0.0;
    std::size_t successes = 0;
    std::size_t trials = 0;
    ProportionInterval p;
};

/// P(G_c >= threshold) per (N, sigma) from i.i.d. N(0, sigma^2 T^2)
/// delays. Each trial draws from its own stream keyed by (seed, N, sigma
/// index, trial), so results do not depend on evaluation order.
std::vector< ProbabilityPoint > probability_curve(const TimingErrorStudyConfig& cfg);

/// First sigma at which the curve for array size N falls below `level`,
/// linearly interpolated between grid points. Empty when it never does.
std::optional< double > threshold_crossing(const std::vector< ProbabilityPoint >& curve, std::size_t array_size,
                                           double level);

/// Curve value for N at the grid point nearest sigma.
std::optional< ProbabilityPoint > point_at(const std::vector< ProbabilityPoint >& curve, std::size_t array_size,
                                           double sigma_fraction);

} // namespace cda

#endif // CDA_MONTECARLO_HPP
