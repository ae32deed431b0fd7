#include "cda/montecarlo.hpp"

#include "cda/random.hpp"

#include <cmath>

namespace cda
{

std::vector< double > TimingErrorStudyConfig::sigma_grid() const
{
    if (!sigma_fractions.empty())
        return sigma_fractions;
    std::vector< double > grid;
    for (int i = 0; i <= 60; ++i)
        grid.push_back(0.005 * i);
    return grid;
}

void TimingErrorStudyConfig::validate() const
{
    if (array_sizes.empty())
        throw ConfigError("timing-error study needs at least one array size");
    for (std::size_t n : array_sizes)
        if (n == 0)
            throw ConfigError("array sizes must be positive");
    for (double s : sigma_grid())
        if (!(s >= 0.0 && s <= 0.5))
            throw ConfigError("sigma fractions must lie in [0, 0.5]");
    if (trials < 100)
        throw ConfigError("timing-error study needs at least 100 trials per point");
    if (!(gain_threshold > 0.0 && gain_threshold <= 1.0))
        throw ConfigError("gain threshold must be in (0, 1]");
}

ProportionInterval wilson_interval(std::size_t successes, std::size_t trials, double z)
{
    if (trials == 0)
        return {0.0, 0.0, 1.0};
    const double n = static_cast< double >(trials);
    const double p = static_cast< double >(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector< ProbabilityPoint > probability_curve(const TimingErrorStudyConfig& cfg)
{
    cfg.validate();
    const std::vector< double > grid = cfg.sigma_grid();
    std::vector< ProbabilityPoint > out;
    out.reserve(cfg.array_sizes.size() * grid.size());
    for (std::size_t n : cfg.array_sizes)
    {
        Eigen::VectorXd delays(static_cast< Eigen::Index >(n));
        for (std::size_t s = 0; s < grid.size(); ++s)
        {
            ProbabilityPoint pt;
            pt.array_size = n;
            pt.sigma_fraction = grid[s];
            pt.trials = cfg.trials;
            for (std::size_t t = 0; t < cfg.trials; ++t)
            {
                RandomStream rng(mix_seed(cfg.seed, {n, s, t}));
                for (Eigen::Index i = 0; i < delays.size(); ++i)
                    delays[i] = rng.normal(grid[s]);
                if (coherent_gain_cw(delays, 1.0) >= cfg.gain_threshold)
                    ++pt.successes;
            }
            pt.p = wilson_interval(pt.successes, pt.trials);
            out.push_back(pt);
        }
    }
    return out;
}

std::optional< double > threshold_crossing(const std::vector< ProbabilityPoint >& curve, std::size_t array_size,
                                           double level)
{
    const ProbabilityPoint* prev = nullptr;
    for (const auto& pt : curve)
    {
        if (pt.array_size != array_size)
            continue;
        if (pt.p.estimate < level)
        {
            if (prev == nullptr)
                return pt.sigma_fraction;
            const double span = prev->p.estimate - pt.p.estimate;
            const double u = span > 0.0 ? (prev->p.estimate - level) / span : 0.0;
            return prev->sigma_fraction + u * (pt.sigma_fraction - prev->sigma_fraction);
        }
        prev = &pt;
    }
    return std::nullopt;
}

std::optional< ProbabilityPoint > point_at(const std::vector< ProbabilityPoint >& curve, std::size_t array_size,
                                           double sigma_fraction)
{
    std::optional< ProbabilityPoint > best;
    for (const auto& pt : curve)
        if (pt.array_size == array_size &&
            (!best || std::abs(pt.sigma_fraction - sigma_fraction) < std::abs(best->sigma_fraction - sigma_fraction)))
            best = pt;
    return best;
}

} // namespace cda
