#ifndef CDA_RANDOM_HPP
#define CDA_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cda
{

/// SplitMix64 finalizer; used to derive independent stream seeds from a
/// (seed, counter...) tuple so results do not depend on evaluation order.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters)
{
    std::uint64_t h = mix_seed(seed);
    for (auto c : counters)
        h = mix_seed(h ^ mix_seed(c + 0x632be59bd9b4e019ULL));
    return h;
}

class RandomStream
{
public:
    explicit RandomStream(std::uint64_t seed = 0) : seed_(seed), engine_(mix_seed(seed)) {}

    /// Independent child stream; deterministic in (parent seed, stream id).
    RandomStream fork(std::uint64_t stream_id) const { return RandomStream(mix_seed(seed_, {stream_id})); }

    double normal(double sigma = 1.0)
    {
        if (sigma == 0.0)
            return 0.0;
        return std::normal_distribution<double>(0.0, sigma)(engine_);
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    bool bernoulli(double p)
    {
        if (p <= 0.0)
            return false;
        if (p >= 1.0)
            return true;
        return std::bernoulli_distribution(p)(engine_);
    }

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace cda

#endif // CDA_RANDOM_HPP
