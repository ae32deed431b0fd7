#include "cda/twtt.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cda;

namespace
{

constexpr double ns = 1e-9;

TimestampQuad quad(double a, double b, double c, double d) { return {a, b, c, d, 0, 0, 1}; }

World pair_world(double distance, double offset_m, double snr_db, std::uint64_t seed)
{
    std::vector< Node > nodes(2);
    nodes[1].position = Vector3(distance, 0.0, 0.0);
    ClockState s;
    s.beta = offset_m;
    nodes[1].clock = Clock(s);
    LinkModel link;
    link.snr_db = snr_db;
    return World(nodes, link, seed);
}

RfChain chain_200()
{
    WaveformSpec s;
    s.kind = WaveformKind::two_tone_lfm;
    s.bandwidth = 40e6;
    s.sample_rate = 200e6;
    s.pulse_duration = 1e-6;
    return RfChain::make(s, 64, BiasTrainingOptions{}, 9.0);
}

// Slots of 2 * window + pulse + guard, n -> m first.
TimestampQuad run_exchange(World& w, const RfChain& chain, double t0, std::size_t epoch)
{
    const double window = 200 * ns;
    const double width = 2 * window + 1e-6 + 200 * ns;
    return exchange(0, 1, chain, w, {t0, window, width}, {t0 + width, window, width}, epoch);
}

} // namespace

TEST_CASE("hand-evaluated estimator examples")
{
    CHECK(std::abs(estimate_offset(quad(0, 5 * ns, 10 * ns, 15 * ns))) < 1e-24);
    CHECK(estimate_offset(quad(0, 12 * ns, 20 * ns, 28 * ns)) == doctest::Approx(2 * ns).epsilon(1e-15));
    CHECK(estimate_range(quad(0, 5 * ns, 10 * ns, 15 * ns)) == doctest::Approx(1.4989622900).epsilon(1e-10));
    CHECK(estimate_range(quad(0, 0, 0, 0)) == 0.0);

    const TimestampQuad q = quad(1 * ns, 9 * ns, 30 * ns, 31 * ns);
    TimestampQuad shifted = q;
    shifted.t_rx_m += 3 * ns;
    shifted.t_tx_m += 3 * ns;
    CHECK(estimate_offset(shifted) - estimate_offset(q) == doctest::Approx(3 * ns).epsilon(1e-12));
    CHECK(estimate_range(shifted) == doctest::Approx(estimate_range(q)).epsilon(1e-15));
}

TEST_CASE("estimators match the formulas on 1000 random quads")
{
    RandomStream rng(2024);
    for (int i = 0; i < 1000; ++i)
    {
        const double base = rng.uniform(-1.0, 1.0);
        const TimestampQuad q = quad(base, base + rng.uniform(-1e-6, 1e-6), base + rng.uniform(1e-6, 1e-3),
                                     base + rng.uniform(1e-3, 2e-3));
        // Hand evaluation in long double.
        const long double fwd = static_cast< long double >(q.t_rx_m) - q.t_tx_n;
        const long double rev = static_cast< long double >(q.t_rx_n) - q.t_tx_m;
        const long double off = 0.5L * (fwd - rev);
        const long double rng_m = 0.5L * 299792458.0L * (fwd + rev);
        const double scale = std::abs(base) + 1e-3;
        CHECK(std::abs(estimate_offset(q) - static_cast< double >(off)) <= 1e-15 * scale);
        CHECK(std::abs(estimate_range(q) / kSpeedOfLight - static_cast< double >(rng_m / 299792458.0L)) <=
              1e-15 * scale);

        // Antisymmetry under role swap.
        CHECK(estimate_offset(swap_roles(q)) == -estimate_offset(q));
        CHECK(estimate_range(swap_roles(q)) == estimate_range(q));
    }
}

TEST_CASE("offset is blind to common delay, range to common offset")
{
    RandomStream rng(5);
    for (int i = 0; i < 200; ++i)
    {
        const double d = rng.uniform(0.0, 100 * ns);
        const double off = rng.uniform(-1e-6, 1e-6);
        const double t0 = rng.uniform(0.0, 1.0);
        const double hold = 1e-4;
        // m ahead of n by off, delay d each way.
        const TimestampQuad q = quad(t0, t0 + d + off, t0 + off + hold, t0 + hold + d);
        CHECK(estimate_offset(q) == doctest::Approx(off).epsilon(1e-6));
        CHECK(estimate_range(q) == doctest::Approx(d * kSpeedOfLight).epsilon(1e-6));
    }
}

TEST_CASE("simulated exchanges")
{
    const RfChain chain = chain_200();
    {
        World w = pair_world(0.0, 0.0, kInf, 1);
        const PairEstimate e = estimate_pair(run_exchange(w, chain, 1e-3, 0));
        CHECK(std::abs(e.offset) < 1e-12);
        CHECK(std::abs(e.range) < 1e-3);
    }
    {
        // m ahead by 10 ns: the estimate is m relative to n.
        World w = pair_world(0.0, 10 * ns, kInf, 1);
        const PairEstimate e = estimate_pair(run_exchange(w, chain, 1e-3, 0));
        CHECK(e.offset == doctest::Approx(10 * ns).epsilon(1e-3));
        CHECK(std::abs(e.range) < 3e-3);
    }
    {
        World w = pair_world(10.0, 0.0, kInf, 1);
        const PairEstimate e = estimate_pair(run_exchange(w, chain, 1e-3, 0));
        CHECK(std::abs(e.range - 10.0) < 3e-3);
        CHECK(std::abs(e.offset) < 5e-12);
    }
}

TEST_CASE("sub-centimetre range precision at 20 dB over 500 epochs")
{
    const RfChain chain = chain_200();
    World w = pair_world(3.0, 2.5 * ns, 20.0, 77);
    std::vector< double > ranges, offsets;
    for (std::size_t k = 0; k < 500; ++k)
    {
        const PairEstimate e = estimate_pair(run_exchange(w, chain, 1e-3 * (k + 1), k));
        ranges.push_back(e.range);
        offsets.push_back(e.offset);
    }
    auto stdev = [](const std::vector< double >& v) {
        double m = 0.0;
        for (double x : v)
            m += x;
        m /= v.size();
        double s = 0.0;
        for (double x : v)
            s += (x - m) * (x - m);
        return std::sqrt(s / (v.size() - 1));
    };
    CHECK(stdev(ranges) < 0.01);
    CHECK(stdev(offsets) < 0.1 / chain.spec.sample_rate);
}

TEST_CASE("a pulse outside the capture window raises LostExchange")
{
    // m runs 1 ms ahead: n's pulse lands long before m starts listening.
    const RfChain chain = chain_200();
    World w = pair_world(0.0, 1e-3, kInf, 3);
    CHECK_THROWS_AS(run_exchange(w, chain, 1e-2, 0), LostExchange);
}
