#include "cda/channel.hpp"
#include "cda/signal.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace cda;

namespace
{

WaveformSpec two_tone_200()
{
    WaveformSpec s;
    s.kind = WaveformKind::two_tone_lfm;
    s.pulse_duration = 1e-6;
    s.bandwidth = 40e6;
    s.sample_rate = 200e6;
    return s;
}

// Received buffer with the template delayed by `delay` samples.
SampledSignal delayed(const SampledSignal& templ, double delay, std::size_t len)
{
    return {fractional_delay(templ.samples, delay, len), templ.sample_rate, 0.0};
}

struct Sweep
{
    double max_raw = 0.0;
    double max_corrected = 0.0;
};

// Residuals in samples over `points` fractional delays in [0, 1].
Sweep sweep(const WaveformSpec& spec, const BiasTable& table, int points)
{
    const SampledSignal templ = synthesize(spec);
    const BiasTable none;
    Sweep out;
    for (int i = 0; i < points; ++i)
    {
        const double truth = 40.0 + static_cast< double >(i) / (points - 1);
        const SampledSignal mf = matched_filter(delayed(templ, truth, templ.size() + 100), templ);
        const ToAEstimate raw = refine_peak(mf, none);
        const ToAEstimate fixed = refine_peak(mf, table);
        out.max_raw = std::max(out.max_raw, std::abs(raw.toa * spec.sample_rate - truth));
        out.max_corrected = std::max(out.max_corrected, std::abs(fixed.toa * spec.sample_rate - truth));
    }
    return out;
}

} // namespace

TEST_CASE("fractional_delay reproduces an analytic band-limited shift")
{
    // Gaussian envelope on a tone: effectively band-limited, so the shifted
    // samples are known in closed form.
    const int n = 512;
    const double width = 12.0;
    const double f = 0.07;
    auto g = [&](double k) {
        return std::polar(std::exp(-0.5 * std::pow((k - 200.0) / width, 2)), kTwoPi * f * k);
    };
    ComplexVector x(n);
    for (int k = 0; k < n; ++k)
        x[k] = g(k);
    for (double d : {0.0, 3.37, 17.5, 40.91})
    {
        const ComplexVector y = fractional_delay(x, d, n);
        double worst = 0.0;
        for (int k = 0; k < n; ++k)
            worst = std::max(worst, std::abs(y[k] - g(k - d)));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("synthesized waveforms")
{
    WaveformSpec cw;
    cw.kind = WaveformKind::cw_pulse;
    cw.pulse_duration = 1e-6;
    cw.sample_rate = 200e6;
    const SampledSignal c = synthesize(cw);
    REQUIRE(c.size() == 200);
    CHECK((c.samples.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-15);

    WaveformSpec up = two_tone_200();
    up.kind = WaveformKind::lfm_up;
    const SampledSignal u = synthesize(up);
    const SampledSignal mf = matched_filter(u, u);
    Eigen::Index at = 0;
    const double peak = mf.samples.cwiseAbs().maxCoeff(&at);
    CHECK(at == 0);
    CHECK(peak == doctest::Approx(static_cast< double >(u.size())).epsilon(1e-9));

    CHECK(synthesize(up).samples == u.samples);
    CHECK_THROWS_AS(parse_waveform_kind("square"), SignalError);
    WaveformSpec bad = up;
    bad.sample_rate = 60e6;
    CHECK_THROWS_AS(synthesize(bad), SignalError);
}

TEST_CASE("two-tone spectrum holds two bands centred 40 MHz apart")
{
    const WaveformSpec spec = two_tone_200();
    const SampledSignal s = synthesize(spec);
    const std::size_t m = 4096;
    ComplexVector buf = ComplexVector::Zero(static_cast< Eigen::Index >(m));
    buf.head(s.samples.size()) = s.samples;
    const ComplexVector spectrum = fft_forward(buf);

    double inside = 0.0, total = 0.0;
    double pos_p = 0.0, pos_fp = 0.0, neg_p = 0.0, neg_fp = 0.0;
    for (std::size_t k = 0; k < m; ++k)
    {
        const double f = (k < m / 2 ? static_cast< double >(k) : static_cast< double >(k) - m) * spec.sample_rate / m;
        const double p = std::norm(spectrum[static_cast< Eigen::Index >(k)]);
        total += p;
        if (std::abs(f) <= 1.1 * spec.bandwidth)
            inside += p;
        if (f > 0)
        {
            pos_p += p;
            pos_fp += p * f;
        }
        else if (f < 0)
        {
            neg_p += p;
            neg_fp += p * f;
        }
    }
    CHECK(inside / total > 0.95);
    const double separation = pos_fp / pos_p - neg_fp / neg_p;
    CHECK(separation == doctest::Approx(spec.bandwidth).epsilon(0.05));
    CHECK(pos_p / neg_p == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("matched filter basics")
{
    const SampledSignal templ = synthesize(two_tone_200());
    for (int k : {0, 7, 63})
    {
        const SampledSignal mf = matched_filter(delayed(templ, k, templ.size() + 80), templ);
        Eigen::Index at = 0;
        mf.samples.cwiseAbs().maxCoeff(&at);
        CHECK(at == k);
    }

    SampledSignal zeros{ComplexVector::Zero(400), 200e6, 0.0};
    CHECK(matched_filter(zeros, templ).samples.cwiseAbs().maxCoeff() == 0.0);

    SampledSignal other = zeros;
    other.sample_rate = 100e6;
    CHECK_THROWS_AS(matched_filter(other, templ), SignalError);

    // Peak magnitude does not depend on a global phase rotation.
    SampledSignal rx = delayed(templ, 20.3, templ.size() + 60);
    SampledSignal rotated = rx;
    rotated.samples *= std::polar(1.0, 1.234);
    CHECK(matched_filter(rx, templ).samples.cwiseAbs().maxCoeff() ==
          doctest::Approx(matched_filter(rotated, templ).samples.cwiseAbs().maxCoeff()).epsilon(1e-12));
}

TEST_CASE("QLS vertex")
{
    const std::vector< double > tri{1.0, 2.0, 3.0, 2.0, 1.0};
    CHECK(std::abs(qls_vertex(tri)) < 1e-12);
    // Exact parabola with vertex at +0.3.
    std::vector< double > par;
    for (int i = -2; i <= 2; ++i)
        par.push_back(5.0 - std::pow(i - 0.3, 2));
    CHECK(qls_vertex(par) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(qls_vertex(std::vector< double >{1.0, 2.0}), SignalError);
}

TEST_CASE("refined ToA on fractional delays")
{
    const WaveformSpec spec = two_tone_200();
    const SampledSignal templ = synthesize(spec);
    const BiasTable table = build_bias_table(spec, 64);

    const SampledSignal mf = matched_filter(delayed(templ, 3.37, templ.size() + 50), templ);
    CHECK(std::abs(refine_peak(mf, table).toa * spec.sample_rate - 3.37) < 0.02);

    const SampledSignal half = matched_filter(delayed(templ, 30.5, templ.size() + 80), templ);
    CHECK(std::abs(refine_peak(half, table).toa * spec.sample_rate - 30.5) < 0.05);

    // Shift equivariance.
    const double base = refine_peak(matched_filter(delayed(templ, 12.2, templ.size() + 80), templ), table).toa;
    const double moved = refine_peak(matched_filter(delayed(templ, 19.45, templ.size() + 80), templ), table).toa;
    CHECK(std::abs((moved - base) * spec.sample_rate - 7.25) < 0.02);

    SampledSignal edge{ComplexVector::Zero(300), spec.sample_rate, 0.0};
    edge.samples[0] = 1.0;
    CHECK_THROWS_AS(refine_peak(edge, table), SignalError);
}

TEST_CASE("101-point sweep at 200 MSa/s stays under 50 ps and the table at least halves the raw residual")
{
    const WaveformSpec spec = two_tone_200();
    const BiasTable table = build_bias_table(spec, 64);
    const Sweep s = sweep(spec, table, 101);
    const double ts = 1.0 / spec.sample_rate;
    CHECK(s.max_corrected * ts < 50e-12);
    CHECK(s.max_raw >= 2.0 * s.max_corrected);
}

TEST_CASE("bias table shape")
{
    const BiasTable table = build_bias_table(two_tone_200(), 64);
    CHECK(table.size() == 64);
    CHECK(std::abs(table.correction(0.0)) < 1e-3);
    // QLS bias is odd about the sample centre for a symmetric peak.
    for (double u : {0.1, 0.2, 0.3, 0.4})
        CHECK(std::abs(table.correction(u) + table.correction(-u)) < 2e-3);
    CHECK_THROWS_AS(build_bias_table(two_tone_200(), 8), SignalError);
    CHECK(BiasTable().correction(0.25) == 0.0);
}

TEST_CASE("ToA error spread shrinks with SNR")
{
    const WaveformSpec spec = two_tone_200();
    const SampledSignal templ = synthesize(spec);
    const BiasTable table = build_bias_table(spec, 64);
    const double truth = 60.25;
    const ComplexVector clean = fractional_delay(templ.samples, truth, templ.size() + 120);
    RandomStream rng(42);
    std::vector< double > spread;
    for (double snr : {0.0, 10.0, 20.0, 30.0})
    {
        double ss = 0.0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t)
        {
            SampledSignal rx{clean, spec.sample_rate, 0.0};
            add_awgn(rx.samples, noise_variance_for(mean_power(templ.samples), snr), rng);
            const double e = refine_peak(matched_filter(rx, templ), table).toa * spec.sample_rate - truth;
            ss += e * e;
        }
        spread.push_back(std::sqrt(ss / trials));
    }
    for (std::size_t i = 1; i < spread.size(); ++i)
        CHECK(spread[i] < spread[i - 1]);
}
