#include "cda/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>

namespace cda
{

namespace
{
Eigen::FFT<double>& fft_engine()
{
    // Plans are cached per size inside the engine.
    thread_local Eigen::FFT<double> engine;
    return engine;
}

double wrap_half(double x) { return x - std::floor(x + 0.5); }
} // namespace

WaveformKind parse_waveform_kind(std::string_view name)
{
    if (name == "two_tone_lfm")
        return WaveformKind::two_tone_lfm;
    if (name == "cw_pulse")
        return WaveformKind::cw_pulse;
    if (name == "lfm_up")
        return WaveformKind::lfm_up;
    if (name == "lfm_down")
        return WaveformKind::lfm_down;
    throw SignalError("unsupported waveform kind '" + std::string(name) + "'");
}

std::string_view to_string(WaveformKind kind)
{
    switch (kind)
    {
    case WaveformKind::two_tone_lfm:
        return "two_tone_lfm";
    case WaveformKind::cw_pulse:
        return "cw_pulse";
    case WaveformKind::lfm_up:
        return "lfm_up";
    case WaveformKind::lfm_down:
        return "lfm_down";
    }
    return "unknown";
}

std::size_t WaveformSpec::sample_count() const
{
    return static_cast<std::size_t>(std::llround(pulse_duration * sample_rate));
}

void WaveformSpec::validate() const
{
    if (!(sample_rate > 0.0) || !(pulse_duration > 0.0))
        throw SignalError("waveform needs positive sample rate and pulse duration");
    if (kind != WaveformKind::cw_pulse && !(bandwidth > 0.0))
        throw SignalError("waveform bandwidth must be positive");
    if (!(sample_rate > 2.0 * bandwidth))
        throw SignalError("sample rate must exceed twice the waveform bandwidth");
    if (sample_count() < 8)
        throw SignalError("pulse must span at least 8 samples");
}

std::size_t fft_size_for(std::size_t n)
{
    std::size_t m = 1;
    while (m < n)
        m <<= 1;
    return m;
}

ComplexVector fft_forward(const ComplexVector& x)
{
    ComplexVector out;
    fft_engine().fwd(out, x);
    return out;
}

ComplexVector fft_inverse(const ComplexVector& x)
{
    ComplexVector out;
    fft_engine().inv(out, x);
    return out;
}

double mean_power(const ComplexVector& x)
{
    if (x.size() == 0)
        return 0.0;
    return x.squaredNorm() / static_cast<double>(x.size());
}

SampledSignal synthesize(const WaveformSpec& spec)
{
    spec.validate();
    const std::size_t n = spec.sample_count();
    const double fs = spec.sample_rate;
    const double T = static_cast<double>(n) / fs;
    const double rate = spec.bandwidth / T; // Hz/s
    const double centre = 0.5 * static_cast<double>(n - 1);

    SampledSignal out;
    out.sample_rate = fs;
    out.start_time = 0.0;
    out.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k)
    {
        const double t = (static_cast<double>(k) - centre) / fs;
        Complex v;
        switch (spec.kind)
        {
        case WaveformKind::cw_pulse:
            v = 1.0;
            break;
        case WaveformKind::lfm_up:
            v = std::polar(1.0, kPi * rate * t * t);
            break;
        case WaveformKind::lfm_down:
            v = std::polar(1.0, -kPi * rate * t * t);
            break;
        case WaveformKind::two_tone_lfm:
            v = std::polar(1.0, kPi * rate * t * t) * std::cos(kPi * spec.bandwidth * t);
            break;
        }
        out.samples[static_cast<Eigen::Index>(k)] = v;
    }
    const double peak = out.samples.cwiseAbs().maxCoeff();
    if (peak > 0.0)
        out.samples /= peak;
    return out;
}

SampledSignal matched_filter(const SampledSignal& received, const SampledSignal& templ)
{
    if (received.sample_rate != templ.sample_rate)
        throw SignalError("matched filter: sample-rate mismatch");
    if (received.size() == 0 || templ.size() == 0)
        throw SignalError("matched filter: empty input");

    const std::size_t nr = received.size();
    const std::size_t nt = templ.size();
    const std::size_t m = fft_size_for(nr + nt - 1);

    ComplexVector r = ComplexVector::Zero(static_cast<Eigen::Index>(m));
    ComplexVector h = ComplexVector::Zero(static_cast<Eigen::Index>(m));
    r.head(static_cast<Eigen::Index>(nr)) = received.samples;
    h.head(static_cast<Eigen::Index>(nt)) = templ.samples;

    const ComplexVector prod = fft_forward(r).cwiseProduct(fft_forward(h).conjugate());
    const ComplexVector y = fft_inverse(prod);

    SampledSignal out;
    out.sample_rate = received.sample_rate;
    out.start_time = received.start_time;
    out.samples = y.head(static_cast<Eigen::Index>(nr));
    return out;
}

double qls_vertex(std::span<const double> window)
{
    const auto w = static_cast<Eigen::Index>(window.size());
    if (w < 3 || w % 2 == 0)
        throw SignalError("QLS window must be odd and at least 3");
    const Eigen::Index h = w / 2;

    Eigen::MatrixXd design(w, 3);
    Eigen::VectorXd y(w);
    for (Eigen::Index i = 0; i < w; ++i)
    {
        const double x = static_cast<double>(i - h);
        design(i, 0) = 1.0;
        design(i, 1) = x;
        design(i, 2) = x * x;
        y[i] = window[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
    if (!(coef[2] < 0.0))
        throw SignalError("QLS fit is not concave at the peak");
    return -coef[1] / (2.0 * coef[2]);
}

BiasTable::BiasTable(std::vector<double> raw_offsets, std::vector<double> residuals)
{
    if (raw_offsets.size() != residuals.size())
        throw SignalError("bias table: key/value size mismatch");
    std::vector<std::size_t> order(raw_offsets.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    for (auto& k : raw_offsets)
        k = wrap_half(k);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw_offsets[a] < raw_offsets[b]; });
    keys_.reserve(order.size());
    values_.reserve(order.size());
    for (auto i : order)
    {
        keys_.push_back(raw_offsets[i]);
        values_.push_back(residuals[i]);
    }
}

double BiasTable::correction(double raw_fraction) const
{
    if (keys_.empty())
        return 0.0;
    if (keys_.size() == 1)
        return values_.front();
    const double x = wrap_half(raw_fraction);

    // Periodic interpolation: the segment after the last key wraps to the first.
    const auto it = std::upper_bound(keys_.begin(), keys_.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - keys_.begin());
    double k_lo, k_hi, v_lo, v_hi;
    if (hi == 0)
    {
        k_lo = keys_.back() - 1.0;
        v_lo = values_.back();
        k_hi = keys_.front();
        v_hi = values_.front();
    }
    else if (hi == keys_.size())
    {
        k_lo = keys_.back();
        v_lo = values_.back();
        k_hi = keys_.front() + 1.0;
        v_hi = values_.front();
    }
    else
    {
        k_lo = keys_[hi - 1];
        v_lo = values_[hi - 1];
        k_hi = keys_[hi];
        v_hi = values_[hi];
    }
    const double span = k_hi - k_lo;
    if (span <= 0.0)
        return v_lo;
    const double a = (x - k_lo) / span;
    return v_lo + a * (v_hi - v_lo);
}

ToAEstimate refine_peak(const SampledSignal& mf_output, const BiasTable& table, const PeakOptions& opts)
{
    const auto n = static_cast<std::ptrdiff_t>(mf_output.size());
    const int w = opts.qls_window;
    if (w < 3 || w % 2 == 0)
        throw SignalError("QLS window must be odd and at least 3");
    const std::ptrdiff_t h = w / 2;

    const Eigen::VectorXd mag = mf_output.samples.cwiseAbs();
    Eigen::Index p_idx = 0;
    const double peak = mag.maxCoeff(&p_idx);
    const auto p = static_cast<std::ptrdiff_t>(p_idx);
    if (!(peak > 0.0))
        throw SignalError("matched-filter output has no peak");
    if (p < h || p > n - 1 - h)
        throw SignalError("matched-filter peak at window boundary");

    std::vector<double> window(static_cast<std::size_t>(w));
    for (std::ptrdiff_t i = -h; i <= h; ++i)
        window[static_cast<std::size_t>(i + h)] = mag[p + i];
    const double raw = qls_vertex(window);
    const double frac = raw - table.correction(raw);

    const std::ptrdiff_t excl = opts.floor_exclusion > 0 ? static_cast<std::ptrdiff_t>(opts.floor_exclusion) : h;
    double floor_sum = 0.0;
    std::size_t floor_count = 0;
    for (std::ptrdiff_t i = 0; i < n; ++i)
    {
        if (std::abs(i - p) <= excl)
            continue;
        floor_sum += mag[i] * mag[i];
        ++floor_count;
    }

    ToAEstimate est;
    est.peak_index = p;
    est.peak_magnitude = peak;
    est.peak_value = mf_output.samples[p];
    est.fractional = frac;
    est.toa = mf_output.time_of(static_cast<double>(p) + frac);
    const double floor_mean = floor_count > 0 ? floor_sum / static_cast<double>(floor_count) : 0.0;
    est.snr_estimate = floor_mean > 0.0 ? power_to_db(peak * peak / floor_mean) : kInf;
    return est;
}

ComplexVector fractional_delay(const ComplexVector& x, double delay_samples, std::size_t out_len)
{
    if (!std::isfinite(delay_samples) || delay_samples < 0.0)
        throw SignalError("fractional delay must be finite and non-negative");
    const double whole = std::floor(delay_samples);
    const double frac = delay_samples - whole;
    const auto shift = static_cast<Eigen::Index>(whole);
    const auto nx = x.size();
    const auto nout = static_cast<Eigen::Index>(out_len);

    ComplexVector out = ComplexVector::Zero(nout);
    if (frac == 0.0)
    {
        const Eigen::Index count = std::max<Eigen::Index>(0, std::min(nx, nout - shift));
        if (count > 0)
            out.segment(shift, count) = x.head(count);
        return out;
    }

    // Guard band keeps circular wrap of the interpolation tails out of the output.
    const std::size_t guard = 128;
    const auto m = static_cast<Eigen::Index>(
        fft_size_for(std::max<std::size_t>(out_len, static_cast<std::size_t>(shift + nx)) + 2 * guard));
    ComplexVector buf = ComplexVector::Zero(m);
    const Eigen::Index count = std::min(nx, m - shift);
    if (count > 0)
        buf.segment(shift, count) = x.head(count);

    ComplexVector spec = fft_forward(buf);
    for (Eigen::Index k = 0; k < m; ++k)
    {
        const double kk = k < m / 2 ? static_cast<double>(k) : static_cast<double>(k - m);
        spec[k] *= std::polar(1.0, -kTwoPi * frac * kk / static_cast<double>(m));
    }
    const ComplexVector y = fft_inverse(spec);
    out = y.head(nout);
    return out;
}

BiasTable build_bias_table(const WaveformSpec& spec, std::size_t n_points, const BiasTrainingOptions& opts)
{
    if (n_points < 16)
        throw SignalError("bias table needs at least 16 points");
    const SampledSignal templ = synthesize(spec);
    const std::size_t nt = templ.size();
    const std::size_t lead = 32;
    const std::size_t len = nt + 2 * lead;
    const double signal_power = mean_power(templ.samples);
    const bool noisy = std::isfinite(opts.snr_db);
    const double noise_sigma = noisy ? std::sqrt(signal_power / db_to_power(opts.snr_db) / 2.0) : 0.0;
    const std::size_t averages = noisy ? std::max<std::size_t>(1, opts.averages) : 1;

    RandomStream rng(opts.seed);
    PeakOptions peak_opts;
    peak_opts.qls_window = opts.qls_window;
    const BiasTable identity;

    std::vector<double> keys(n_points);
    std::vector<double> residuals(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
    {
        const double truth = static_cast<double>(i) / static_cast<double>(n_points);
        const ComplexVector clean = fractional_delay(templ.samples, static_cast<double>(lead) + truth, len);
        double sum = 0.0;
        for (std::size_t a = 0; a < averages; ++a)
        {
            SampledSignal rx{clean, spec.sample_rate, 0.0};
            if (noisy)
                for (Eigen::Index k = 0; k < rx.samples.size(); ++k)
                    rx.samples[k] += Complex(rng.normal(noise_sigma), rng.normal(noise_sigma));
            const ToAEstimate est = refine_peak(matched_filter(rx, templ), identity, peak_opts);
            const double estimate = static_cast<double>(est.peak_index) + est.fractional - static_cast<double>(lead);
            sum += estimate - truth;
        }
        residuals[i] = sum / static_cast<double>(averages);
        keys[i] = truth + residuals[i];
    }
    return BiasTable(std::move(keys), std::move(residuals));
}

} // namespace cda
