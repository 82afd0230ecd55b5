#pragma once

// EMG processing chain: band-pass, rectification + sliding RMS, MVC
// normalization, activity statistics over lift cycles and the
// reduction percentages that feed the EMG performance surface.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exo/error.hpp"

namespace exo::signal {

enum class Side { Left, Right, None };

struct EmgTrace {
    std::vector<double> samples;
    double rate_hz = 2150.0;
    std::string muscle_id;
    Side side = Side::None;
    double start_s = 0.0;
};

struct Envelope {
    std::vector<double> values;
    double rate_hz = 2150.0;
    double window_ms = 200.0;
    double start_s = 0.0;
    /// Set by normalize_mvc when any value exceeds 100 %MVC.
    bool exceeds_mvc = false;

    double duration_s() const { return static_cast<double>(values.size()) / rate_hz; }
    double time_of(std::size_t i) const { return start_s + static_cast<double>(i) / rate_hz; }
};

struct LiftCycleSpan {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct ActivityStats {
    double mean = 0.0;
    double peak = 0.0;
};

/// How statistics over several lift cycles are reduced.
enum class SpanReduction {
    Concatenate, ///< one mean/peak over the union of cycle samples
    PerCycle,    ///< mean/peak per cycle, then averaged across cycles
};

// ---------------------------------------------------------------------------
// Butterworth band-pass

/// Transposed direct-form II biquad, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

struct BandpassDesign {
    std::vector<Biquad> sections;
    double low_hz = 20.0;
    double high_hz = 450.0;
    double rate_hz = 2150.0;
    int order = 4;
};

namespace detail {

// Damping of the k-th conjugate pole pair of an order-n Butterworth prototype.
inline double butterworth_damping(int order, int pair)
{
    return std::sin(std::numbers::pi * (2.0 * pair + 1.0) / (2.0 * order));
}

// Pre-warped cutoff shift so that two passes (forward + backward) land
// at -3 dB on the nominal cutoff instead of -6 dB.
inline double two_pass_correction(int order)
{
    return std::pow(std::numbers::sqrt2 - 1.0, 1.0 / (2.0 * order));
}

} // namespace detail

/// Order-`order` high-pass at `low_hz` cascaded with an order-`order`
/// low-pass at `high_hz`, designed for zero-phase forward-backward use:
/// the combined two-pass response is -3 dB at both nominal edges.
inline BandpassDesign design_bandpass(double rate_hz, double low_hz, double high_hz, int order = 4)
{
    require(rate_hz > 0.0, ErrorKind::InvalidParameter, "sampling rate must be positive");
    require(order >= 2 && order % 2 == 0, ErrorKind::InvalidParameter,
            "filter order must be even and >= 2");
    require(low_hz > 0.0 && low_hz < high_hz && high_hz < rate_hz / 2.0,
            ErrorKind::InvalidParameter,
            "cutoffs must satisfy 0 < low < high < rate/2");

    const double corr = detail::two_pass_correction(order);
    const double k_low = std::tan(std::numbers::pi * low_hz / rate_hz) * corr;
    const double k_high = std::tan(std::numbers::pi * high_hz / rate_hz) / corr;
    require(k_high < 1e6, ErrorKind::InvalidParameter, "high cutoff too close to Nyquist");

    BandpassDesign d{{}, low_hz, high_hz, rate_hz, order};
    for (int pair = 0; pair < order / 2; ++pair) {
        const double zeta = detail::butterworth_damping(order, pair);
        {
            const double k = k_low;
            const double norm = 1.0 / (1.0 + 2.0 * zeta * k + k * k);
            d.sections.push_back({norm, -2.0 * norm, norm, 2.0 * (k * k - 1.0) * norm,
                                  (1.0 - 2.0 * zeta * k + k * k) * norm});
        }
        {
            const double k = k_high;
            const double norm = 1.0 / (1.0 + 2.0 * zeta * k + k * k);
            const double b0 = k * k * norm;
            d.sections.push_back({b0, 2.0 * b0, b0, 2.0 * (k * k - 1.0) * norm,
                                  (1.0 - 2.0 * zeta * k + k * k) * norm});
        }
    }
    return d;
}

/// Edge padding used by forward-backward filtering; traces must be longer.
inline std::size_t warmup_length(const BandpassDesign& d)
{
    return 3 * (2 * d.sections.size() + 1);
}

namespace detail {

// Single causal pass through the cascade. The state starts at the
// steady state for a constant input equal to the first sample.
inline void cascade_pass(const std::vector<Biquad>& sections, std::vector<double>& x)
{
    if (x.empty()) return;
    double level = x.front();
    for (const Biquad& s : sections) {
        const double y_ss = s.dc_gain() * level;
        double z2 = s.b2 * level - s.a2 * y_ss;
        double z1 = s.b1 * level - s.a1 * y_ss + z2;
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        level = y_ss;
    }
}

} // namespace detail

/// Zero-phase filtering of a raw series with odd-extension edge padding.
inline std::vector<double> filtfilt(const BandpassDesign& d, std::span<const double> x)
{
    const std::size_t pad = warmup_length(d);
    require(x.size() > pad, ErrorKind::InsufficientData,
            "trace has " + std::to_string(x.size()) + " samples, filter needs more than " +
                std::to_string(pad));

    std::vector<double> ext;
    ext.reserve(x.size() + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    const std::size_t n = x.size();
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

    detail::cascade_pass(d.sections, ext);
    std::reverse(ext.begin(), ext.end());
    detail::cascade_pass(d.sections, ext);
    std::reverse(ext.begin(), ext.end());

    return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline EmgTrace bandpass_filter(const EmgTrace& trace, double low_hz = 20.0, double high_hz = 450.0,
                                int order = 4)
{
    require(trace.rate_hz > 0.0, ErrorKind::InvalidParameter, "sampling rate must be positive");
    require(!trace.samples.empty(), ErrorKind::InsufficientData, "empty trace");
    const BandpassDesign d = design_bandpass(trace.rate_hz, low_hz, high_hz, order);
    EmgTrace out = trace;
    out.samples = filtfilt(d, trace.samples);
    return out;
}

// ---------------------------------------------------------------------------
// Envelope

inline std::size_t rms_window_samples(double window_ms, double rate_hz)
{
    return static_cast<std::size_t>(std::llround(window_ms / 1000.0 * rate_hz));
}

/// Full-wave rectification followed by a trailing-window RMS. The first
/// window-1 samples use the shorter window that is available.
inline Envelope rectify_rms(const EmgTrace& trace, double window_ms = 200.0)
{
    require(!trace.samples.empty(), ErrorKind::InsufficientData, "empty trace");
    require(window_ms > 0.0, ErrorKind::InvalidParameter, "RMS window must be positive");
    const std::size_t w = rms_window_samples(window_ms, trace.rate_hz);
    require(w >= 1, ErrorKind::InvalidParameter, "RMS window shorter than one sample");

    const std::size_t n = trace.samples.size();
    std::vector<long double> prefix(n + 1, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        const long double r = std::fabs(trace.samples[i]);
        prefix[i + 1] = prefix[i] + r * r;
    }

    Envelope env{std::vector<double>(n), trace.rate_hz, window_ms, trace.start_s, false};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i + 1 >= w ? i + 1 - w : 0;
        const long double sum = std::max(prefix[i + 1] - prefix[lo], 0.0L);
        env.values[i] = static_cast<double>(std::sqrt(sum / static_cast<long double>(i + 1 - lo)));
    }
    return env;
}

/// MVC reference: peak of the envelope of the MVC recording.
inline double mvc_peak(const Envelope& mvc_env)
{
    require(!mvc_env.values.empty(), ErrorKind::InsufficientData, "empty MVC envelope");
    return *std::max_element(mvc_env.values.begin(), mvc_env.values.end());
}

inline Envelope normalize_mvc(const Envelope& env, double mvc_peak_value)
{
    require(mvc_peak_value > 0.0 && std::isfinite(mvc_peak_value), ErrorKind::InvalidParameter,
            "MVC peak must be positive");
    Envelope out = env;
    out.exceeds_mvc = false;
    for (double& v : out.values) {
        v = 100.0 * v / mvc_peak_value;
        if (v > 100.0) out.exceeds_mvc = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistics

namespace detail {

inline std::pair<std::size_t, std::size_t> span_indices(const Envelope& env, const LiftCycleSpan& span)
{
    constexpr double eps = 1e-9;
    require(span.end_s > span.start_s, ErrorKind::Range, "lift span must have end > start");
    const double t_end = env.start_s + env.duration_s();
    require(span.start_s >= env.start_s - eps && span.end_s <= t_end + eps, ErrorKind::Range,
            "lift span [" + std::to_string(span.start_s) + ", " + std::to_string(span.end_s) +
                ") lies outside the trace");
    auto index = [&](double t) {
        const double x = std::ceil((t - env.start_s) * env.rate_hz - eps);
        return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(env.values.size())));
    };
    return {index(span.start_s), index(span.end_s)};
}

inline ActivityStats stats_of(std::span<const double> v)
{
    require(!v.empty(), ErrorKind::InsufficientData, "no samples selected");
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    return {sum / static_cast<double>(v.size()), *std::max_element(v.begin(), v.end())};
}

} // namespace detail

/// Mean and peak over the whole envelope.
inline ActivityStats activity_stats(const Envelope& env)
{
    return detail::stats_of(env.values);
}

/// Mean and peak over lift-cycle spans (half-open, seconds).
inline ActivityStats activity_stats(const Envelope& env, std::span<const LiftCycleSpan> spans,
                                    SpanReduction mode = SpanReduction::Concatenate)
{
    if (spans.empty()) return activity_stats(env);

    if (mode == SpanReduction::PerCycle) {
        ActivityStats acc;
        for (const auto& s : spans) {
            const auto [lo, hi] = detail::span_indices(env, s);
            const auto st = detail::stats_of(std::span(env.values).subspan(lo, hi - lo));
            acc.mean += st.mean;
            acc.peak += st.peak;
        }
        acc.mean /= static_cast<double>(spans.size());
        acc.peak /= static_cast<double>(spans.size());
        return acc;
    }

    std::vector<double> selected;
    for (const auto& s : spans) {
        const auto [lo, hi] = detail::span_indices(env, s);
        selected.insert(selected.end(), env.values.begin() + static_cast<std::ptrdiff_t>(lo),
                        env.values.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return detail::stats_of(selected);
}

/// Metronome-paced spans: `cycles` consecutive cycles of 60/bpm seconds.
inline std::vector<LiftCycleSpan> metronome_spans(double start_s, double bpm = 35.0, int cycles = 7)
{
    require(bpm > 0.0 && cycles > 0, ErrorKind::InvalidParameter, "bpm and cycles must be positive");
    const double period = 60.0 / bpm;
    std::vector<LiftCycleSpan> spans;
    for (int i = 0; i < cycles; ++i)
        spans.push_back({start_s + i * period, start_s + (i + 1) * period});
    return spans;
}

/// Percentage reduction of activity with the exoskeleton relative to
/// the no-exoskeleton condition; negative when the exoskeleton is worse.
inline double reduction_percent(double noexo, double exo)
{
    require(noexo > 0.0, ErrorKind::InvalidParameter, "no-exo reference must be positive");
    return 100.0 * (noexo - exo) / noexo;
}

// ---------------------------------------------------------------------------
// Muscle groups

enum class MuscleGroup { Back, Legs, All };

inline std::optional<MuscleGroup> muscle_group_of(std::string_view id)
{
    static constexpr std::array<std::string_view, 4> back{"ESI-L", "ESI-R", "ESL-L", "ESL-R"};
    static constexpr std::array<std::string_view, 6> legs{"BF", "RF", "BF-L", "BF-R", "RF-L", "RF-R"};
    if (std::find(back.begin(), back.end(), id) != back.end()) return MuscleGroup::Back;
    if (std::find(legs.begin(), legs.end(), id) != legs.end()) return MuscleGroup::Legs;
    return std::nullopt;
}

inline std::optional<MuscleGroup> parse_group(std::string_view s)
{
    if (s == "back") return MuscleGroup::Back;
    if (s == "legs") return MuscleGroup::Legs;
    if (s == "all") return MuscleGroup::All;
    return std::nullopt;
}

/// Unweighted mean of the member muscles' reduction percentages.
inline double group_aggregate(const std::map<std::string, double>& per_muscle, MuscleGroup group)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [id, value] : per_muscle) {
        const auto g = muscle_group_of(id);
        require(g.has_value(), ErrorKind::Schema, "unknown muscle label '" + id + "'");
        if (group == MuscleGroup::All || *g == group) {
            sum += value;
            ++n;
        }
    }
    require(n > 0, ErrorKind::InsufficientData, "muscle group has no members");
    return sum / static_cast<double>(n);
}

} // namespace exo::signal
