#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "exo/rng.hpp"
#include "exo/signal.hpp"
#include "oracles.hpp"

using namespace exo;
using namespace exo::signal;

namespace {

constexpr double kFs = 2150.0;

EmgTrace sine(double f, double seconds, double amp = 1.0)
{
    EmgTrace t;
    t.rate_hz = kFs;
    const auto n = static_cast<std::size_t>(seconds * kFs);
    for (std::size_t i = 0; i < n; ++i) t.samples.push_back(amp * std::sin(2 * std::numbers::pi * f * i / kFs));
    return t;
}

double steady_amplitude(const std::vector<double>& y)
{
    // Middle half avoids edge transients.
    double m = 0.0;
    for (std::size_t i = y.size() / 4; i < 3 * y.size() / 4; ++i) m = std::max(m, std::fabs(y[i]));
    return m;
}

std::vector<double> impulse_response(std::size_t n = 8192)
{
    EmgTrace t;
    t.rate_hz = kFs;
    t.samples.assign(n, 0.0);
    t.samples[n / 2] = 1.0;
    return bandpass_filter(t).samples;
}

} // namespace

TEST(Bandpass, ConstantTraceIsRemoved)
{
    EmgTrace t;
    t.rate_hz = kFs;
    t.samples.assign(4300, 1.0);
    const auto y = bandpass_filter(t).samples;
    for (std::size_t i = 500; i + 500 < y.size(); ++i) ASSERT_LT(std::fabs(y[i]), 1e-3) << i;
}

TEST(Bandpass, PassbandSineKeepsAmplitude)
{
    const double a = steady_amplitude(bandpass_filter(sine(100, 2.0)).samples);
    EXPECT_GE(a, 0.95);
    EXPECT_LE(a, 1.05);
}

TEST(Bandpass, LowFrequencySineIsAttenuated)
{
    EXPECT_LE(steady_amplitude(bandpass_filter(sine(5, 4.0)).samples), 0.1);
}

TEST(Bandpass, ImpulseResponseMatchesAnalyticMagnitude)
{
    const auto h = impulse_response();
    for (double f : {2.0, 10.0, 20.0, 35.0, 60.0, 100.0, 250.0, 400.0, 450.0, 600.0, 1000.0}) {
        const double got = oracle::dft_magnitude(h, f, kFs);
        const double want = oracle::butterworth_filtfilt_magnitude(f, kFs, 20.0, 450.0, 4);
        EXPECT_NEAR(got, want, 1e-6 + 1e-4 * want) << f << " Hz";
    }
}

TEST(Bandpass, EdgesSitAtMinusThreeDecibels)
{
    const auto h = impulse_response();
    EXPECT_NEAR(oracle::db(oracle::dft_magnitude(h, 20.0, kFs)), -3.0103, 0.05);
    EXPECT_NEAR(oracle::db(oracle::dft_magnitude(h, 450.0, kFs)), -3.0103, 0.05);
}

TEST(Bandpass, ZeroPhaseKeepsSymmetricPulseSymmetric)
{
    EmgTrace t;
    t.rate_hz = kFs;
    const std::size_t n = 4001, c = 2000;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (static_cast<double>(i) - c) / 3.0;
        t.samples.push_back(std::exp(-0.5 * x * x));
    }
    const auto y = bandpass_filter(t).samples;
    const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    EXPECT_LE(peak > c ? peak - c : c - peak, 1u);
    for (std::size_t k = 1; k < 200; ++k) EXPECT_NEAR(y[c - k], y[c + k], 1e-9) << k;
}

TEST(Bandpass, RejectsBadCutoffsAndShortTraces)
{
    auto t = sine(100, 1.0);
    EXPECT_THROW(bandpass_filter(t, 0.0, 450.0), Error);
    EXPECT_THROW(bandpass_filter(t, 500.0, 450.0), Error);
    EXPECT_THROW(bandpass_filter(t, 20.0, 1075.0), Error);
    try {
        bandpass_filter(t, 20.0, 1075.0);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
    }
    t.samples.resize(10);
    try {
        bandpass_filter(t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Rms, WindowLength) { EXPECT_EQ(rms_window_samples(200, 2150), 430u); }

TEST(Rms, ZeroTraceGivesZeroEnvelope)
{
    EmgTrace t;
    t.rate_hz = kFs;
    t.samples.assign(1000, 0.0);
    for (double v : rectify_rms(t, 200).values) EXPECT_EQ(v, 0.0);
}

TEST(Rms, SineEnvelopeIsAmplitudeOverRootTwo)
{
    const auto env = rectify_rms(sine(50, 2.0), 200);
    for (std::size_t i = 430; i < env.values.size(); i += 97) EXPECT_NEAR(env.values[i], std::sqrt(0.5), 0.01);
}

TEST(Rms, TrailingWindowMatchesDirectSum)
{
    Rng rng(3);
    EmgTrace t;
    t.rate_hz = 1000;
    for (int i = 0; i < 300; ++i) t.samples.push_back(rng.normal());
    const auto env = rectify_rms(t, 20); // 20 samples
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        const std::size_t lo = i >= 19 ? i - 19 : 0;
        double s = 0;
        for (std::size_t k = lo; k <= i; ++k) s += t.samples[k] * t.samples[k];
        EXPECT_NEAR(env.values[i], std::sqrt(s / static_cast<double>(i - lo + 1)), 1e-12);
    }
}

TEST(Rms, SignFlipInvariant)
{
    Rng rng(11);
    EmgTrace t;
    t.rate_hz = kFs;
    for (int i = 0; i < 2000; ++i) t.samples.push_back(rng.normal());
    EmgTrace neg = t;
    for (double& v : neg.samples) v = -v;
    EXPECT_EQ(rectify_rms(t, 200).values, rectify_rms(neg, 200).values);
}

TEST(Rms, EmptyTraceIsInsufficientData)
{
    EmgTrace t;
    try {
        rectify_rms(t, 200);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Mvc, Normalization)
{
    Envelope e{{0.5}, kFs, 200, 0, false};
    EXPECT_DOUBLE_EQ(normalize_mvc(e, 1.0).values[0], 50.0);
    EXPECT_FALSE(normalize_mvc(e, 1.0).exceeds_mvc);

    Envelope z{{0, 0, 0}, kFs, 200, 0, false};
    for (double v : normalize_mvc(z, 2.0).values) EXPECT_EQ(v, 0.0);

    Envelope big{{2.0}, kFs, 200, 0, false};
    const auto n = normalize_mvc(big, 1.0);
    EXPECT_DOUBLE_EQ(n.values[0], 200.0);
    EXPECT_TRUE(n.exceeds_mvc);

    EXPECT_THROW(normalize_mvc(e, 0.0), Error);
    EXPECT_THROW(normalize_mvc(e, -1.0), Error);
}

TEST(ActivityStats, WholeTrace)
{
    Envelope e{{1, 2, 3}, 1.0, 200, 0, false};
    const auto s = activity_stats(e);
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_DOUBLE_EQ(s.peak, 3.0);
}

TEST(ActivityStats, ConstantOverAnySpan)
{
    Envelope e{std::vector<double>(1000, 7.25), 100.0, 200, 0, false};
    const std::vector<LiftCycleSpan> spans{{1.0, 2.5}, {3.3, 4.0}};
    for (auto mode : {SpanReduction::Concatenate, SpanReduction::PerCycle}) {
        const auto s = activity_stats(e, spans, mode);
        EXPECT_DOUBLE_EQ(s.mean, 7.25);
        EXPECT_DOUBLE_EQ(s.peak, 7.25);
    }
}

TEST(ActivityStats, TilingSpansEqualWholeTrace)
{
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 200 + rng.index(800);
        Envelope e{{}, 100.0, 200, rng.uniform(0, 3), false};
        for (std::size_t i = 0; i < n; ++i) e.values.push_back(rng.uniform(0, 100));
        // Random cut points on the sample grid.
        std::vector<double> cuts{e.start_s, e.start_s + n / 100.0};
        for (int k = 0; k < 4; ++k) cuts.push_back(e.start_s + static_cast<double>(1 + rng.index(n - 1)) / 100.0);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::vector<LiftCycleSpan> spans;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) spans.push_back({cuts[k], cuts[k + 1]});
        const auto whole = activity_stats(e);
        const auto tiled = activity_stats(e, spans);
        EXPECT_NEAR(tiled.mean, whole.mean, 1e-12);
        EXPECT_EQ(tiled.peak, whole.peak);
    }
}

TEST(ActivityStats, SpanOutsideTraceIsRangeError)
{
    Envelope e{std::vector<double>(100, 1.0), 100.0, 200, 0, false};
    const std::vector<LiftCycleSpan> spans{{0.5, 1.5}};
    try {
        activity_stats(e, spans);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::Range);
    }
}

TEST(ActivityStats, PerCycleAveragesCycleStats)
{
    Envelope e{{1, 1, 5, 2, 2, 2}, 1.0, 200, 0, false};
    const std::vector<LiftCycleSpan> spans{{0, 3}, {3, 6}};
    const auto s = activity_stats(e, spans, SpanReduction::PerCycle);
    EXPECT_DOUBLE_EQ(s.mean, (7.0 / 3 + 2.0) / 2);
    EXPECT_DOUBLE_EQ(s.peak, 3.5);
}

TEST(Metronome, SpansAtThirtyFiveBpm)
{
    const auto s = metronome_spans(2.0);
    ASSERT_EQ(s.size(), 7u);
    EXPECT_DOUBLE_EQ(s[0].start_s, 2.0);
    EXPECT_NEAR(s[6].end_s - s[0].start_s, 7 * 60.0 / 35.0, 1e-12);
}

TEST(Reduction, Examples)
{
    EXPECT_DOUBLE_EQ(reduction_percent(100, 80), 20.0);
    EXPECT_DOUBLE_EQ(reduction_percent(100, 100), 0.0);
    EXPECT_DOUBLE_EQ(reduction_percent(100, 115), -15.0);
    EXPECT_THROW(reduction_percent(0, 1), Error);
    EXPECT_THROW(reduction_percent(-3, 1), Error);
}

TEST(Reduction, IdentityAndAntitone)
{
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(1e-3, 1e3);
        EXPECT_EQ(reduction_percent(x, x), 0.0);
        const double e1 = rng.uniform(0, 2 * x), e2 = rng.uniform(0, 2 * x);
        if (e1 < e2) {
            EXPECT_GE(reduction_percent(x, e1), reduction_percent(x, e2));
        }
    }
}

TEST(Groups, Aggregates)
{
    const std::map<std::string, double> back{{"ESI-L", 10}, {"ESI-R", 10}, {"ESL-L", 10}, {"ESL-R", 10}};
    EXPECT_DOUBLE_EQ(group_aggregate(back, MuscleGroup::Back), 10.0);

    auto all = back;
    all["BF"] = 0;
    all["RF"] = 0;
    EXPECT_NEAR(group_aggregate(all, MuscleGroup::All), 6.667, 5e-4);
    EXPECT_DOUBLE_EQ(group_aggregate(all, MuscleGroup::Legs), 0.0);

    EXPECT_DOUBLE_EQ(group_aggregate({{"RF", 4.5}}, MuscleGroup::Legs), 4.5);
    EXPECT_DOUBLE_EQ(group_aggregate({{"BF-R", -2.0}}, MuscleGroup::All), -2.0);
}

TEST(Groups, UnknownLabelIsSchemaError)
{
    try {
        group_aggregate({{"ESI-L", 1}, {"DELT", 2}}, MuscleGroup::All);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Schema);
    }
    EXPECT_THROW(group_aggregate({{"ESI-L", 1}}, MuscleGroup::Legs), Error);
}
