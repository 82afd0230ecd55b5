#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "exo/rng.hpp"
#include "exo/selection.hpp"
#include "oracles.hpp"

using namespace exo;
using namespace exo::selection;

namespace {

Detection det(double theta, double d, BBox b = {10, 10, 40, 30}) { return {b, theta, d, "box"}; }

std::vector<Detection> random_set(Rng& rng, std::size_t n)
{
    std::vector<Detection> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(det(rng.uniform(-35, 35), rng.uniform(0, 6)));
    return v;
}

} // namespace

TEST(Scores, SingleDetectionIsCertain)
{
    const std::vector<Detection> d{det(12, 3)};
    const auto s = pickup_scores(d);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s[0].probability, 1.0);
}

TEST(Scores, SymmetricPairSplitsEvenly)
{
    const std::vector<Detection> d{det(5, 1), det(-5, 1)};
    const auto s = pickup_scores(d);
    EXPECT_DOUBLE_EQ(s[0].probability, 0.5);
    EXPECT_DOUBLE_EQ(s[1].probability, 0.5);
}

TEST(Scores, CenteredVersusTwentyDegrees)
{
    const std::vector<Detection> d{det(0, 1), det(20, 1)};
    const auto s = pickup_scores(d);
    EXPECT_NEAR(s[0].alpha, 6.0653, 1e-4);
    EXPECT_NEAR(s[1].alpha, 0.8208, 1e-4);
    EXPECT_NEAR(s[0].probability, 0.99475, 1e-4);
}

TEST(Scores, EmptySetHasNoCandidates)
{
    EXPECT_TRUE(pickup_scores(std::vector<Detection>{}).empty());
    EXPECT_FALSE(best_candidate({}, {}).has_value());
}

TEST(Scores, InvalidDetectionRejected)
{
    EXPECT_THROW(pickup_scores(std::vector<Detection>{det(0, -1)}), Error);
    EXPECT_THROW(pickup_scores(std::vector<Detection>{det(0, 1, {0, 0, 0, 5})}), Error);
}

TEST(Scores, RadiansOptionConvertsTheAngle)
{
    ScoringParams p;
    p.angle_unit = AngleUnit::Radians;
    EXPECT_NEAR(pickup_factor(det(180, 0), p), 10 * std::exp(-0.1 * std::numbers::pi), 1e-12);
}

TEST(Softmax, MatchesLongDoubleOracle)
{
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> z;
        for (std::size_t k = 0, n = 1 + rng.index(20); k < n; ++k) z.push_back(rng.uniform(-20, 20));
        const auto got = softmax(z);
        const auto want = oracle::softmax_ld(z);
        for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-14);
    }
}

TEST(Softmax, SurvivesLargeLogits)
{
    const std::vector<double> z{1000, 1000, 999};
    const auto p = softmax(z);
    EXPECT_NEAR(p[0], p[1], 1e-15);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
}

TEST(Softmax, NormalizedAndShiftInvariantProperty)
{
    Rng rng(11);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.index(100);
        std::vector<double> z(n);
        for (double& v : z) v = rng.uniform(0, 10);
        const auto p = softmax(z);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
        const double c = rng.uniform(-50, 50);
        std::vector<double> zc = z;
        for (double& v : zc) v += c;
        const auto pc = softmax(zc);
        for (std::size_t k = 0; k < n; ++k) ASSERT_NEAR(p[k], pc[k], 1e-12);
    }
}

TEST(Scores, AlphaDecreasesInAngleAndDistance)
{
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double t = rng.uniform(0, 35), d = rng.uniform(0, 5), dt = rng.uniform(0.01, 5);
        EXPECT_GT(pickup_factor(det(t, d)), pickup_factor(det(t + dt, d)));
        EXPECT_GT(pickup_factor(det(-t, d)), pickup_factor(det(-t - dt, d)));
        EXPECT_GT(pickup_factor(det(t, d)), pickup_factor(det(t, d + dt)));
    }
}

TEST(Scores, CenteredObjectWinsAtFixedDistance)
{
    Rng rng(9);
    for (int trial = 0; trial < 2000; ++trial) {
        auto d = random_set(rng, 2 + rng.index(8));
        const double dist = rng.uniform(0, 5);
        for (auto& x : d) x.distance_m = dist;
        std::size_t centered = 0;
        for (std::size_t i = 1; i < d.size(); ++i)
            if (std::fabs(d[i].theta_deg) < std::fabs(d[centered].theta_deg)) centered = i;
        EXPECT_EQ(best_candidate(pickup_scores(d), d), centered);
    }
}

TEST(Scores, ScaleDoesNotMoveTheArgmax)
{
    Rng rng(10);
    ScoringParams unit;
    unit.scale = 1.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto d = random_set(rng, 1 + rng.index(10));
        ASSERT_EQ(best_candidate(pickup_scores(d), d), best_candidate(pickup_scores(d, unit), d));
    }
}

TEST(Lock, InsideThreshold)
{
    const std::vector<Detection> d{det(0, 1.5)};
    const auto lk = select_candidate(pickup_scores(d), d, 4.2);
    ASSERT_TRUE(lk.has_value());
    EXPECT_EQ(lk->index, 0u);
    EXPECT_EQ(lk->lock_time_s, 4.2);
    EXPECT_EQ(lk->crop.w, 40);
}

TEST(Lock, FarBestCandidateBlocksCloserRunnerUp)
{
    // Centered at 3 m outscores 30 degrees off at 1 m.
    const std::vector<Detection> d{det(0, 3.0), det(30, 1.0)};
    const auto s = pickup_scores(d);
    ASSERT_GT(s[0].probability, s[1].probability);
    EXPECT_FALSE(select_candidate(s, d, 0.0).has_value());
}

TEST(Lock, BoundaryIsInclusive)
{
    const std::vector<Detection> d{det(0, 2.0)};
    EXPECT_TRUE(select_candidate(pickup_scores(d), d, 0.0).has_value());
    const std::vector<Detection> e{det(0, std::nextafter(2.0, 3.0))};
    EXPECT_FALSE(select_candidate(pickup_scores(e), e, 0.0).has_value());
}

TEST(Lock, TieBreakingChain)
{
    // Equal probabilities via hand-built scores.
    const std::vector<Detection> d{det(5, 1.0), det(-3, 1.0), det(3, 1.0), det(0, 0.8)};
    std::vector<CandidateScore> s{{0, 1, 0.25}, {1, 1, 0.25}, {2, 1, 0.25}, {3, 1, 0.25}};
    EXPECT_EQ(best_candidate(s, d), 3u); // smaller distance
    s.pop_back();
    const std::vector<Detection> d3(d.begin(), d.begin() + 3);
    EXPECT_EQ(best_candidate(s, d3), 1u); // smaller |theta|, then lower index
}

TEST(Lock, MisalignedInputsAreShapeErrors)
{
    const std::vector<Detection> d{det(0, 1)};
    EXPECT_THROW(best_candidate(std::vector<CandidateScore>{}, d), Error);
}

TEST(Crop, InsideUnchanged)
{
    const auto c = crop_region({640, 480}, {10, 20, 100, 50});
    EXPECT_EQ(c.x, 10);
    EXPECT_EQ(c.y, 20);
    EXPECT_EQ(c.w, 100);
    EXPECT_EQ(c.h, 50);
}

TEST(Crop, RightEdgeClamped)
{
    const auto c = crop_region({640, 480}, {550, 20, 100, 50});
    EXPECT_EQ(c.w, 90);
    EXPECT_EQ(c.x, 550);
}

TEST(Crop, OutsideIsInvalidCrop)
{
    try {
        crop_region({640, 480}, {700, 20, 100, 50});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidCrop);
    }
    EXPECT_THROW(crop_region({0, 480}, {0, 0, 1, 1}), Error);
}

TEST(Distance, MedianIgnoresInvalidPixels)
{
    DistanceMap m{4, 2, {1, 2, 3, 100, 0, -1, std::nan(""), 4}};
    EXPECT_DOUBLE_EQ(*median_distance(m, {0, 0, 3, 2}), 2.0);
    EXPECT_DOUBLE_EQ(*median_distance(m, {0, 0, 4, 2}), 3.0);
    EXPECT_FALSE(median_distance(m, {1, 1, 2, 1}).has_value());
}
