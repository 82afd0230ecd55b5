#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include "exo/payload.hpp"
#include "exo/payload_http.hpp"
#include "exo/rng.hpp"

using namespace exo;
using namespace exo::payload;

namespace {

ClassificationRecord rec(PayloadClass truth, PayloadClass pred, double t = 1.0, double onset = 2.0,
                         std::string subject = "")
{
    return {t, pred, truth, onset, std::move(subject)};
}

/// Records whose confusion columns are given exactly: col[c][t] = count.
std::vector<ClassificationRecord> from_matrix(const ConfusionMatrix& m)
{
    std::vector<ClassificationRecord> out;
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t p = 0; p < 3; ++p)
            for (int k = 0; k < m[t][p]; ++k) out.push_back(rec(kAllClasses[t], kAllClasses[p]));
    return out;
}

} // namespace

TEST(Classify, RecordedTripleArgmax)
{
    RecordedBackend b({{0.5, {0.1, 0.2, 0.7}, PayloadClass::Heavy}});
    const auto c = classify(b, {}, {});
    EXPECT_EQ(c.label, PayloadClass::Heavy);
    EXPECT_EQ(b.remaining(), 0u);
    try {
        classify(b, {}, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Backend);
    }
}

TEST(Classify, TiesGoToTheHeavierClass)
{
    EXPECT_EQ(argmax_class({0.4, 0.4, 0.2}), PayloadClass::Medium);
    EXPECT_EQ(argmax_class({0.25, 0.25, 0.5}), PayloadClass::Heavy);
    EXPECT_EQ(argmax_class({0.5, 0.0, 0.5}), PayloadClass::Heavy);
    EXPECT_EQ(argmax_class({1.0 / 3, 1.0 / 3, 1.0 / 3}), PayloadClass::Heavy);
}

TEST(Classify, OracleIsAlwaysRight)
{
    OracleBackend b;
    EXPECT_THROW(classify(b, {}, {}), BackendError);
    for (auto c : kAllClasses) {
        b.set_truth(c);
        EXPECT_EQ(classify(b, {}, {}).label, c);
    }
}

TEST(Classify, InvalidDistributionIsBackendError)
{
    RecordedBackend b({{0, {0.5, 0.6, 0.0}, {}}, {0, {-0.1, 0.6, 0.5}, {}}});
    EXPECT_THROW(classify(b, {}, {}), BackendError);
    EXPECT_THROW(classify(b, {}, {}), BackendError);
}

TEST(Evaluate, AllCorrectAllTimely)
{
    std::vector<ClassificationRecord> r;
    for (auto c : kAllClasses) r.push_back(rec(c, c));
    const auto m = evaluate(r);
    EXPECT_EQ(m.accuracy, 1.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m.confusion[i][j], i == j ? 1 : 0);
    EXPECT_FALSE(m.precision_undefined);
}

TEST(Evaluate, ReproducesConstructedPrecisions)
{
    const ConfusionMatrix m{{{853, 150, 60}, {100, 763, 79}, {47, 87, 861}}};
    const auto r = evaluate(from_matrix(m));
    EXPECT_DOUBLE_EQ(*r.precision[0], 0.853);
    EXPECT_DOUBLE_EQ(*r.precision[1], 0.763);
    EXPECT_DOUBLE_EQ(*r.precision[2], 0.861);
    EXPECT_EQ(r.confusion, m);
}

TEST(Evaluate, LateButCorrectCountsAgainstTimelyAccuracy)
{
    std::vector<ClassificationRecord> r(9, rec(PayloadClass::Light, PayloadClass::Light));
    r.push_back(rec(PayloadClass::Heavy, PayloadClass::Heavy, 2.1, 2.0));
    const auto timely = evaluate(r, true);
    const auto raw = evaluate(r, false);
    EXPECT_DOUBLE_EQ(timely.accuracy, 0.9);
    EXPECT_DOUBLE_EQ(raw.accuracy, 1.0);
    EXPECT_EQ(timely.late[2], 1);
    EXPECT_EQ(timely.confusion[2][2], 0);
    EXPECT_EQ(raw.late[2], 0);
}

TEST(Evaluate, PredictionAtOnsetIsLate)
{
    const std::vector<ClassificationRecord> r{rec(PayloadClass::Light, PayloadClass::Light, 2.0, 2.0)};
    EXPECT_EQ(evaluate(r).accuracy, 0.0);
}

TEST(Evaluate, EmptyColumnLeavesPrecisionUndefined)
{
    const std::vector<ClassificationRecord> r{rec(PayloadClass::Light, PayloadClass::Light)};
    const auto m = evaluate(r);
    EXPECT_TRUE(m.precision_undefined);
    EXPECT_FALSE(m.precision[1].has_value());
    EXPECT_EQ(*m.precision[0], 1.0);
}

TEST(Evaluate, EmptyInputIsInsufficientData)
{
    try {
        evaluate(std::vector<ClassificationRecord>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Evaluate, PerSubjectAccuracy)
{
    const std::vector<ClassificationRecord> r{rec(PayloadClass::Light, PayloadClass::Light, 1, 2, "A"),
                                              rec(PayloadClass::Light, PayloadClass::Heavy, 1, 2, "A"),
                                              rec(PayloadClass::Medium, PayloadClass::Medium, 1, 2, "B")};
    const auto m = evaluate(r);
    EXPECT_EQ(m.per_subject_accuracy.at("A"), 0.5);
    EXPECT_EQ(m.per_subject_accuracy.at("B"), 1.0);
}

TEST(Evaluate, InvariantsOverRandomRecords)
{
    Rng rng(44);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ClassificationRecord> r;
        for (std::size_t i = 0, n = 1 + rng.index(60); i < n; ++i)
            r.push_back(rec(kAllClasses[rng.index(3)], kAllClasses[rng.index(3)], rng.uniform(0, 4),
                            rng.uniform(0, 4), "S" + std::to_string(rng.index(4))));
        for (bool timely : {true, false}) {
            const auto m = evaluate(r, timely);
            int sum = 0;
            for (const auto& row : m.confusion)
                for (int v : row) {
                    EXPECT_GE(v, 0);
                    sum += v;
                }
            for (int v : m.late) sum += v;
            EXPECT_EQ(sum, static_cast<int>(r.size()));
            EXPECT_GE(m.accuracy, 0.0);
            EXPECT_LE(m.accuracy, 1.0);
            for (const auto& p : m.precision)
                if (p) {
                    EXPECT_TRUE(*p >= 0.0 && *p <= 1.0);
                }

            auto shuffled = r;
            rng.shuffle(std::span<ClassificationRecord>(shuffled));
            const auto ms = evaluate(shuffled, timely);
            EXPECT_EQ(ms.confusion, m.confusion);
            EXPECT_EQ(ms.late, m.late);
            EXPECT_EQ(ms.accuracy, m.accuracy);
            EXPECT_EQ(ms.per_subject_accuracy, m.per_subject_accuracy);
        }
        auto moved = r;
        for (auto& x : moved) x.lift_onset = rng.uniform(-10, 10);
        const auto a = evaluate(r, false), b = evaluate(moved, false);
        EXPECT_EQ(a.confusion, b.confusion);
        EXPECT_EQ(a.accuracy, b.accuracy);
    }
}

TEST(Fallback, Policy)
{
    EXPECT_EQ(fallback_policy(FallbackEvent::BackendError, true), PayloadClass::Light);
    EXPECT_EQ(fallback_policy(FallbackEvent::LockExpired, true, {PayloadClass::Medium}), PayloadClass::Medium);
    EXPECT_FALSE(fallback_policy(FallbackEvent::BackendError, false).has_value());
}

TEST(Names, RoundTrip)
{
    for (auto c : kAllClasses) EXPECT_EQ(parse_class(to_string(c)), c);
    EXPECT_FALSE(parse_class("huge").has_value());
}

// ---------------------------------------------------------------------------
// Live service client against a local server

namespace {

class LocalService {
public:
    explicit LocalService(std::function<void(const httplib::Request&, httplib::Response&)> handler)
    {
        server_.Post("/classify", handler);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalService()
    {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(Http, SendsCropAndFeaturesAndParsesReply)
{
    std::string got_crop, got_features;
    LocalService svc([&](const httplib::Request& req, httplib::Response& res) {
        got_crop = req.get_file_value("crop").content;
        got_features = req.get_file_value("features").content;
        res.set_content(R"({"p":[0.1,0.2,0.7],"model":"stub","latency_ms":3.5})", "application/json");
    });
    HttpBackend b("127.0.0.1", svc.port());
    CropRef crop;
    crop.png_bytes = std::string("\x89PNG\r\n", 6);
    const auto c = classify(b, crop, {120, 80, 1.5});
    EXPECT_EQ(c.label, PayloadClass::Heavy);
    EXPECT_EQ(b.last_reply().model, "stub");
    EXPECT_EQ(b.last_reply().latency_ms, 3.5);
    EXPECT_EQ(got_crop, crop.png_bytes);
    EXPECT_EQ(got_features, R"({"bbox_w":120.0,"bbox_h":80.0,"distance_m":1.5})");
}

TEST(Http, ServerErrorAndMalformedReplyAreBackendErrors)
{
    int calls = 0;
    LocalService svc([&](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0)
            res.status = 503;
        else
            res.set_content(R"({"p":[0.5,0.5]})", "application/json");
    });
    HttpBackend b("127.0.0.1", svc.port());
    EXPECT_THROW(classify(b, {}, {}), BackendError);
    EXPECT_THROW(classify(b, {}, {}), BackendError);
}

TEST(Http, SlowServiceTimesOut)
{
    LocalService svc([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        res.set_content(R"({"p":[1,0,0]})", "application/json");
    });
    HttpBackend b("127.0.0.1", svc.port(), "/classify", std::chrono::milliseconds(100));
    EXPECT_THROW(classify(b, {}, {}), BackendError);
}

TEST(Http, UnreachableServiceIsBackendError)
{
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    HttpBackend b("127.0.0.1", port);
    EXPECT_THROW(classify(b, {}, {}), BackendError);
}
