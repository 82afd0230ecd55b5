#pragma once

// Offline replay of validation sessions through candidate selection,
// payload classification and the control state machine.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "exo/control.hpp"
#include "exo/error.hpp"
#include "exo/payload.hpp"
#include "exo/rng.hpp"
#include "exo/selection.hpp"

namespace exo::replay {

using payload::PayloadClass;

struct FrameEvent {
    double t = 0.0;
    std::vector<selection::Detection> detections;
};
/// Fresh ToF distances for the detections of the latest frame.
struct DistanceEvent {
    double t = 0.0;
    std::vector<double> distances_m;
};
/// A recorded classifier output.
struct ClassifierOutputEvent {
    double t = 0.0;
    payload::ProbabilityTriple p{};
};
struct OnsetEvent {
    double t = 0.0;
    PayloadClass truth = PayloadClass::Light;
};
struct EndEvent {
    double t = 0.0;
};

using SessionEvent = std::variant<FrameEvent, DistanceEvent, ClassifierOutputEvent, OnsetEvent, EndEvent>;

inline double time_of(const SessionEvent& e)
{
    return std::visit([](const auto& ev) { return ev.t; }, e);
}

struct SessionLog {
    std::string subject;
    std::optional<std::uint64_t> seed;
    std::vector<SessionEvent> events;
};

/// Checks ordering and lift pairing; reports the first offending event
/// (0-based index into `events`).
inline void validate(const SessionLog& log)
{
    double last = -std::numeric_limits<double>::infinity();
    bool in_lift = false;
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const auto& e = log.events[i];
        const double t = time_of(e);
        const std::string where = "event " + std::to_string(i);
        require(std::isfinite(t), ErrorKind::Schema, where + ": non-finite timestamp");
        require(t >= last, ErrorKind::Schema, where + ": timestamp goes backwards");
        last = t;
        if (std::holds_alternative<OnsetEvent>(e)) {
            require(!in_lift, ErrorKind::Schema, where + ": onset before the previous lift ended");
            in_lift = true;
        } else if (std::holds_alternative<EndEvent>(e)) {
            require(in_lift, ErrorKind::Schema, where + ": end without onset");
            in_lift = false;
        } else if (const auto* f = std::get_if<FrameEvent>(&e)) {
            for (const auto& d : f->detections) {
                try {
                    selection::validate(d);
                } catch (const Error& err) {
                    fail(ErrorKind::Schema, where + ": " + err.what());
                }
            }
        }
    }
    require(!in_lift, ErrorKind::Schema, "log ends inside a lift (onset without end)");
}

inline std::size_t lift_count(const SessionLog& log)
{
    return static_cast<std::size_t>(std::count_if(log.events.begin(), log.events.end(), [](const auto& e) {
        return std::holds_alternative<OnsetEvent>(e);
    }));
}

enum class BackendKind { Recorded, Oracle };

struct ReplayConfig {
    selection::ScoringParams scoring{};
    double lock_threshold_m = 2.0;
    control::ControlConfig control{};
    BackendKind backend = BackendKind::Recorded;
    /// Delay between lock and the oracle's answer.
    double oracle_latency_s = 0.1;
    std::uint64_t seed = 0;
};

struct LiftRecord {
    payload::ClassificationRecord record;
    /// onset - time of the counted prediction; > 0 iff timely.
    double latency_margin_s = 0.0;
    bool fallback = false;
    double k_pyl = 0.0;
};

struct SessionReport {
    std::string subject;
    std::uint64_t seed = 0;
    std::string backend;
    std::vector<control::AssistanceCommand> commands;
    std::vector<LiftRecord> lifts;
    payload::MetricsReport timely;
    payload::MetricsReport raw;
};

namespace detail {

// Events are ordered on a 1 ms grid; equal times go distance, detection,
// classification, onset, end, then log order.
inline std::int64_t quantize_ms(double t) { return std::llround(t * 1000.0); }

inline int priority(const SessionEvent& e)
{
    static constexpr std::array<int, 5> by_index{1, 0, 2, 3, 4}; // frame, distance, classifier, onset, end
    return by_index[e.index()];
}

struct Ordered {
    std::int64_t t_ms;
    int prio;
    std::size_t order;
    const SessionEvent* event;
};

inline constexpr int kClassificationPriority = 2;

} // namespace detail

class SessionReplayer {
public:
    SessionReplayer(const SessionLog& log, const ReplayConfig& cfg) : log_(log), cfg_(cfg), ctrl_(cfg.control) {}

    SessionReport run()
    {
        validate(log_);
        std::vector<detail::Ordered> order;
        order.reserve(log_.events.size());
        for (std::size_t i = 0; i < log_.events.size(); ++i)
            order.push_back({detail::quantize_ms(time_of(log_.events[i])), detail::priority(log_.events[i]), i,
                             &log_.events[i]});
        std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            return std::tie(a.t_ms, a.prio, a.order) < std::tie(b.t_ms, b.prio, b.order);
        });
        for (const auto& o : order)
            if (const auto* on = std::get_if<OnsetEvent>(o.event)) truths_.emplace_back(o.t_ms, on->truth);

        for (const auto& o : order) {
            flush_oracle(o.t_ms, o.prio);
            const double t = static_cast<double>(o.t_ms) / 1000.0;
            std::visit([&](const auto& ev) { on(ev, t); }, *o.event);
        }
        flush_oracle(std::numeric_limits<std::int64_t>::max(), 0);

        SessionReport rep;
        rep.subject = log_.subject;
        rep.seed = log_.seed.value_or(cfg_.seed);
        rep.backend = cfg_.backend == BackendKind::Oracle ? "oracle" : "recorded";
        rep.commands = ctrl_.commands();
        rep.lifts = lifts_;
        if (!lifts_.empty()) {
            std::vector<payload::ClassificationRecord> recs;
            for (const auto& l : lifts_) recs.push_back(l.record);
            rep.timely = payload::evaluate(recs, true);
            rep.raw = payload::evaluate(recs, false);
        }
        return rep;
    }

private:
    struct Prediction {
        double t;
        PayloadClass label;
    };

    bool phase_is_locked() const { return std::holds_alternative<control::Locked>(ctrl_.state().phase); }
    bool phase_is_lifting() const { return std::holds_alternative<control::Lifting>(ctrl_.state().phase); }

    void try_lock(double t)
    {
        if (phase_is_locked() || phase_is_lifting() || detections_.empty()) return;
        const auto scores = selection::pickup_scores(detections_, cfg_.scoring);
        const auto lock = selection::select_candidate(scores, detections_, t, cfg_.lock_threshold_m);
        if (!lock) return;
        ctrl_.handle(control::LockEvent{t, *lock});
        if (!phase_is_locked()) return; // still in cooldown
        timely_.reset();
        late_.reset();
        if (cfg_.backend == BackendKind::Oracle)
            pending_oracle_ms_ = detail::quantize_ms(t + cfg_.oracle_latency_s);
    }

    void flush_oracle(std::int64_t before_ms, int prio)
    {
        if (!pending_oracle_ms_) return;
        if (*pending_oracle_ms_ > before_ms ||
            (*pending_oracle_ms_ == before_ms && detail::kClassificationPriority >= prio))
            return;
        const std::int64_t at = *pending_oracle_ms_;
        pending_oracle_ms_.reset();
        const double t = static_cast<double>(at) / 1000.0;

        payload::OracleBackend oracle;
        const auto next = std::find_if(truths_.begin(), truths_.end(), [&](const auto& x) { return x.first >= at; });
        if (next != truths_.end()) oracle.set_truth(next->second);
        apply_classification(t, [&] {
            return payload::classify(oracle, crop_at(t), features());
        });
    }

    template <typename F>
    void apply_classification(double t, F&& produce)
    {
        if (!phase_is_locked() && !phase_is_lifting()) return;
        payload::Classification c;
        try {
            c = produce();
        } catch (const payload::BackendError&) {
            ctrl_.handle(control::BackendFailureEvent{t});
            return;
        }
        const auto r = ctrl_.handle(control::ClassificationEvent{t, c.label});
        if (r.disposition == control::Disposition::Late) {
            if (!late_) late_ = Prediction{t, c.label};
        } else if (r.disposition == control::Disposition::Applied) {
            timely_ = Prediction{t, c.label};
        }
    }

    payload::CropRef crop_at(double t) const
    {
        payload::CropRef crop;
        crop.time_s = t;
        if (const auto* lk = std::get_if<control::Locked>(&ctrl_.state().phase)) crop.region = lk->candidate.crop;
        return crop;
    }

    payload::PhysicalFeatures features() const
    {
        if (const auto* lk = std::get_if<control::Locked>(&ctrl_.state().phase))
            return {lk->candidate.detection.bbox.w, lk->candidate.detection.bbox.h,
                    lk->candidate.detection.distance_m};
        return {};
    }

    void on(const FrameEvent& ev, double t)
    {
        detections_ = ev.detections;
        try_lock(t);
    }

    void on(const DistanceEvent& ev, double t)
    {
        require(ev.distances_m.size() == detections_.size(), ErrorKind::Schema,
                "distance event at t=" + std::to_string(t) + " does not match the latest frame");
        for (std::size_t i = 0; i < detections_.size(); ++i) detections_[i].distance_m = ev.distances_m[i];
        try_lock(t);
    }

    void on(const ClassifierOutputEvent& ev, double t)
    {
        if (cfg_.backend != BackendKind::Recorded) return;
        payload::RecordedBackend backend({{t, ev.p, std::nullopt}});
        apply_classification(t, [&] { return payload::classify(backend, crop_at(t), features()); });
    }

    void on(const OnsetEvent& ev, double t)
    {
        const auto r = ctrl_.handle(control::LiftOnsetEvent{t});
        const auto& lifting = std::get<control::Lifting>(r.state.phase);
        current_ = LiftRecord{};
        current_.record.truth = ev.truth;
        current_.record.lift_onset = t;
        current_.record.subject = log_.subject;
        current_.fallback = lifting.command.fallback;
        current_.k_pyl = lifting.command.k_pyl;
        onset_seen_ = true;
    }

    void on(const EndEvent&, double t)
    {
        ctrl_.handle(control::LiftEndEvent{t});
        if (!onset_seen_) return;
        auto& rec = current_.record;
        if (timely_) {
            rec.timestamp = timely_->t;
            rec.predicted = timely_->label;
        } else if (late_) {
            rec.timestamp = late_->t;
            rec.predicted = late_->label;
        } else {
            rec.timestamp = rec.lift_onset;
            rec.predicted = cfg_.control.fallback.default_class;
        }
        current_.latency_margin_s = rec.lift_onset - rec.timestamp;
        lifts_.push_back(current_);
        timely_.reset();
        late_.reset();
        onset_seen_ = false;
    }

    const SessionLog& log_;
    ReplayConfig cfg_;
    control::Controller ctrl_;
    std::vector<selection::Detection> detections_;
    std::vector<std::pair<std::int64_t, PayloadClass>> truths_;
    std::optional<std::int64_t> pending_oracle_ms_;
    std::optional<Prediction> timely_;
    std::optional<Prediction> late_;
    LiftRecord current_;
    bool onset_seen_ = false;
    std::vector<LiftRecord> lifts_;
};

inline SessionReport run_session(const SessionLog& log, const ReplayConfig& cfg = {})
{
    return SessionReplayer(log, cfg).run();
}

// ---------------------------------------------------------------------------
// Cohort

struct SubjectRow {
    std::string subject;
    int lifts = 0;
    double accuracy = 0.0;     ///< timely
    double raw_accuracy = 0.0; ///< ignoring timeliness
};

struct CohortReport {
    std::vector<SubjectRow> subjects;
    double mean_accuracy = 0.0;
    double mean_raw_accuracy = 0.0;
    payload::MetricsReport pooled;
};

inline CohortReport aggregate(std::span<const SessionReport> reports)
{
    require(!reports.empty(), ErrorKind::InsufficientData, "no session reports to aggregate");
    CohortReport c;
    std::vector<payload::ClassificationRecord> all;
    for (const auto& r : reports) {
        SubjectRow row{r.subject, static_cast<int>(r.lifts.size()), r.timely.accuracy, r.raw.accuracy};
        c.mean_accuracy += row.accuracy;
        c.mean_raw_accuracy += row.raw_accuracy;
        c.subjects.push_back(row);
        for (const auto& l : r.lifts) all.push_back(l.record);
    }
    c.mean_accuracy /= static_cast<double>(reports.size());
    c.mean_raw_accuracy /= static_cast<double>(reports.size());
    if (!all.empty()) c.pooled = payload::evaluate(all, true);
    return c;
}

// ---------------------------------------------------------------------------
// Synthetic sessions

struct SynthSpec {
    std::string subject = "S01";
    std::array<PayloadClass, 3> boxes{PayloadClass::Light, PayloadClass::Medium, PayloadClass::Heavy};
    int rounds = 3;
    /// Probability that the classifier reports a wrong class.
    double flip_probability = 0.0;
    /// Probability that the classifier answers only after onset.
    double late_probability = 0.0;
    double latency_mean_s = 0.1;
    double latency_sd_s = 0.02;
    double frame_period_s = 0.1;
    std::uint64_t seed = 42;
};

/// Three boxes, shuffled every round, each lifted once per round. The
/// subject walks from 4 m to the target box, which stays near the image
/// center; the other remaining boxes sit off-axis and further away.
inline SessionLog synth_session(const SynthSpec& spec)
{
    require(spec.rounds > 0, ErrorKind::InvalidParameter, "rounds must be positive");
    require(spec.flip_probability >= 0.0 && spec.flip_probability <= 1.0 && spec.late_probability >= 0.0 &&
                spec.late_probability <= 1.0,
            ErrorKind::InvalidParameter, "probabilities must lie in [0,1]");
    Rng rng(spec.seed);
    SessionLog log{spec.subject, spec.seed, {}};
    auto ms = [](double t) { return static_cast<double>(std::llround(t * 1000.0)) / 1000.0; };

    constexpr double start_distance = 4.0;
    constexpr double reach_distance = 0.5;
    constexpr double walk_speed = 1.2;
    constexpr double lock_threshold = 2.0;
    const double cycle = 60.0 / 35.0;

    double t0 = 0.0;
    for (int round = 0; round < spec.rounds; ++round) {
        std::array<PayloadClass, 3> order = spec.boxes;
        rng.shuffle(std::span<PayloadClass>(order));
        for (std::size_t k = 0; k < order.size(); ++k) {
            const PayloadClass truth = order[k];
            const double target_theta = rng.uniform(-5.0, 5.0);
            std::vector<std::pair<double, double>> others; // theta offset, extra distance
            for (std::size_t o = k + 1; o < order.size(); ++o) {
                const double side = (o - k) % 2 == 1 ? 1.0 : -1.0;
                others.emplace_back(side * rng.uniform(25.0, 40.0), rng.uniform(0.3, 0.8));
            }

            const double walk_time = (start_distance - reach_distance) / walk_speed;
            std::optional<double> lock_t;
            for (double dt = 0.0; dt <= walk_time + 1e-9; dt += spec.frame_period_s) {
                const double t = ms(t0 + dt);
                const double dist = std::max(reach_distance, start_distance - walk_speed * dt);
                FrameEvent f{t, {}};
                auto add = [&](double theta, double d) {
                    const double w = 200.0 / std::max(d, 0.3);
                    const double h = 150.0 / std::max(d, 0.3);
                    const double cx = 320.0 + theta * 640.0 / 70.0;
                    f.detections.push_back({{std::round(cx - w / 2), std::round(240.0 - h / 2), std::round(w),
                                             std::round(h)},
                                            std::round(theta * 100.0) / 100.0, std::round(d * 1000.0) / 1000.0,
                                            "box"});
                };
                add(target_theta, dist);
                for (const auto& [theta, extra] : others) add(target_theta + theta, dist + extra);
                log.events.emplace_back(std::move(f));
                if (!lock_t && dist <= lock_threshold) lock_t = t;
            }
            const double onset = ms(t0 + walk_time + 0.3);
            const double end = ms(onset + cycle);

            PayloadClass said = truth;
            if (rng.bernoulli(spec.flip_probability)) {
                const auto shift = 1 + rng.index(2);
                said = payload::kAllClasses[(payload::index_of(truth) + shift) % 3];
            }
            const double latency = std::max(0.02, rng.normal(spec.latency_mean_s, spec.latency_sd_s));
            double t_cls = ms(*lock_t + latency);
            if (rng.bernoulli(spec.late_probability)) t_cls = ms(onset + 0.1);
            payload::ProbabilityTriple p{0.1, 0.1, 0.1};
            p[payload::index_of(said)] = 0.8;

            log.events.emplace_back(ClassifierOutputEvent{t_cls, p});
            log.events.emplace_back(OnsetEvent{onset, truth});
            log.events.emplace_back(EndEvent{end});
            t0 = ms(end + 3.0);
        }
    }
    std::stable_sort(log.events.begin(), log.events.end(),
                     [](const auto& a, const auto& b) { return time_of(a) < time_of(b); });
    return log;
}

} // namespace exo::replay
