#pragma once

// Session JSONL (one event per line, "type" discriminator), recorded
// classifier outputs, command timeline and report serialization.
//
//   {"type":"session","subject":"S01","seed":42}
//   {"type":"frame","t":0.1,"detections":[{"bbox":[x,y,w,h],"theta_deg":f,"distance_m":f,"label":"box"}]}
//   {"type":"distance","t":0.1,"distances_m":[...]}
//   {"type":"classification","t":0.2,"p":[pl,pm,ph]}
//   {"type":"onset","t":3.0,"truth":"heavy"}
//   {"type":"end","t":4.7}

#include <string>
#include <vector>

#include <json.hpp>

#include "exo/io/svg.hpp"
#include "exo/io/text.hpp"
#include "exo/replay.hpp"

namespace exo::io {

using ojson = nlohmann::ordered_json;

namespace detail {

inline double num(const nlohmann::json& j, const char* key, const std::string& loc)
{
    require(j.contains(key) && j[key].is_number(), ErrorKind::Schema, loc + ": missing numeric \"" + key + "\"");
    return j[key].get<double>();
}

inline payload::ProbabilityTriple triple(const nlohmann::json& j, const std::string& loc)
{
    require(j.contains("p") && j["p"].is_array() && j["p"].size() == 3, ErrorKind::Schema,
            loc + ": \"p\" must be an array of 3 numbers");
    payload::ProbabilityTriple p{};
    for (std::size_t i = 0; i < 3; ++i) {
        require(j["p"][i].is_number(), ErrorKind::Schema, loc + ": \"p\" must be an array of 3 numbers");
        p[i] = j["p"][i].get<double>();
    }
    try {
        payload::validate_triple(p);
    } catch (const Error& e) {
        fail(ErrorKind::Schema, loc + ": " + e.what());
    }
    return p;
}

inline payload::PayloadClass klass(const nlohmann::json& j, const char* key, const std::string& loc)
{
    require(j.contains(key) && j[key].is_string(), ErrorKind::Schema, loc + ": missing \"" + key + "\"");
    const auto c = payload::parse_class(j[key].get<std::string>());
    require(c.has_value(), ErrorKind::Schema, loc + ": \"" + key + "\" must be light, medium or heavy");
    return *c;
}

inline selection::Detection detection(const nlohmann::json& d, const std::string& loc)
{
    require(d.is_object() && d.contains("bbox") && d["bbox"].is_array() && d["bbox"].size() == 4, ErrorKind::Schema,
            loc + ": detection needs bbox [x,y,w,h]");
    selection::Detection det;
    std::array<double, 4> b{};
    for (std::size_t k = 0; k < 4; ++k) {
        require(d["bbox"][k].is_number(), ErrorKind::Schema, loc + ": bbox entries must be numbers");
        b[k] = d["bbox"][k].get<double>();
    }
    det.bbox = {b[0], b[1], b[2], b[3]};
    det.theta_deg = num(d, "theta_deg", loc);
    det.distance_m = num(d, "distance_m", loc);
    if (d.contains("label")) {
        require(d["label"].is_string(), ErrorKind::Schema, loc + ": label must be a string");
        det.label = d["label"].get<std::string>();
    }
    try {
        selection::validate(det);
    } catch (const Error& e) {
        fail(ErrorKind::Schema, loc + ": " + e.what());
    }
    return det;
}

inline std::vector<std::pair<std::size_t, nlohmann::json>> jsonl(std::string_view text, const std::string& source)
{
    std::vector<std::pair<std::size_t, nlohmann::json>> out;
    std::size_t lineno = 0;
    for (auto raw : split_lines(text)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty()) continue;
        try {
            out.emplace_back(lineno, nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception&) {
            fail(ErrorKind::Schema, where(source, lineno) + ": invalid JSON");
        }
        require(out.back().second.is_object(), ErrorKind::Schema, where(source, lineno) + ": expected an object");
    }
    return out;
}

} // namespace detail

inline replay::SessionLog parse_session_jsonl(std::string_view text, const std::string& source)
{
    replay::SessionLog log;
    bool header = false;
    for (const auto& [lineno, j] : detail::jsonl(text, source)) {
        const auto loc = where(source, lineno);
        require(j.contains("type") && j["type"].is_string(), ErrorKind::Schema, loc + ": missing \"type\"");
        const auto type = j["type"].get<std::string>();
        if (type == "session") {
            require(!header && log.events.empty(), ErrorKind::Schema, loc + ": session header must come first");
            header = true;
            if (j.contains("subject")) {
                require(j["subject"].is_string(), ErrorKind::Schema, loc + ": subject must be a string");
                log.subject = j["subject"].get<std::string>();
            }
            if (j.contains("seed") && !j["seed"].is_null()) {
                require(j["seed"].is_number_unsigned(), ErrorKind::Schema, loc + ": seed must be an unsigned integer");
                log.seed = j["seed"].get<std::uint64_t>();
            }
            continue;
        }
        const double t = detail::num(j, "t", loc);
        if (type == "frame") {
            replay::FrameEvent f{t, {}};
            require(j.contains("detections") && j["detections"].is_array(), ErrorKind::Schema,
                    loc + ": frame needs a detections array");
            for (const auto& d : j["detections"]) f.detections.push_back(detail::detection(d, loc));
            log.events.emplace_back(std::move(f));
        } else if (type == "distance") {
            replay::DistanceEvent d{t, {}};
            require(j.contains("distances_m") && j["distances_m"].is_array(), ErrorKind::Schema,
                    loc + ": distance needs a distances_m array");
            for (const auto& v : j["distances_m"]) {
                require(v.is_number(), ErrorKind::Schema, loc + ": distances must be numbers");
                d.distances_m.push_back(v.get<double>());
            }
            log.events.emplace_back(std::move(d));
        } else if (type == "classification") {
            log.events.emplace_back(replay::ClassifierOutputEvent{t, detail::triple(j, loc)});
        } else if (type == "onset") {
            log.events.emplace_back(replay::OnsetEvent{t, detail::klass(j, "truth", loc)});
        } else if (type == "end") {
            log.events.emplace_back(replay::EndEvent{t});
        } else {
            fail(ErrorKind::Schema, loc + ": unknown event type '" + type + "'");
        }
    }
    return log;
}

inline std::string session_jsonl(const replay::SessionLog& log)
{
    std::string out;
    ojson h{{"type", "session"}, {"subject", log.subject}};
    h["seed"] = log.seed ? ojson(*log.seed) : ojson(nullptr);
    out += h.dump() + "\n";
    for (const auto& e : log.events) {
        ojson j;
        std::visit(
            [&](const auto& ev) {
                using E = std::decay_t<decltype(ev)>;
                if constexpr (std::is_same_v<E, replay::FrameEvent>) {
                    j = {{"type", "frame"}, {"t", ev.t}};
                    auto arr = ojson::array();
                    for (const auto& d : ev.detections)
                        arr.push_back({{"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                                       {"theta_deg", d.theta_deg},
                                       {"distance_m", d.distance_m},
                                       {"label", d.label}});
                    j["detections"] = std::move(arr);
                } else if constexpr (std::is_same_v<E, replay::DistanceEvent>) {
                    j = {{"type", "distance"}, {"t", ev.t}, {"distances_m", ev.distances_m}};
                } else if constexpr (std::is_same_v<E, replay::ClassifierOutputEvent>) {
                    j = {{"type", "classification"}, {"t", ev.t}, {"p", {ev.p[0], ev.p[1], ev.p[2]}}};
                } else if constexpr (std::is_same_v<E, replay::OnsetEvent>) {
                    j = {{"type", "onset"}, {"t", ev.t}, {"truth", std::string(payload::to_string(ev.truth))}};
                } else {
                    j = {{"type", "end"}, {"t", ev.t}};
                }
            },
            e);
        out += j.dump() + "\n";
    }
    return out;
}

/// Per-frame detection stream `{"t":s,"detections":[...]}`.
inline std::vector<replay::FrameEvent> parse_detections_jsonl(std::string_view text, const std::string& source)
{
    std::vector<replay::FrameEvent> out;
    for (const auto& [lineno, j] : detail::jsonl(text, source)) {
        const auto loc = where(source, lineno);
        replay::FrameEvent f{detail::num(j, "t", loc), {}};
        require(j.contains("detections") && j["detections"].is_array(), ErrorKind::Schema,
                loc + ": needs a detections array");
        for (const auto& d : j["detections"]) f.detections.push_back(detail::detection(d, loc));
        out.push_back(std::move(f));
    }
    return out;
}

/// Recorded classifier outputs `{"t":s,"p":[...],"truth":"..."}`; truth
/// is optional and never shown to the recorded backend.
inline std::vector<payload::RecordedOutput> parse_recorded_jsonl(std::string_view text, const std::string& source)
{
    std::vector<payload::RecordedOutput> out;
    for (const auto& [lineno, j] : detail::jsonl(text, source)) {
        const auto loc = where(source, lineno);
        payload::RecordedOutput r{detail::num(j, "t", loc), detail::triple(j, loc), std::nullopt};
        if (j.contains("truth")) r.truth = detail::klass(j, "truth", loc);
        out.push_back(r);
    }
    return out;
}

/// Appends recorded outputs to a log as classification events, keeping
/// the events time-ordered (stable for equal times).
inline void merge_recorded(replay::SessionLog& log, const std::vector<payload::RecordedOutput>& outputs)
{
    for (const auto& r : outputs) log.events.emplace_back(replay::ClassifierOutputEvent{r.time_s, r.p});
    std::stable_sort(log.events.begin(), log.events.end(),
                     [](const auto& a, const auto& b) { return replay::time_of(a) < replay::time_of(b); });
}

inline std::string commands_jsonl(const std::vector<control::AssistanceCommand>& cmds)
{
    std::string out;
    for (const auto& c : cmds) {
        const ojson j{{"t", c.time_s},
                      {"k_pyl", c.k_pyl},
                      {"class", std::string(payload::to_string(c.source))},
                      {"state", c.state}};
        out += j.dump() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

inline ojson metrics_json(const payload::MetricsReport& m)
{
    ojson j;
    j["timeliness_required"] = m.timeliness_required;
    j["total"] = m.total;
    j["correct"] = m.correct;
    j["accuracy"] = m.accuracy;
    auto conf = ojson::array();
    for (const auto& row : m.confusion) conf.push_back(row);
    j["confusion"] = std::move(conf); // rows truth, columns predicted
    j["late"] = m.late;
    auto prec = ojson::object();
    for (auto c : payload::kAllClasses) {
        const auto& p = m.precision[payload::index_of(c)];
        prec[std::string(payload::to_string(c))] = p ? ojson(*p) : ojson(nullptr);
    }
    j["precision"] = std::move(prec);
    j["precision_undefined"] = m.precision_undefined;
    auto subj = ojson::object();
    for (const auto& [id, a] : m.per_subject_accuracy) subj[id] = a;
    j["per_subject_accuracy"] = std::move(subj);
    return j;
}

inline ojson report_json(const replay::SessionReport& r)
{
    ojson j;
    j["subject"] = r.subject;
    j["seed"] = r.seed;
    j["backend"] = r.backend;
    j["lifts"] = r.lifts.size();
    j["commands"] = r.commands.size();
    j["metrics"] = metrics_json(r.timely);
    j["raw_metrics"] = metrics_json(r.raw);
    auto lifts = ojson::array();
    for (const auto& l : r.lifts)
        lifts.push_back({{"onset", l.record.lift_onset},
                         {"truth", std::string(payload::to_string(l.record.truth))},
                         {"predicted", std::string(payload::to_string(l.record.predicted))},
                         {"timestamp", l.record.timestamp},
                         {"latency_margin_s", l.latency_margin_s},
                         {"timely", l.record.timely()},
                         {"fallback", l.fallback},
                         {"k_pyl", l.k_pyl}});
    j["lift_records"] = std::move(lifts);
    return j;
}

inline ojson cohort_json(const replay::CohortReport& c, std::uint64_t seed)
{
    ojson j;
    j["seed"] = seed;
    j["subjects"] = c.subjects.size();
    j["mean_accuracy"] = c.mean_accuracy;
    j["mean_raw_accuracy"] = c.mean_raw_accuracy;
    j["pooled"] = metrics_json(c.pooled);
    auto rows = ojson::array();
    for (const auto& s : c.subjects)
        rows.push_back(
            {{"subject", s.subject}, {"lifts", s.lifts}, {"accuracy", s.accuracy}, {"raw_accuracy", s.raw_accuracy}});
    j["per_subject"] = std::move(rows);
    return j;
}

inline std::string cohort_csv(const replay::CohortReport& c)
{
    std::string out = "subject,lifts,accuracy,raw_accuracy\n";
    for (const auto& s : c.subjects)
        out += s.subject + "," + std::to_string(s.lifts) + "," + fmt_fixed(s.accuracy, 6) + "," +
               fmt_fixed(s.raw_accuracy, 6) + "\n";
    out += "mean,," + fmt_fixed(c.mean_accuracy, 6) + "," + fmt_fixed(c.mean_raw_accuracy, 6) + "\n";
    return out;
}

inline std::string accuracy_svg(const replay::CohortReport& c)
{
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& s : c.subjects) bars.emplace_back(s.subject, s.accuracy);
    return svg::bar_chart("Per-subject timely accuracy", bars, c.mean_accuracy);
}

inline std::string confusion_svg(const payload::MetricsReport& m)
{
    return svg::confusion_matrix("Pooled confusion matrix", m.confusion, {"light", "medium", "heavy"});
}

} // namespace exo::io
