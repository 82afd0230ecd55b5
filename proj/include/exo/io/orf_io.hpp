#pragma once

// Optimization-space files: samples CSV, questionnaire JSON, preference
// votes CSV, surface JSON (exact reload), grid/curve CSV and contour SVG.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "exo/io/svg.hpp"
#include "exo/io/text.hpp"
#include "exo/orf/pipeline.hpp"

namespace exo::io {

using SamplesByKind = std::map<orf::MetricKind, std::vector<orf::PerfSample>>;

/// `assistance,payload_kg,value,metric_kind`.
inline SamplesByKind parse_samples_csv(std::string_view text, const std::string& source)
{
    const CsvTable t = parse_csv(text, source);
    const auto ca = t.column("assistance"), cp = t.column("payload_kg"), cv = t.column("value");
    require(ca >= 0 && cp >= 0 && cv >= 0, ErrorKind::Schema, source + ": header needs assistance,payload_kg,value");
    const auto ck = t.column("metric_kind");
    require(ck >= 0, ErrorKind::Validation, source + ": missing metric_kind column");
    SamplesByKind out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto loc = where(source, t.line_numbers[r]);
        const auto& kind_text = row[static_cast<std::size_t>(ck)];
        require(!kind_text.empty(), ErrorKind::Validation, loc + ": missing metric kind");
        const auto kind = orf::parse_metric_kind(kind_text);
        require(kind.has_value(), ErrorKind::Validation, loc + ": unknown metric kind '" + kind_text + "'");
        orf::PerfSample s{parse_double(row[static_cast<std::size_t>(ca)], loc),
                          parse_double(row[static_cast<std::size_t>(cp)], loc),
                          parse_double(row[static_cast<std::size_t>(cv)], loc)};
        orf::validate(s);
        out[*kind].push_back(s);
    }
    require(!out.empty(), ErrorKind::InsufficientData, source + ": no samples");
    return out;
}

inline nlohmann::json parse_json(std::string_view text, const std::string& source)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, source + ": invalid JSON: " + e.what());
    }
}

/// `[{"condition":{"assistance":a,"payload_kg":p},"ratings":[q1..q9]}, ...]`
inline std::vector<orf::QuestionnaireResponse> parse_questionnaires(std::string_view text, const std::string& source)
{
    const auto j = parse_json(text, source);
    require(j.is_array(), ErrorKind::Schema, source + ": expected a JSON array");
    std::vector<orf::QuestionnaireResponse> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        const std::string loc = source + ": entry " + std::to_string(i);
        require(e.is_object() && e.contains("condition") && e["condition"].is_object() && e.contains("ratings") &&
                    e["ratings"].is_array(),
                ErrorKind::Schema, loc + ": needs condition and ratings");
        const auto& c = e["condition"];
        require(c.contains("assistance") && c["assistance"].is_number() && c.contains("payload_kg") &&
                    c["payload_kg"].is_number(),
                ErrorKind::Schema, loc + ": condition needs numeric assistance and payload_kg");
        require(e["ratings"].size() == 9, ErrorKind::Validation, loc + ": expected 9 ratings");
        orf::QuestionnaireResponse r;
        r.assistance = c["assistance"].get<double>();
        r.payload_kg = c["payload_kg"].get<double>();
        for (std::size_t q = 0; q < 9; ++q) {
            require(e["ratings"][q].is_number_integer(), ErrorKind::Validation, loc + ": ratings must be integers");
            r.ratings[q] = e["ratings"][q].get<int>();
        }
        try {
            orf::validate(r);
        } catch (const Error& err) {
            fail(err.kind(), loc + ": " + err.what());
        }
        out.push_back(r);
    }
    return out;
}

/// `subject,payload_kg,choice` with choice in {light, strong}.
inline std::vector<orf::PreferenceVote> parse_votes_csv(std::string_view text, const std::string& source)
{
    const CsvTable t = parse_csv(text, source);
    const auto cs = t.column("subject"), cp = t.column("payload_kg"), cc = t.column("choice");
    require(cs >= 0 && cp >= 0 && cc >= 0, ErrorKind::Schema, source + ": header must be subject,payload_kg,choice");
    std::vector<orf::PreferenceVote> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto loc = where(source, t.line_numbers[r]);
        const auto& choice = row[static_cast<std::size_t>(cc)];
        require(choice == "light" || choice == "strong", ErrorKind::Validation,
                loc + ": choice must be light or strong");
        out.push_back({row[static_cast<std::size_t>(cs)], parse_double(row[static_cast<std::size_t>(cp)], loc),
                       choice == "light" ? orf::AssistanceChoice::Light : orf::AssistanceChoice::Strong});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Surface export

inline nlohmann::ordered_json surface_to_json(const orf::RepresentationSurface& s)
{
    nlohmann::ordered_json j;
    j["kind"] = std::string(orf::to_string(s.kind()));
    const auto& p = s.params();
    j["params"] = {{"signal_variance", p.signal_variance},
                   {"length_assistance", p.length_assistance},
                   {"length_payload", p.length_payload},
                   {"noise_variance", p.noise_variance}};
    const auto& d = s.domain();
    j["domain"] = {{"assistance_lo", d.assistance_lo},
                   {"assistance_hi", d.assistance_hi},
                   {"payload_lo_kg", d.payload_lo_kg},
                   {"payload_hi_kg", d.payload_hi_kg}};
    j["jitter"] = s.jitter();
    j["log_marginal_likelihood"] = s.log_marginal_likelihood();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& x : s.samples())
        arr.push_back({{"assistance", x.assistance}, {"payload_kg", x.payload_kg}, {"value", x.value}});
    j["samples"] = std::move(arr);
    return j;
}

inline orf::RepresentationSurface surface_from_json(const nlohmann::json& j, const std::string& source)
{
    try {
        const auto kind = orf::parse_metric_kind(j.at("kind").get<std::string>());
        require(kind.has_value(), ErrorKind::Schema, source + ": unknown surface kind");
        const auto& p = j.at("params");
        const orf::KernelParams params{p.at("signal_variance").get<double>(), p.at("length_assistance").get<double>(),
                                       p.at("length_payload").get<double>(), p.at("noise_variance").get<double>()};
        const auto& d = j.at("domain");
        const orf::InputDomain dom{d.at("assistance_lo").get<double>(), d.at("assistance_hi").get<double>(),
                                   d.at("payload_lo_kg").get<double>(), d.at("payload_hi_kg").get<double>()};
        std::vector<orf::PerfSample> samples;
        for (const auto& x : j.at("samples"))
            samples.push_back(
                {x.at("assistance").get<double>(), x.at("payload_kg").get<double>(), x.at("value").get<double>()});
        return orf::RepresentationSurface(*kind, std::move(samples), params, dom, j.at("jitter").get<double>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, source + ": " + e.what());
    }
}

inline std::string grid_csv(const orf::GridFunction& f)
{
    std::string out = "assistance,payload_kg,value\n";
    for (std::size_t j = 0; j < f.grid.payload_kg.size(); ++j)
        for (std::size_t i = 0; i < f.grid.assistance.size(); ++i)
            out += fmt_fixed(f.grid.assistance[i], 4) + "," + fmt_fixed(f.grid.payload_kg[j], 4) + "," +
                   fmt_fixed(f.at(i, j), 9) + "\n";
    return out;
}

inline std::string curve_csv(const std::vector<orf::OptimalPoint>& curve)
{
    std::string out = "payload_kg,assistance,value,boundary\n";
    for (const auto& p : curve)
        out += fmt_fixed(p.payload_kg, 4) + "," + fmt_fixed(p.assistance, 9) + "," + fmt_fixed(p.value, 9) + "," +
               (p.boundary ? "1" : "0") + "\n";
    return out;
}

inline std::string contour_svg(const std::string& title, const orf::GridFunction& f,
                               const std::vector<orf::OptimalPoint>& curve, const std::optional<orf::ExpFit>& fit,
                               const orf::InputDomain& dom)
{
    svg::HeatMap h;
    h.title = title;
    h.xs = f.grid.assistance;
    h.ys = f.grid.payload_kg;
    h.values = f.values;
    for (const auto& p : curve)
        if (!p.boundary) h.points.emplace_back(p.assistance, p.payload_kg);
    if (fit) {
        const double span = dom.payload_hi_kg - dom.payload_lo_kg;
        for (int k = 0; k <= 100; ++k) {
            const double a = dom.assistance_lo + (dom.assistance_hi - dom.assistance_lo) * k / 100.0;
            const double p_kg = dom.payload_lo_kg + span * fit->params.payload_at(a);
            if (p_kg >= dom.payload_lo_kg && p_kg <= dom.payload_hi_kg) h.curve.emplace_back(a, p_kg);
        }
    }
    return svg::render(h);
}

/// Summary with the fitted (a, b, c) and per-metric hyperparameters.
inline nlohmann::ordered_json pipeline_summary(const orf::PipelineResult& r, std::uint64_t seed)
{
    nlohmann::ordered_json j;
    j["seed"] = seed;
    auto surf = nlohmann::ordered_json::object();
    for (const auto& [k, s] : r.surfaces) {
        const auto& n = r.normalized.at(k);
        surf[std::string(orf::to_string(k))] = {{"samples", s.samples().size()},
                                                {"signal_variance", s.params().signal_variance},
                                                {"length_assistance", s.params().length_assistance},
                                                {"length_payload", s.params().length_payload},
                                                {"noise_variance", s.params().noise_variance},
                                                {"grid_min", n.lo},
                                                {"grid_max", n.hi},
                                                {"degenerate", n.degenerate}};
    }
    j["surfaces"] = std::move(surf);
    std::size_t interior = 0;
    for (const auto& p : r.curve) interior += p.boundary ? 0 : 1;
    j["curve_points"] = r.curve.size();
    j["interior_points"] = interior;
    if (r.fit) {
        j["fit"] = {{"a", r.fit->params.a},
                    {"b", r.fit->params.b},
                    {"c", r.fit->params.c},
                    {"payload_units", "normalized"},
                    {"residual_rms", r.fit->residual_rms},
                    {"iterations", r.fit->iterations},
                    {"near_singular", r.fit->near_singular}};
    } else {
        j["fit"] = nullptr;
    }
    if (!r.fit_note.empty()) j["note"] = r.fit_note;
    return j;
}

} // namespace exo::io
