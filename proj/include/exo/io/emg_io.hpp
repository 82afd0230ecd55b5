#pragma once

// EMG recordings: CSV `time_s,<muscle>...` plus a JSON sidecar
// {"rate_hz": 2150, "subject": "...", "condition": "..."}.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "exo/io/text.hpp"
#include "exo/signal.hpp"

namespace exo::io {

struct EmgMetadata {
    double rate_hz = 0.0;
    std::string subject;
    std::string condition;
};

struct EmgRecording {
    EmgMetadata meta;
    std::vector<signal::EmgTrace> traces;
};

inline EmgMetadata parse_emg_metadata(std::string_view text, const std::string& source)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, source + ": invalid JSON: " + e.what());
    }
    require(j.is_object() && j.contains("rate_hz") && j["rate_hz"].is_number(), ErrorKind::Schema,
            source + ": missing numeric \"rate_hz\"");
    EmgMetadata m;
    m.rate_hz = j["rate_hz"].get<double>();
    require(m.rate_hz > 0.0, ErrorKind::Schema, source + ": rate_hz must be positive");
    if (j.contains("subject") && j["subject"].is_string()) m.subject = j["subject"].get<std::string>();
    if (j.contains("condition") && j["condition"].is_string()) m.condition = j["condition"].get<std::string>();
    return m;
}

/// Sidecar path convention: `trial.csv` -> `trial.json`.
inline std::filesystem::path sidecar_of(const std::filesystem::path& csv)
{
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

/// Parses the CSV and checks the time column against the declared rate.
inline EmgRecording parse_emg_csv(std::string_view text, const EmgMetadata& meta, const std::string& source)
{
    const CsvTable t = parse_csv(text, source);
    require(t.header.size() >= 2 && t.header[0] == "time_s", ErrorKind::Schema,
            source + ": header must be time_s,<muscle_id>...");
    require(!t.rows.empty(), ErrorKind::InsufficientData, source + ": no samples");

    EmgRecording rec{meta, {}};
    for (std::size_t c = 1; c < t.header.size(); ++c) {
        signal::EmgTrace tr;
        tr.muscle_id = t.header[c];
        tr.rate_hz = meta.rate_hz;
        const auto& id = tr.muscle_id;
        if (id.ends_with("-L")) tr.side = signal::Side::Left;
        else if (id.ends_with("-R")) tr.side = signal::Side::Right;
        rec.traces.push_back(std::move(tr));
    }
    std::vector<double> times;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto loc = where(source, t.line_numbers[r]);
        times.push_back(parse_double(t.rows[r][0], loc));
        for (std::size_t c = 1; c < t.header.size(); ++c)
            rec.traces[c - 1].samples.push_back(parse_double(t.rows[r][c], loc));
    }
    for (auto& tr : rec.traces) tr.start_s = times.front();

    if (times.size() >= 2) {
        const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
        const double rate = 1.0 / dt;
        require(std::fabs(rate - meta.rate_hz) <= 1e-3 * meta.rate_hz, ErrorKind::Schema,
                source + ": time column implies " + fmt_fixed(rate, 3) + " Hz but metadata declares " +
                    fmt_double(meta.rate_hz) + " Hz");
    }
    return rec;
}

inline EmgRecording load_emg(const std::filesystem::path& csv)
{
    const auto side = sidecar_of(csv);
    const auto meta = parse_emg_metadata(read_file(side), side.string());
    return parse_emg_csv(read_file(csv), meta, csv.string());
}

inline std::vector<signal::LiftCycleSpan> parse_spans_csv(std::string_view text, const std::string& source)
{
    const CsvTable t = parse_csv(text, source);
    require(t.header.size() == 2 && t.header[0] == "start_s" && t.header[1] == "end_s", ErrorKind::Schema,
            source + ": header must be start_s,end_s");
    std::vector<signal::LiftCycleSpan> spans;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto loc = where(source, t.line_numbers[r]);
        signal::LiftCycleSpan s{parse_double(t.rows[r][0], loc), parse_double(t.rows[r][1], loc)};
        require(s.end_s > s.start_s, ErrorKind::Schema, loc + ": span end must exceed start");
        spans.push_back(s);
    }
    return spans;
}

inline std::string envelope_csv(const signal::Envelope& env)
{
    std::string out = "time_s,value_pct_mvc\n";
    for (std::size_t i = 0; i < env.values.size(); ++i) {
        out += fmt_fixed(env.time_of(i), 6);
        out += ',';
        out += fmt_fixed(env.values[i], 6);
        out += '\n';
    }
    return out;
}

} // namespace exo::io
