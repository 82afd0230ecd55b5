#pragma once

// Run configuration. Files use a TOML subset: `[table]` headers,
// `key = value` with strings, numbers, booleans and flat arrays, `#`
// comments. Every key is validated before any work starts; unknown keys
// and tables are rejected.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "exo/control.hpp"
#include "exo/io/text.hpp"
#include "exo/orf/grid.hpp"
#include "exo/orf/surface.hpp"
#include "exo/replay.hpp"
#include "exo/selection.hpp"
#include "exo/signal.hpp"

namespace exo::config {

// ---------------------------------------------------------------------------
// TOML subset

struct Value {
    using Array = std::vector<std::variant<double, std::string>>;
    std::variant<double, bool, std::string, Array> v;
    std::size_t line = 0;
};

/// Keys are "table.key"; top-level keys have no prefix.
using Document = std::map<std::string, Value>;

namespace detail {

inline std::string unquote(std::string_view s, const std::string& loc)
{
    require(s.size() >= 2 && s.back() == '"', ErrorKind::Schema, loc + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c == '\\') {
            require(i + 2 < s.size(), ErrorKind::Schema, loc + ": dangling escape");
            const char n = s[++i];
            switch (n) {
            case 'n': c = '\n'; break;
            case 't': c = '\t'; break;
            case '"': c = '"'; break;
            case '\\': c = '\\'; break;
            default: fail(ErrorKind::Schema, loc + ": unsupported escape \\" + std::string(1, n));
            }
        } else if (c == '"') {
            fail(ErrorKind::Schema, loc + ": unexpected quote");
        }
        out += c;
    }
    return out;
}

inline double number(std::string_view s, const std::string& loc)
{
    std::string clean;
    for (char c : s)
        if (c != '_') clean += c;
    if (!clean.empty() && clean.front() == '+') clean.erase(0, 1);
    return io::parse_double(clean, loc);
}

/// Strips a trailing comment outside of string literals.
inline std::string_view strip_comment(std::string_view line)
{
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && in_str) {
            ++i;
        } else if (line[i] == '"') {
            in_str = !in_str;
        } else if (line[i] == '#' && !in_str) {
            return line.substr(0, i);
        }
    }
    return line;
}

inline Value scalar_or_array(std::string_view s, const std::string& loc)
{
    s = io::trim(s);
    require(!s.empty(), ErrorKind::Schema, loc + ": missing value");
    if (s.front() == '"') return {unquote(s, loc), 0};
    if (s == "true") return {true, 0};
    if (s == "false") return {false, 0};
    if (s.front() == '[') {
        require(s.back() == ']', ErrorKind::Schema, loc + ": arrays must close on the same line");
        Value::Array arr;
        const auto body = io::trim(s.substr(1, s.size() - 2));
        if (!body.empty()) {
            for (auto item : io::split_csv_row(body)) {
                if (item.empty()) continue; // trailing comma
                require(item.front() != '[', ErrorKind::Schema, loc + ": nested arrays are not supported");
                if (item.front() == '"')
                    arr.emplace_back(unquote(item, loc));
                else
                    arr.emplace_back(number(item, loc));
            }
        }
        return {std::move(arr), 0};
    }
    return {number(s, loc), 0};
}

inline bool valid_key(std::string_view k)
{
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return true;
}

} // namespace detail

inline Document parse_toml(std::string_view text, const std::string& source)
{
    Document doc;
    std::string table;
    std::size_t lineno = 0;
    for (auto raw : io::split_lines(text)) {
        ++lineno;
        const auto loc = io::where(source, lineno);
        const auto line = io::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            require(line.back() == ']' && line.size() > 2 && line[1] != '[', ErrorKind::Schema,
                    loc + ": malformed table header");
            table = std::string(io::trim(line.substr(1, line.size() - 2)));
            require(detail::valid_key(table), ErrorKind::Schema, loc + ": invalid table name");
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string_view::npos, ErrorKind::Schema, loc + ": expected key = value");
        const auto key = std::string(io::trim(line.substr(0, eq)));
        require(detail::valid_key(key), ErrorKind::Schema, loc + ": invalid key '" + key + "'");
        const auto full = table.empty() ? key : table + "." + key;
        require(!doc.contains(full), ErrorKind::Schema, loc + ": duplicate key '" + full + "'");
        Value v = detail::scalar_or_array(line.substr(eq + 1), loc);
        v.line = lineno;
        doc.emplace(full, std::move(v));
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Config

struct Config {
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    // signal
    double band_low_hz = 20.0;
    double band_high_hz = 450.0;
    int filter_order = 4;
    double rms_window_ms = 200.0;
    signal::SpanReduction reduction = signal::SpanReduction::Concatenate;

    // orf
    orf::TotalWeights weights{};
    orf::InputDomain domain{};
    int restarts = 5;
    int grid_assistance = 101;
    int grid_payload = 101;

    // selection
    selection::ScoringParams scoring{};
    double lock_threshold_m = 2.0;

    // control
    control::KpylRange k_range{};
    double dwell_s = 1.0;
    payload::PayloadClass fallback_class = payload::PayloadClass::Light;

    // replay
    replay::BackendKind backend = replay::BackendKind::Recorded;
    double oracle_latency_s = 0.1;
};

namespace detail {

struct Reader {
    const Document& doc;
    const std::string& source;
    std::map<std::string, bool> used;

    const Value* find(const std::string& key)
    {
        const auto it = doc.find(key);
        if (it == doc.end()) return nullptr;
        used[key] = true;
        return &it->second;
    }
    std::string loc(const std::string& key, const Value& v) const
    {
        return io::where(source, v.line) + ": " + key;
    }
    void number(const std::string& key, double& out)
    {
        if (const auto* v = find(key)) {
            const auto* d = std::get_if<double>(&v->v);
            require(d != nullptr, ErrorKind::Schema, loc(key, *v) + " must be a number");
            out = *d;
        }
    }
    void integer(const std::string& key, int& out)
    {
        double d = out;
        number(key, d);
        if (const auto it = doc.find(key); it != doc.end())
            require(d == std::floor(d) && std::fabs(d) < 1e9, ErrorKind::Schema,
                    loc(key, it->second) + " must be an integer");
        out = static_cast<int>(d);
    }
    void string(const std::string& key, std::string& out)
    {
        if (const auto* v = find(key)) {
            const auto* s = std::get_if<std::string>(&v->v);
            require(s != nullptr, ErrorKind::Schema, loc(key, *v) + " must be a string");
            out = *s;
        }
    }
    void numbers(const std::string& key, std::vector<double>& out)
    {
        if (const auto* v = find(key)) {
            const auto* a = std::get_if<Value::Array>(&v->v);
            require(a != nullptr, ErrorKind::Schema, loc(key, *v) + " must be an array");
            out.clear();
            for (const auto& item : *a) {
                const auto* d = std::get_if<double>(&item);
                require(d != nullptr, ErrorKind::Schema, loc(key, *v) + " must hold numbers");
                out.push_back(*d);
            }
        }
    }
};

inline void check(bool ok, const std::string& what)
{
    require(ok, ErrorKind::InvalidParameter, "config: " + what);
}

} // namespace detail

/// Module-declared bounds.
inline void validate(const Config& c)
{
    using detail::check;
    check(c.band_low_hz > 0 && c.band_low_hz < c.band_high_hz, "need 0 < band_low_hz < band_high_hz");
    check(c.filter_order >= 2 && c.filter_order % 2 == 0 && c.filter_order <= 12,
          "filter_order must be even, in [2, 12]");
    check(c.rms_window_ms > 0, "rms_window_ms must be positive");
    check(c.weights.emg >= 0 && c.weights.discomfort >= 0 && c.weights.preference >= 0 &&
              std::fabs(c.weights.emg + c.weights.discomfort + c.weights.preference - 1.0) <= 1e-9,
          "weights must be nonnegative and sum to 1");
    check(c.domain.assistance_hi > c.domain.assistance_lo && c.domain.payload_hi_kg > c.domain.payload_lo_kg &&
              c.domain.payload_lo_kg >= 0,
          "invalid optimization domain");
    check(c.restarts >= 1 && c.restarts <= 100, "restarts must lie in [1, 100]");
    check(c.grid_assistance >= 2 && c.grid_payload >= 2 && c.grid_assistance <= 2001 && c.grid_payload <= 2001,
          "grid sizes must lie in [2, 2001]");
    check(c.scoring.lambda_theta >= 0 && c.scoring.lambda_d >= 0, "lambda_theta and lambda_d must be nonnegative");
    check(c.scoring.scale > 0 && c.scoring.temperature > 0, "scale and temperature must be positive");
    check(c.lock_threshold_m > 0, "lock_threshold_m must be positive");
    check(c.k_range.k_min > 0 && c.k_range.k_min <= c.k_range.k_max && c.k_range.k_max <= 1.0,
          "need 0 < k_min <= k_max <= 1");
    check(c.k_range.medium_fraction >= 0 && c.k_range.medium_fraction <= 1, "medium_fraction must lie in [0, 1]");
    check(c.dwell_s >= 0, "dwell_s must be nonnegative");
    check(c.oracle_latency_s >= 0, "oracle_latency_s must be nonnegative");
}

inline Config from_document(const Document& doc, const std::string& source)
{
    Config c;
    detail::Reader r{doc, source, {}};

    double seed = static_cast<double>(c.seed);
    r.number("seed", seed);
    if (const auto it = doc.find("seed"); it != doc.end())
        require(seed >= 0 && seed == std::floor(seed) && seed < 9007199254740992.0, ErrorKind::Schema,
                r.loc("seed", it->second) + " must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    r.string("paths.out_dir", c.out_dir);

    r.number("signal.band_low_hz", c.band_low_hz);
    r.number("signal.band_high_hz", c.band_high_hz);
    r.integer("signal.filter_order", c.filter_order);
    r.number("signal.rms_window_ms", c.rms_window_ms);
    std::string reduction = "concatenate";
    r.string("signal.reduction", reduction);
    require(reduction == "concatenate" || reduction == "per_cycle", ErrorKind::InvalidParameter,
            "config: signal.reduction must be concatenate or per_cycle");
    c.reduction = reduction == "concatenate" ? signal::SpanReduction::Concatenate : signal::SpanReduction::PerCycle;

    std::vector<double> w{c.weights.emg, c.weights.discomfort, c.weights.preference};
    r.numbers("orf.weights", w);
    require(w.size() == 3, ErrorKind::InvalidParameter, "config: orf.weights needs 3 entries");
    c.weights = {w[0], w[1], w[2]};
    r.number("orf.assistance_lo", c.domain.assistance_lo);
    r.number("orf.assistance_hi", c.domain.assistance_hi);
    r.number("orf.payload_lo_kg", c.domain.payload_lo_kg);
    r.number("orf.payload_hi_kg", c.domain.payload_hi_kg);
    r.integer("orf.restarts", c.restarts);
    r.integer("orf.grid_assistance", c.grid_assistance);
    r.integer("orf.grid_payload", c.grid_payload);

    r.number("selection.lambda_theta", c.scoring.lambda_theta);
    r.number("selection.lambda_d", c.scoring.lambda_d);
    r.number("selection.scale", c.scoring.scale);
    r.number("selection.temperature", c.scoring.temperature);
    r.number("selection.lock_threshold_m", c.lock_threshold_m);
    std::string unit = "degrees";
    r.string("selection.angle_unit", unit);
    require(unit == "degrees" || unit == "radians", ErrorKind::InvalidParameter,
            "config: selection.angle_unit must be degrees or radians");
    c.scoring.angle_unit = unit == "degrees" ? selection::AngleUnit::Degrees : selection::AngleUnit::Radians;

    r.number("control.k_min", c.k_range.k_min);
    r.number("control.k_max", c.k_range.k_max);
    r.number("control.medium_fraction", c.k_range.medium_fraction);
    r.number("control.dwell_s", c.dwell_s);
    std::string fb = "light";
    r.string("control.fallback", fb);
    const auto fbc = payload::parse_class(fb);
    require(fbc.has_value(), ErrorKind::InvalidParameter, "config: control.fallback must be light, medium or heavy");
    c.fallback_class = *fbc;

    std::string backend = "recorded";
    r.string("replay.backend", backend);
    require(backend == "recorded" || backend == "oracle", ErrorKind::InvalidParameter,
            "config: replay.backend must be recorded or oracle");
    c.backend = backend == "recorded" ? replay::BackendKind::Recorded : replay::BackendKind::Oracle;
    r.number("replay.oracle_latency_s", c.oracle_latency_s);

    for (const auto& [key, v] : doc)
        require(r.used.contains(key), ErrorKind::Schema, io::where(source, v.line) + ": unknown key '" + key + "'");
    validate(c);
    return c;
}

inline Config load(const std::string& path)
{
    return from_document(parse_toml(io::read_file(path), path), path);
}

// Views consumed by the modules.

inline replay::ReplayConfig replay_config(const Config& c)
{
    replay::ReplayConfig r;
    r.scoring = c.scoring;
    r.lock_threshold_m = c.lock_threshold_m;
    r.control.range = c.k_range;
    r.control.dwell_s = c.dwell_s;
    r.control.fallback.default_class = c.fallback_class;
    r.backend = c.backend;
    r.oracle_latency_s = c.oracle_latency_s;
    r.seed = c.seed;
    return r;
}

} // namespace exo::config
