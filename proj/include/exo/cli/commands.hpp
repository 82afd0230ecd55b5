#pragma once

// Command implementations behind `exoctl`. Each command validates all
// inputs before writing anything and writes every output atomically.

#include <algorithm>
#include <filesystem>
#include <cstdio>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "exo/config.hpp"
#include "exo/io/emg_io.hpp"
#include "exo/io/orf_io.hpp"
#include "exo/io/session_io.hpp"
#include "exo/io/torque_io.hpp"
#include "exo/rng.hpp"

namespace exo::cli {

namespace fs = std::filesystem;

enum class Format { Csv, Json, Svg };

inline std::optional<Format> parse_format(std::string_view s)
{
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    if (s == "svg") return Format::Svg;
    return std::nullopt;
}

struct Context {
    config::Config cfg;
    fs::path out_dir = "out";
    std::set<Format> formats{Format::Csv, Format::Json, Format::Svg};

    bool wants(Format f) const { return formats.contains(f); }
};

/// Files written by a command, in write order.
struct Written {
    std::vector<fs::path> files;

    void write(const fs::path& p, std::string_view content)
    {
        io::write_file_atomic(p, content);
        files.push_back(p);
    }
};

// ---------------------------------------------------------------------------
// emg

struct EmgArgs {
    std::vector<fs::path> inputs;
    std::optional<fs::path> spans;
    std::optional<fs::path> mvc;
    /// No-exoskeleton recording of the same muscles, for reduction tables.
    std::optional<fs::path> baseline;
};

struct MuscleResult {
    std::string input;
    std::string muscle;
    signal::Envelope envelope;
    signal::ActivityStats stats;
};

namespace detail {

inline signal::Envelope raw_envelope(const signal::EmgTrace& tr, const config::Config& c)
{
    return signal::rectify_rms(signal::bandpass_filter(tr, c.band_low_hz, c.band_high_hz, c.filter_order),
                               c.rms_window_ms);
}

inline std::map<std::string, double> mvc_peaks(const io::EmgRecording& rec, const config::Config& c)
{
    std::map<std::string, double> out;
    for (const auto& tr : rec.traces) out[tr.muscle_id] = signal::mvc_peak(raw_envelope(tr, c));
    return out;
}

inline std::vector<MuscleResult> process_recording(const io::EmgRecording& rec, const std::string& name,
                                                   const std::optional<std::map<std::string, double>>& mvc,
                                                   const std::vector<signal::LiftCycleSpan>& spans,
                                                   const config::Config& c)
{
    std::vector<MuscleResult> out;
    for (const auto& tr : rec.traces) {
        const auto env = raw_envelope(tr, c);
        double peak = 0.0;
        if (mvc) {
            const auto it = mvc->find(tr.muscle_id);
            require(it != mvc->end(), ErrorKind::Schema, name + ": muscle '" + tr.muscle_id + "' missing from MVC file");
            peak = it->second;
        } else {
            peak = signal::mvc_peak(env);
        }
        auto norm = signal::normalize_mvc(env, peak);
        const auto st = signal::activity_stats(norm, spans, c.reduction);
        out.push_back({name, tr.muscle_id, std::move(norm), st});
    }
    return out;
}

inline bool all_labels_known(const std::vector<MuscleResult>& rs)
{
    return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return signal::muscle_group_of(r.muscle).has_value(); });
}

} // namespace detail

inline Written cmd_emg(const EmgArgs& args, const Context& ctx)
{
    require(!args.inputs.empty(), ErrorKind::InsufficientData, "no EMG inputs");
    const auto& c = ctx.cfg;
    std::vector<signal::LiftCycleSpan> spans;
    if (args.spans) spans = io::parse_spans_csv(io::read_file(*args.spans), args.spans->string());
    std::optional<std::map<std::string, double>> mvc;
    if (args.mvc) mvc = detail::mvc_peaks(io::load_emg(*args.mvc), c);

    std::vector<std::vector<MuscleResult>> per_input;
    for (const auto& in : args.inputs)
        per_input.push_back(detail::process_recording(io::load_emg(in), in.stem().string(), mvc, spans, c));
    std::optional<std::vector<MuscleResult>> baseline;
    if (args.baseline)
        baseline = detail::process_recording(io::load_emg(*args.baseline), args.baseline->stem().string(), mvc,
                                             spans, c);

    Written w;
    if (ctx.wants(Format::Csv)) {
        for (const auto& rs : per_input)
            for (const auto& r : rs)
                w.write(ctx.out_dir / (r.input + "." + r.muscle + ".envelope.csv"), io::envelope_csv(r.envelope));
    }

    std::string stats = "input,muscle,mean_pct_mvc,peak_pct_mvc,exceeds_mvc\n";
    std::string groups = "input,group,mean_pct_mvc,peak_pct_mvc\n";
    std::string reduction = "input,muscle,mean_reduction_pct,peak_reduction_pct\n";
    io::ojson js = io::ojson::array();
    for (const auto& rs : per_input) {
        for (const auto& r : rs) {
            stats += r.input + "," + r.muscle + "," + io::fmt_fixed(r.stats.mean, 6) + "," +
                     io::fmt_fixed(r.stats.peak, 6) + "," + (r.envelope.exceeds_mvc ? "1" : "0") + "\n";
            io::ojson e{{"input", r.input},
                        {"muscle", r.muscle},
                        {"mean_pct_mvc", r.stats.mean},
                        {"peak_pct_mvc", r.stats.peak},
                        {"exceeds_mvc", r.envelope.exceeds_mvc}};
            if (baseline) {
                const auto b = std::find_if(baseline->begin(), baseline->end(),
                                            [&](const auto& x) { return x.muscle == r.muscle; });
                require(b != baseline->end(), ErrorKind::Schema,
                        "baseline lacks muscle '" + r.muscle + "' present in " + r.input);
                const double rm = signal::reduction_percent(b->stats.mean, r.stats.mean);
                const double rp = signal::reduction_percent(b->stats.peak, r.stats.peak);
                reduction += r.input + "," + r.muscle + "," + io::fmt_fixed(rm, 6) + "," + io::fmt_fixed(rp, 6) + "\n";
                e["mean_reduction_pct"] = rm;
                e["peak_reduction_pct"] = rp;
            }
            js.push_back(std::move(e));
        }
        if (detail::all_labels_known(rs)) {
            std::map<std::string, double> means, peaks;
            for (const auto& r : rs) {
                means[r.muscle] = r.stats.mean;
                peaks[r.muscle] = r.stats.peak;
            }
            for (auto [g, name] : {std::pair{signal::MuscleGroup::Back, "back"},
                                   std::pair{signal::MuscleGroup::Legs, "legs"},
                                   std::pair{signal::MuscleGroup::All, "all"}}) {
                const bool any = std::any_of(rs.begin(), rs.end(), [&](const auto& r) {
                    return g == signal::MuscleGroup::All || signal::muscle_group_of(r.muscle) == g;
                });
                if (!any) continue;
                groups += rs.front().input + "," + name + "," + io::fmt_fixed(signal::group_aggregate(means, g), 6) +
                          "," + io::fmt_fixed(signal::group_aggregate(peaks, g), 6) + "\n";
            }
        }
    }
    if (ctx.wants(Format::Csv)) {
        w.write(ctx.out_dir / "emg_stats.csv", stats);
        w.write(ctx.out_dir / "emg_groups.csv", groups);
        if (baseline) w.write(ctx.out_dir / "emg_reduction.csv", reduction);
    }
    if (ctx.wants(Format::Json)) w.write(ctx.out_dir / "emg_stats.json", js.dump(2) + "\n");
    return w;
}

// ---------------------------------------------------------------------------
// orf

struct OrfArgs {
    std::optional<fs::path> samples;
    std::optional<fs::path> questionnaires;
    std::optional<fs::path> votes;
};

struct OrfOutcome {
    orf::PipelineResult result;
    Written written;
};

inline orf::PipelineOptions pipeline_options(const config::Config& c)
{
    orf::PipelineOptions o;
    o.fit.domain = c.domain;
    o.fit.restarts = c.restarts;
    o.fit.seed = c.seed;
    o.weights = c.weights;
    o.grid_assistance = static_cast<std::size_t>(c.grid_assistance);
    o.grid_payload = static_cast<std::size_t>(c.grid_payload);
    return o;
}

inline OrfOutcome cmd_orf(const OrfArgs& args, const Context& ctx)
{
    require(args.samples || args.questionnaires || args.votes, ErrorKind::InsufficientData,
            "orf needs samples, questionnaires or votes");
    io::SamplesByKind samples;
    if (args.samples) {
        samples = io::parse_samples_csv(io::read_file(*args.samples), args.samples->string());
        require(!samples.contains(orf::MetricKind::Total), ErrorKind::Validation,
                args.samples->string() + ": metric kind 'total' is derived, not an input");
    }
    if (args.questionnaires) {
        const auto q = io::parse_questionnaires(io::read_file(*args.questionnaires), args.questionnaires->string());
        auto& d = samples[orf::MetricKind::Discomfort];
        for (const auto& s : orf::discomfort_samples(q)) d.push_back(s);
    }
    if (args.votes) {
        const auto v = io::parse_votes_csv(io::read_file(*args.votes), args.votes->string());
        auto& p = samples[orf::MetricKind::Preference];
        for (const auto& s : orf::preference_samples(v)) p.push_back(s);
    }

    OrfOutcome out{orf::run_pipeline(samples, pipeline_options(ctx.cfg)), {}};
    const auto& r = out.result;
    auto& w = out.written;
    if (ctx.wants(Format::Json)) {
        for (const auto& [k, s] : r.surfaces)
            w.write(ctx.out_dir / ("surface_" + std::string(orf::to_string(k)) + ".json"),
                    io::surface_to_json(s).dump(2) + "\n");
        w.write(ctx.out_dir / "orf_summary.json", io::pipeline_summary(r, ctx.cfg.seed).dump(2) + "\n");
    }
    if (ctx.wants(Format::Csv)) {
        for (const auto& [k, n] : r.normalized)
            w.write(ctx.out_dir / ("grid_" + std::string(orf::to_string(k)) + ".csv"), io::grid_csv(n.function));
        w.write(ctx.out_dir / "grid_total.csv", io::grid_csv(r.total));
        w.write(ctx.out_dir / "optimal_curve.csv", io::curve_csv(r.curve));
    }
    if (ctx.wants(Format::Svg))
        w.write(ctx.out_dir / "total_contour.svg",
                io::contour_svg("Total function and optimal assistance", r.total, r.curve, r.fit, ctx.cfg.domain));
    return out;
}

// ---------------------------------------------------------------------------
// replay

struct ReplayArgs {
    std::vector<fs::path> logs;
    /// Optional recorded-classifier JSONL per log, matched by position.
    std::vector<fs::path> recorded;
    /// Worker threads for independent sessions; 0 picks the hardware count.
    unsigned jobs = 0;
    /// Base torque profile, checked against the hardware limits.
    std::optional<fs::path> torque;
};

struct ReplayOutcome {
    std::vector<replay::SessionReport> reports;
    replay::CohortReport cohort;
    Written written;
};

inline ReplayOutcome cmd_replay(const ReplayArgs& args, const Context& ctx)
{
    require(!args.logs.empty(), ErrorKind::InsufficientData, "no session logs");
    require(args.recorded.empty() || args.recorded.size() == args.logs.size(), ErrorKind::InvalidParameter,
            "give one recorded-output file per log or none");
    std::optional<control::TorqueProfile> torque;
    if (args.torque) {
        torque = io::parse_torque_csv(io::read_file(*args.torque), args.torque->string());
        control::check_hardware_limits(*torque, ctx.cfg.k_range);
    }

    std::vector<replay::SessionLog> logs;
    for (std::size_t i = 0; i < args.logs.size(); ++i) {
        auto log = io::parse_session_jsonl(io::read_file(args.logs[i]), args.logs[i].string());
        if (!args.recorded.empty())
            io::merge_recorded(log, io::parse_recorded_jsonl(io::read_file(args.recorded[i]),
                                                             args.recorded[i].string()));
        if (log.subject.empty()) log.subject = args.logs[i].stem().string();
        try {
            replay::validate(log);
        } catch (const Error& e) {
            fail(e.kind(), args.logs[i].string() + ": " + e.what());
        }
        logs.push_back(std::move(log));
    }

    const auto rc = config::replay_config(ctx.cfg);
    ReplayOutcome out;
    out.reports.resize(logs.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t jobs = std::min<std::size_t>(args.jobs == 0 ? hw : args.jobs, logs.size());
    for (std::size_t base = 0; base < logs.size(); base += jobs) {
        std::vector<std::future<replay::SessionReport>> batch;
        for (std::size_t i = base; i < std::min(logs.size(), base + jobs); ++i)
            batch.push_back(std::async(std::launch::async, [&, i] { return replay::run_session(logs[i], rc); }));
        for (std::size_t k = 0; k < batch.size(); ++k) out.reports[base + k] = batch[k].get();
    }
    out.cohort = replay::aggregate(out.reports);

    auto& w = out.written;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto stem = args.logs[i].stem().string();
        if (ctx.wants(Format::Json)) {
            w.write(ctx.out_dir / (stem + ".report.json"), io::report_json(out.reports[i]).dump(2) + "\n");
            w.write(ctx.out_dir / (stem + ".commands.jsonl"), io::commands_jsonl(out.reports[i].commands));
        }
    }
    if (ctx.wants(Format::Json))
        w.write(ctx.out_dir / "cohort.json", io::cohort_json(out.cohort, ctx.cfg.seed).dump(2) + "\n");
    if (ctx.wants(Format::Csv)) w.write(ctx.out_dir / "cohort.csv", io::cohort_csv(out.cohort));
    if (torque && ctx.wants(Format::Csv))
        w.write(ctx.out_dir / "torque_profiles.csv", io::torque_profiles_csv(*torque, ctx.cfg.k_range));
    if (ctx.wants(Format::Svg)) {
        w.write(ctx.out_dir / "accuracy.svg", io::accuracy_svg(out.cohort));
        w.write(ctx.out_dir / "confusion.svg", io::confusion_svg(out.cohort.pooled));
    }
    return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    int subjects = 12;
    int rounds = 3;
    double flip_probability = 0.0;
    double late_probability = 0.0;
};

/// Subject i draws from stream i of the root seed.
inline Written cmd_synth(const SynthArgs& args, const Context& ctx)
{
    require(args.subjects >= 1 && args.subjects <= 999, ErrorKind::InvalidParameter, "subjects must lie in [1, 999]");
    require(args.rounds >= 1, ErrorKind::InvalidParameter, "rounds must be positive");
    require(args.flip_probability >= 0 && args.flip_probability <= 1 && args.late_probability >= 0 &&
                args.late_probability <= 1,
            ErrorKind::InvalidParameter, "probabilities must lie in [0, 1]");
    Written w;
    for (int i = 0; i < args.subjects; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "S%02d", i + 1);
        replay::SynthSpec spec;
        spec.subject = id;
        spec.rounds = args.rounds;
        spec.flip_probability = args.flip_probability;
        spec.late_probability = args.late_probability;
        spec.seed = derive_seed(ctx.cfg.seed, static_cast<std::uint64_t>(i));
        w.write(ctx.out_dir / ("session_" + std::string(id) + ".jsonl"),
                io::session_jsonl(replay::synth_session(spec)));
    }
    return w;
}

// ---------------------------------------------------------------------------
// evaluate

/// Records CSV `subject,timestamp,lift_onset,truth,predicted`.
inline std::vector<payload::ClassificationRecord> parse_records_csv(std::string_view text, const std::string& source)
{
    const auto t = io::parse_csv(text, source);
    const auto cs = t.column("subject"), ct = t.column("timestamp"), co = t.column("lift_onset"),
               ctr = t.column("truth"), cp = t.column("predicted");
    require(cs >= 0 && ct >= 0 && co >= 0 && ctr >= 0 && cp >= 0, ErrorKind::Schema,
            source + ": header must be subject,timestamp,lift_onset,truth,predicted");
    std::vector<payload::ClassificationRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto loc = io::where(source, t.line_numbers[r]);
        auto cls = [&](std::ptrdiff_t c) {
            const auto k = payload::parse_class(row[static_cast<std::size_t>(c)]);
            require(k.has_value(), ErrorKind::Schema, loc + ": class must be light, medium or heavy");
            return *k;
        };
        payload::ClassificationRecord rec;
        rec.subject = row[static_cast<std::size_t>(cs)];
        rec.timestamp = io::parse_double(row[static_cast<std::size_t>(ct)], loc);
        rec.lift_onset = io::parse_double(row[static_cast<std::size_t>(co)], loc);
        rec.truth = cls(ctr);
        rec.predicted = cls(cp);
        out.push_back(rec);
    }
    return out;
}

struct EvaluateArgs {
    fs::path records;
    bool ignore_timeliness = false;
};

inline Written cmd_evaluate(const EvaluateArgs& args, const Context& ctx)
{
    const auto recs = parse_records_csv(io::read_file(args.records), args.records.string());
    const auto m = payload::evaluate(recs, !args.ignore_timeliness);
    Written w;
    if (ctx.wants(Format::Json)) w.write(ctx.out_dir / "metrics.json", io::metrics_json(m).dump(2) + "\n");
    if (ctx.wants(Format::Svg)) w.write(ctx.out_dir / "confusion.svg", io::confusion_svg(m));
    if (ctx.wants(Format::Csv)) {
        std::string s = "truth,pred_light,pred_medium,pred_heavy,late\n";
        for (auto c : payload::kAllClasses) {
            const auto i = payload::index_of(c);
            s += std::string(payload::to_string(c)) + "," + std::to_string(m.confusion[i][0]) + "," +
                 std::to_string(m.confusion[i][1]) + "," + std::to_string(m.confusion[i][2]) + "," +
                 std::to_string(m.late[i]) + "\n";
        }
        w.write(ctx.out_dir / "confusion.csv", s);
    }
    return w;
}

} // namespace exo::cli
