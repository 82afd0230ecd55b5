// exoctl: EMG processing, optimization-space surfaces, session replay.
//
// Exit codes: 0 success, 1 usage error, 2 domain error (schema, range,
// validation, ...), 3 unexpected failure. Errors print one line:
//   exoctl: error[<kind>]: <message>

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "exo/cli/commands.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> formats;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "TOML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "root seed (overrides the config)");
    sub->add_option("--out-dir", c.out_dir, "output directory (default from config, else ./out)");
    sub->add_option("--format", c.formats, "output formats to write (default: all)")
        ->check(CLI::IsMember({"csv", "json", "svg"}))
        ->delimiter(',');
}

exo::cli::Context make_context(const Common& c)
{
    exo::cli::Context ctx;
    if (!c.config.empty()) ctx.cfg = exo::config::load(c.config);
    if (c.seed) ctx.cfg.seed = *c.seed;
    ctx.out_dir = c.out_dir.empty() ? ctx.cfg.out_dir : c.out_dir;
    if (!c.formats.empty()) {
        ctx.formats.clear();
        for (const auto& f : c.formats) ctx.formats.insert(*exo::cli::parse_format(f));
    }
    return ctx;
}

void report(const exo::cli::Written& w)
{
    for (const auto& f : w.files) std::cout << "wrote " << f.string() << "\n";
}

int error_line(std::string_view kind, std::string_view msg, int code)
{
    std::cerr << "exoctl: error[" << kind << "]: ";
    for (char ch : msg) std::cerr << (ch == '\n' ? ' ' : ch);
    std::cerr << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exoskeleton optimization-space and adaptive-control toolkit", "exoctl"};
    app.require_subcommand(1);
    Common common;

    auto* emg = app.add_subcommand("emg", "filter, rectify, RMS and MVC-normalize EMG recordings");
    exo::cli::EmgArgs emg_args;
    std::vector<std::string> emg_inputs;
    std::string spans, mvc, baseline;
    emg->add_option("inputs", emg_inputs, "EMG CSV files (sidecar JSON next to each)")->required();
    emg->add_option("--spans", spans, "lift-cycle spans CSV")->check(CLI::ExistingFile);
    emg->add_option("--mvc", mvc, "MVC recording CSV")->check(CLI::ExistingFile);
    emg->add_option("--baseline", baseline, "no-exoskeleton recording CSV")->check(CLI::ExistingFile);
    add_common(emg, common);

    auto* orf = app.add_subcommand("orf", "fit surfaces, build the total function and the optimal curve");
    std::string samples, questionnaires, votes;
    orf->add_option("--samples", samples, "samples CSV assistance,payload_kg,value,metric_kind")
        ->check(CLI::ExistingFile);
    orf->add_option("--questionnaires", questionnaires, "questionnaire JSON")->check(CLI::ExistingFile);
    orf->add_option("--votes", votes, "preference votes CSV subject,payload_kg,choice")->check(CLI::ExistingFile);
    add_common(orf, common);

    auto* rep = app.add_subcommand("replay", "replay session logs and score classifications");
    std::vector<std::string> logs, recorded;
    unsigned jobs = 0;
    std::string torque;
    std::string backend;
    rep->add_option("logs", logs, "session JSONL files")->required();
    rep->add_option("--recorded", recorded, "recorded classifier JSONL, one per log");
    rep->add_option("--backend", backend, "classifier backend (overrides the config)")
        ->check(CLI::IsMember({"recorded", "oracle"}));
    rep->add_option("--jobs", jobs, "parallel sessions (0 = hardware threads)");
    rep->add_option("--torque", torque, "base torque profile CSV (time_s,torque_nm)")->check(CLI::ExistingFile);
    add_common(rep, common);

    auto* syn = app.add_subcommand("synth", "generate a seeded synthetic cohort of session logs");
    exo::cli::SynthArgs synth_args;
    syn->add_option("--subjects", synth_args.subjects, "number of subjects")->capture_default_str();
    syn->add_option("--rounds", synth_args.rounds, "rounds per subject")->capture_default_str();
    syn->add_option("--flip", synth_args.flip_probability, "wrong-class probability")->capture_default_str();
    syn->add_option("--late", synth_args.late_probability, "post-onset answer probability")->capture_default_str();
    add_common(syn, common);

    auto* ev = app.add_subcommand("evaluate", "confusion matrix and precision from classification records");
    std::string records;
    bool ignore_timeliness = false;
    ev->add_option("records", records, "records CSV subject,timestamp,lift_onset,truth,predicted")
        ->required()
        ->check(CLI::ExistingFile);
    ev->add_flag("--ignore-timeliness", ignore_timeliness, "count late predictions");
    add_common(ev, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_line("usage", e.what(), 1);
    }

    try {
        auto ctx = make_context(common);
        if (*emg) {
            for (const auto& s : emg_inputs) emg_args.inputs.emplace_back(s);
            if (!spans.empty()) emg_args.spans = spans;
            if (!mvc.empty()) emg_args.mvc = mvc;
            if (!baseline.empty()) emg_args.baseline = baseline;
            report(exo::cli::cmd_emg(emg_args, ctx));
        } else if (*orf) {
            exo::cli::OrfArgs a;
            if (!samples.empty()) a.samples = samples;
            if (!questionnaires.empty()) a.questionnaires = questionnaires;
            if (!votes.empty()) a.votes = votes;
            const auto out = exo::cli::cmd_orf(a, ctx);
            report(out.written);
            if (const auto& f = out.result.fit)
                std::cout << "fit a=" << exo::io::fmt_fixed(f->params.a, 6) << " b=" << exo::io::fmt_fixed(f->params.b, 6)
                          << " c=" << exo::io::fmt_fixed(f->params.c, 6) << " (normalized payload)\n";
            for (const auto& [k, n] : out.result.normalized)
                if (n.degenerate) std::cout << "degenerate surface: " << exo::orf::to_string(k) << "\n";
        } else if (*rep) {
            if (!backend.empty())
                ctx.cfg.backend = backend == "oracle" ? exo::replay::BackendKind::Oracle : exo::replay::BackendKind::Recorded;
            exo::cli::ReplayArgs a;
            for (const auto& s : logs) a.logs.emplace_back(s);
            for (const auto& s : recorded) a.recorded.emplace_back(s);
            a.jobs = jobs;
            if (!torque.empty()) a.torque = torque;
            const auto out = exo::cli::cmd_replay(a, ctx);
            report(out.written);
            std::cout << "sessions " << out.reports.size() << ", mean accuracy "
                      << exo::io::fmt_fixed(100.0 * out.cohort.mean_accuracy, 2) << "%, pooled accuracy "
                      << exo::io::fmt_fixed(100.0 * out.cohort.pooled.accuracy, 2) << "%\n";
        } else if (*syn) {
            report(exo::cli::cmd_synth(synth_args, ctx));
        } else if (*ev) {
            report(exo::cli::cmd_evaluate({records, ignore_timeliness}, ctx));
        }
    } catch (const exo::Error& e) {
        return error_line(exo::to_string(e.kind()), e.what(), 2);
    } catch (const std::exception& e) {
        return error_line("internal", e.what(), 3);
    }
    return 0;
}
