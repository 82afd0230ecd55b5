// Runs the exoctl binary. Golden outputs live in tests/golden/<case>;
// set EXO_UPDATE_GOLDEN=1 to rewrite them from the current build.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "exo/io/text.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FIXTURE_DIR;
const fs::path kGolden = kFixtures.parent_path() / "golden";

struct Run {
    int code = -1;
    std::string out, err;
};

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("exoctl_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run exoctl(const std::string& args)
{
    const auto dir = scratch("stdio");
    const auto out = dir / "out.txt", err = dir / "err.txt";
    const std::string cmd = std::string(EXOCTL_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = exo::io::read_file(out);
    r.err = exo::io::read_file(err);
    return r;
}

std::string fx(const std::string& rel) { return (kFixtures / rel).string(); }

std::vector<std::string> listing(const fs::path& dir)
{
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

/// Byte comparison of every output file against the golden directory.
void expect_golden(const std::string& name, const fs::path& produced)
{
    const auto golden = kGolden / name;
    if (std::getenv("EXO_UPDATE_GOLDEN")) {
        fs::remove_all(golden);
        fs::create_directories(golden);
        for (const auto& f : listing(produced)) fs::copy_file(produced / f, golden / f);
    }
    ASSERT_TRUE(fs::exists(golden)) << "missing golden directory " << golden;
    EXPECT_EQ(listing(produced), listing(golden));
    for (const auto& f : listing(golden)) {
        if (!fs::exists(produced / f)) continue;
        EXPECT_TRUE(exo::io::read_file(produced / f) == exo::io::read_file(golden / f)) << name << "/" << f;
    }
}

std::string cohort_logs()
{
    std::string s;
    for (const auto& f : listing(kFixtures / "cohort")) s += (kFixtures / "cohort" / f).string() + " ";
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// Golden runs

TEST(CliGolden, EmgTwoTrialsWithMvcReference)
{
    const auto out = scratch("emg_mvc");
    const auto r = exoctl("emg " + fx("emg/trial_a.csv") + " " + fx("emg/trial_b.csv") + " --mvc " +
                          fx("emg/mvc.csv") + " --spans " + fx("emg/spans.csv") + " --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    expect_golden("emg_mvc", out);
}

TEST(CliGolden, EmgBaselineReduction)
{
    const auto out = scratch("emg_baseline");
    const auto r = exoctl("emg " + fx("emg/trial_a.csv") + " --baseline " + fx("emg/baseline.csv") + " --mvc " +
                          fx("emg/mvc.csv") + " --spans " + fx("emg/spans.csv") + " --format csv --out-dir " +
                          out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    expect_golden("emg_baseline", out);
}

TEST(CliGolden, EmgPerCycleWithUnlabelledMuscle)
{
    const auto out = scratch("emg_per_cycle");
    const auto r = exoctl("emg " + fx("emg/trial_c.csv") + " --spans " + fx("emg/spans.csv") + " --config " +
                          fx("emg/per_cycle.toml") + " --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    expect_golden("emg_per_cycle", out);
    // No group table rows for an unknown label.
    EXPECT_EQ(exo::io::read_file(out / "emg_groups.csv"), "input,group,mean_pct_mvc,peak_pct_mvc\n");
}

TEST(CliGolden, OrfRecoversPlantedOptimum)
{
    const auto out = scratch("orf");
    const auto r = exoctl("orf --samples " + fx("orf/samples.csv") + " --questionnaires " +
                          fx("orf/questionnaires.json") + " --votes " + fx("orf/votes.csv") + " --config " +
                          fx("orf/orf.toml") + " --seed 1 --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("degenerate surface: discomfort"), std::string::npos);
    EXPECT_NE(r.out.find("degenerate surface: preference"), std::string::npos);

    const auto t = exo::io::parse_csv(exo::io::read_file(out / "optimal_curve.csv"), "curve");
    ASSERT_EQ(t.rows.size(), 41u);
    for (const auto& row : t.rows) {
        const double p = exo::io::parse_double(row[0], "p"), a = exo::io::parse_double(row[1], "a");
        EXPECT_NEAR(a, 0.3 + 0.04 * (p - 5.0), 1e-3) << p;
        EXPECT_EQ(row[3], "0");
    }
    expect_golden("orf", out);
}

TEST(CliGolden, NoisyReplayMetricsArePinned)
{
    const auto out = scratch("replay_noisy");
    const auto r = exoctl("replay " + fx("noisy/session_noisy.jsonl") + " --seed 7 --torque " + fx("torque.csv") +
                          " --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("pooled accuracy 77.78%"), std::string::npos) << r.out;
    expect_golden("replay_noisy", out);
}

TEST(CliGolden, CohortReplay)
{
    const auto out = scratch("replay_cohort");
    const auto r = exoctl("replay " + cohort_logs() + "--seed 2024 --jobs 3 --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    expect_golden("cohort", out);
}

TEST(Cli, SynthRegeneratesTheBundledCohort)
{
    const auto out = scratch("synth");
    const auto r = exoctl("synth --seed 2024 --subjects 12 --flip 0.15 --late 0.05 --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(listing(out), listing(kFixtures / "cohort"));
    for (const auto& f : listing(out))
        EXPECT_TRUE(exo::io::read_file(out / f) == exo::io::read_file(kFixtures / "cohort" / f)) << f;
}

TEST(Cli, OracleBackendScoresEverything)
{
    const auto out = scratch("oracle");
    const auto r = exoctl("replay " + cohort_logs() + "--backend oracle --format csv --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("mean accuracy 100.00%, pooled accuracy 100.00%"), std::string::npos) << r.out;
}

TEST(Cli, RepeatedRunsAreByteIdentical)
{
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    for (const auto& d : {a, b})
        ASSERT_EQ(exoctl("replay " + fx("noisy/session_noisy.jsonl") + " --jobs 1 --out-dir " + d.string()).code, 0);
    for (const auto& f : listing(a)) EXPECT_TRUE(exo::io::read_file(a / f) == exo::io::read_file(b / f)) << f;
}

TEST(Cli, EvaluateRecordsCsv)
{
    const auto dir = scratch("evaluate");
    exo::io::write_file_atomic(dir / "records.csv", "subject,timestamp,lift_onset,truth,predicted\n"
                                                    "A,1.0,2.0,light,light\nA,2.5,2.0,heavy,heavy\n");
    const auto r = exoctl("evaluate " + (dir / "records.csv").string() + " --out-dir " + (dir / "out").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(exo::io::read_file(dir / "out" / "confusion.csv"),
              "truth,pred_light,pred_medium,pred_heavy,late\nlight,1,0,0,0\nmedium,0,0,0,0\nheavy,0,0,0,1\n");
}

// ---------------------------------------------------------------------------
// Exit codes and messages

TEST(CliErrors, HelpExitsZero)
{
    const auto r = exoctl("--help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("replay"), std::string::npos);
    EXPECT_EQ(exoctl("replay --help").code, 0);
}

TEST(CliErrors, UsageErrorsExitOne)
{
    const auto none = exoctl("");
    EXPECT_EQ(none.code, 1);
    EXPECT_EQ(none.err.rfind("exoctl: error[usage]: ", 0), 0u) << none.err;
    EXPECT_EQ(exoctl("replay x.jsonl --bogus").code, 1);
    EXPECT_EQ(exoctl("emg " + fx("emg/trial_a.csv") + " --format png").code, 1);
}

TEST(CliErrors, EmptyInputExitsTwo)
{
    const auto dir = scratch("empty");
    exo::io::write_file_atomic(dir / "empty.csv", "");
    exo::io::write_file_atomic(dir / "empty.json", R"({"rate_hz": 2150})");
    const auto r = exoctl("emg " + (dir / "empty.csv").string() + " --out-dir " + (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("exoctl: error[insufficient-data]: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(CliErrors, RateMismatchNamesTheFile)
{
    const auto dir = scratch("rate");
    fs::copy_file(kFixtures / "emg/trial_a.csv", dir / "fast.csv");
    exo::io::write_file_atomic(dir / "fast.json", R"({"rate_hz": 1000})");
    const auto r = exoctl("emg " + (dir / "fast.csv").string() + " --out-dir " + (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("exoctl: error[schema]: ", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("fast.csv"), std::string::npos) << r.err;
}

TEST(CliErrors, MissingMetricKindIsValidationError)
{
    const auto dir = scratch("kind");
    exo::io::write_file_atomic(dir / "s.csv", "assistance,payload_kg,value\n0,5,1\n1,15,2\n");
    const auto r = exoctl("orf --samples " + (dir / "s.csv").string() + " --out-dir " + (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("exoctl: error[validation]: ", 0), 0u) << r.err;
}

TEST(CliErrors, BadJsonlLineIsReportedWithItsNumber)
{
    const auto dir = scratch("jsonl");
    exo::io::write_file_atomic(dir / "s.jsonl", "{\"type\":\"session\",\"subject\":\"A\",\"seed\":1}\n{oops\n");
    const auto r = exoctl("replay " + (dir / "s.jsonl").string() + " --out-dir " + (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("exoctl: error[schema]: ", 0), 0u) << r.err;
    EXPECT_NE(r.err.find("s.jsonl:2"), std::string::npos) << r.err;
}

TEST(CliErrors, UnknownConfigKeyFailsBeforeWork)
{
    const auto dir = scratch("cfg");
    exo::io::write_file_atomic(dir / "c.toml", "[control]\nkmin = 0.3\n");
    const auto r = exoctl("replay " + fx("noisy/session_noisy.jsonl") + " --config " + (dir / "c.toml").string() +
                          " --out-dir " + (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("c.toml:2: unknown key 'control.kmin'"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(CliErrors, TorqueAboveNominalIsRejected)
{
    const auto dir = scratch("torque");
    exo::io::write_file_atomic(dir / "t.csv", "time_s,torque_nm\n0,0\n0.5,35\n");
    const auto r = exoctl("replay " + fx("noisy/session_noisy.jsonl") + " --torque " + (dir / "t.csv").string() +
                          " --out-dir " + (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("exoctl: error[invalid-parameter]: ", 0), 0u) << r.err;
}
