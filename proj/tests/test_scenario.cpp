#include <filesystem>

#include <gtest/gtest.h>

#include "qbeat/scenario.hpp"

using namespace qbeat;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"([device]
preset = fig1

[source.1]
port = in1

[source.2]
port = in2

[scan]
axis = dtau 0 4 9
)";

// Runs parse_config and returns the issues it reports (empty if none).
std::vector<ConfigIssue> issues_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.issues();
    }
    return {};
}

bool mentions(const std::vector<ConfigIssue>& issues, std::size_t line, const std::string& fragment) {
    for (const auto& i : issues) {
        if (i.line == line && i.message.find(fragment) != std::string::npos) return true;
    }
    return false;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("qbeat_scenario_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Config, MinimalDocumentFillsDefaults) {
    const auto s = parse_config(kMinimal);
    EXPECT_EQ(s.setup.preset, "fig1");
    EXPECT_EQ(s.setup.fig1.input_delay, 0.5);
    EXPECT_EQ(s.setup.max_passes, 2);
    EXPECT_EQ(s.setup.packets[0].width, 1.0);
    ASSERT_EQ(s.axes.size(), 1u);
    EXPECT_EQ(s.axes[0].steps, 9u);
    ASSERT_EQ(s.engines.size(), 1u);
    EXPECT_EQ(s.engines[0], Engine::ClosedForm);
    const auto echo = s.echo();
    EXPECT_EQ(echo["device"]["loop_delay"], 40.0);
    EXPECT_EQ(echo["output"]["prefix"], "scan");
    EXPECT_EQ(echo["device"]["sources"][1]["carrier_freq"], 0.0);
}

TEST(Config, CommentsAndWhitespace) {
    const auto s = parse_config("# header\n[device]   # trailing\n  preset=fig1  \n\n[scan]\naxis =  t0  -1 1   3 # x\n");
    EXPECT_EQ(s.axes[0].name, "t0");
    EXPECT_EQ(s.axes[0].start, -1.0);
}

TEST(Config, StepsZeroNamesKeyAndLine) {
    const auto is = issues_of("[scan]\naxis = dtau 0 4 0\n");
    ASSERT_EQ(is.size(), 1u);
    EXPECT_TRUE(mentions(is, 2, "'axis'"));
    EXPECT_TRUE(mentions(is, 2, "steps"));
}

TEST(Config, UnknownAxisListsValidNames) {
    const auto is = issues_of("[scan]\naxis = dtua 0 4 5\n");
    ASSERT_EQ(is.size(), 1u);
    EXPECT_TRUE(mentions(is, 2, "dtua"));
    EXPECT_TRUE(mentions(is, 2, "tau, dtau, t0, detuning, separation"));
}

TEST(Config, UnknownKeysAndSectionsAreRejected) {
    const auto is = issues_of("[device]\npreset = fig1\nlop_delay = 3\n[sauce.1]\nport = in1\n[scan]\naxis = t0 0 1 2\n");
    EXPECT_TRUE(mentions(is, 3, "unknown key 'lop_delay'"));
    EXPECT_TRUE(mentions(is, 4, "unknown section 'sauce.1'"));
    EXPECT_EQ(is.size(), 2u);
}

TEST(Config, SyntaxErrors) {
    const auto is = issues_of("preset = fig1\n[device\n[scan]\naxis\nengine =\n");
    EXPECT_TRUE(mentions(is, 1, "before any section"));
    EXPECT_TRUE(mentions(is, 2, "malformed section"));
    EXPECT_TRUE(mentions(is, 4, "key = value"));
    EXPECT_TRUE(mentions(is, 5, "no value"));
}

TEST(Config, DuplicatesAreRejected) {
    const auto is = issues_of("[device]\nt0 = 1\nt0 = 2\n[scan]\naxis = t0 0 1 2\naxis = t0 0 2 3\n[device]\n");
    EXPECT_TRUE(mentions(is, 3, "repeats line 2"));
    EXPECT_TRUE(mentions(is, 6, "given twice"));
    EXPECT_TRUE(mentions(is, 7, "appears twice"));
}

TEST(Config, ValueConstraints) {
    const auto is = issues_of(
        "[device]\ninput_delay = -1\nshifter_delay = abc\nmax_passes = 2.5\nmirror_reflectivity = 0 1.2\n"
        "[source.1]\nwidth = 0\n[scan]\nengine = fast\nquantity = loud\naxis = tau -1 1 3\n[output]\nformats = csv pdf\n");
    EXPECT_TRUE(mentions(is, 2, "must be >= 0"));
    EXPECT_TRUE(mentions(is, 3, "not a finite number"));
    EXPECT_TRUE(mentions(is, 4, "not an integer"));
    EXPECT_TRUE(mentions(is, 5, "|r| <= 1"));
    EXPECT_TRUE(mentions(is, 7, "'width' must be > 0"));
    EXPECT_TRUE(mentions(is, 9, "unknown engine 'fast'"));
    EXPECT_TRUE(mentions(is, 10, "unknown quantity 'loud'"));
    EXPECT_TRUE(mentions(is, 11, "must stay >= 0"));
    EXPECT_TRUE(mentions(is, 13, "unknown format 'pdf'"));
}

TEST(Config, PresetSpecificKeys) {
    const auto is = issues_of(
        "[device]\npreset = beam_splitter\ninput_delay = 1\nnode = source x\n[scan]\nengine = closed_form\naxis = dtau 0 1 2\n");
    EXPECT_TRUE(mentions(is, 3, "only applies to preset fig1"));
    EXPECT_TRUE(mentions(is, 4, "only applies to preset custom"));
    EXPECT_TRUE(mentions(is, 6, "closed_form needs preset fig1"));
    EXPECT_TRUE(mentions(is, 7, "needs preset fig1"));
    const auto fig1 = issues_of("[device]\ndetection_times = 0 0\n[scan]\naxis = t0 0 1 2\n");
    EXPECT_TRUE(mentions(fig1, 2, "does not apply to preset fig1"));
}

TEST(Config, PortsMustExist) {
    const auto is = issues_of("[device]\ndetectors = det1 dump9\n[source.1]\nport = det1\n[source.2]\nport = in2\n[scan]\naxis = t0 0 1 2\n");
    EXPECT_TRUE(mentions(is, 4, "is not a source"));
    EXPECT_TRUE(mentions(is, 2, "'dump9' is not a detector"));
    const auto same = issues_of("[source.2]\nport = in1\n[scan]\naxis = t0 0 1 2\n");
    EXPECT_TRUE(mentions(same, 2, "distinct ports"));
}

TEST(Config, CustomDevice) {
    const std::string doc = R"([device]
preset = custom
node = source a
node = source b
node = beam_splitter bs
node = detector x
node = detector y
edge = a 0 bs 0
edge = b 0 bs 1
edge = bs 0 x 0
edge = bs 1 y 0
detectors = x y
max_passes = 0
[source.1]
port = a
[source.2]
port = b
center_time = 1
[scan]
axis = separation -1 1 5
)";
    const auto s = parse_config(doc);
    ASSERT_TRUE(s.setup.device);
    EXPECT_EQ(s.setup.device->nodes().size(), 5u);
    EXPECT_EQ(s.engines[0], Engine::HistorySum);
    const auto r = run_scenario(s, {1, std::nullopt, false});
    EXPECT_EQ(r.results[0].values.size(), 5u);
    EXPECT_EQ(r.results[0].values[2], 0.0);  // simultaneous clicks at a splitter
}

TEST(Config, CustomDeviceDiagnosticsPointAtNodes) {
    const auto is = issues_of(R"([device]
preset = custom
node = source a
node = source b
node = beam_splitter bs
node = detector x
node = laser z
edge = a 0 bs 0
edge = bs 0 x 0
edge = q 0 x 0
[scan]
axis = t0 0 1 2
)");
    EXPECT_TRUE(mentions(is, 7, "unknown node kind 'laser'"));
    EXPECT_TRUE(mentions(is, 10, "unknown node 'q'"));
    const auto structural = issues_of(R"([device]
preset = custom
node = source a
node = source b
node = beam_splitter bs
node = detector x
edge = a 0 bs 0
edge = bs 0 x 0
[scan]
axis = t0 0 1 2
)");
    EXPECT_TRUE(mentions(structural, 5, "device node 'bs'"));
    EXPECT_TRUE(mentions(structural, 4, "device node 'b'"));
}

TEST(Config, ReportsAllIssuesAtOnce) {
    const auto is = issues_of("[device]\nfoo = 1\nbar = 2\n[scan]\naxis = x 0 1 2\n");
    EXPECT_EQ(is.size(), 3u);
    try {
        parse_config("[device]\nfoo = 1\n");
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2: unknown key 'foo'"), std::string::npos);
    }
}

TEST(Config, EngineOverride) {
    auto s = parse_config(kMinimal);
    override_engine(s, "both");
    EXPECT_EQ(s.engines.size(), 2u);
    EXPECT_THROW(override_engine(s, "warp"), ConfigError);
    auto bs = parse_config("[device]\npreset = beam_splitter\n[scan]\naxis = t0 0 1 2\n");
    EXPECT_THROW(override_engine(bs, "closed_form"), ConfigError);
}

TEST(Run, Fig1DtauScanBothEngines) {
    auto s = parse_config(std::string(kMinimal) + "engine = both\n");
    const auto dir = scratch("both");
    const auto rep = run_scenario(s, {1, dir.string(), true});
    ASSERT_EQ(rep.results.size(), 2u);
    for (const auto& r : rep.results) EXPECT_EQ(r.values.front(), 0.0);
    ASSERT_TRUE(rep.agreement);
    EXPECT_LT(rep.agreement->coefficient_of_variation, 1e-9);
    EXPECT_EQ(rep.files.size(), 6u);
    for (const auto& f : rep.files) EXPECT_TRUE(fs::exists(f)) << f;
    const auto meta = nlohmann::json::parse(read_text_file((dir / "scan.history_sum.meta.json").string()));
    EXPECT_LT(meta["engine_agreement"]["ratio_coefficient_of_variation"].get<double>(), 1e-9);
    EXPECT_EQ(meta["scenario"]["axes"][0]["name"], "dtau");
}

TEST(Run, RepeatedRunsAreByteIdentical) {
    auto s = parse_config(std::string(kMinimal) + "engine = history_sum\n");
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    run_scenario(s, {1, a.string(), true});
    run_scenario(s, {3, b.string(), true});
    for (const char* f : {"scan.history_sum.csv", "scan.history_sum.meta.json", "scan.history_sum.svg"}) {
        EXPECT_EQ(read_text_file((a / f).string()), read_text_file((b / f).string())) << f;
    }
}

TEST(Run, FormatsSelectOutputs) {
    auto s = parse_config(std::string(kMinimal) + "[output]\nformats = csv\nprefix = only\n");
    const auto dir = scratch("formats");
    const auto rep = run_scenario(s, {1, dir.string(), true});
    EXPECT_TRUE(fs::exists(dir / "only.closed_form.csv"));
    EXPECT_TRUE(fs::exists(dir / "only.closed_form.meta.json"));
    EXPECT_FALSE(fs::exists(dir / "only.closed_form.svg"));
}

TEST(Run, UnwritableDirectoryIsIoError) {
    auto s = parse_config(kMinimal);
    EXPECT_THROW(run_scenario(s, {1, std::string("/proc/qbeat-no-such-dir"), true}), IoError);
}

TEST(Samples, AllShippedConfigsParse) {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(QBEAT_SAMPLES_DIR)) {
        if (entry.path().extension() != ".conf") continue;
        EXPECT_NO_THROW(parse_config(read_text_file(entry.path().string()))) << entry.path();
        ++n;
    }
    EXPECT_GE(n, 4u);
}
