#include <algorithm>
#include <cstring>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "qbeat/report.hpp"

using namespace qbeat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("qbeat_report_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ScanResult synthetic(std::vector<ScanAxis> axes) {
    ScanResult r;
    r.axes = std::move(axes);
    r.values.resize(r.expected_size());
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = 0.1 * double(i) + 1e-17 * double(i * i);
    return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Csv, NumberFormatRoundTrips) {
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(0.0), "0");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::ldexp(mant(rng), ex(rng));
        EXPECT_EQ(*parse_double(format_double(v)), v);
    }
    EXPECT_FALSE(parse_double("1.5x"));
    EXPECT_FALSE(parse_double(""));
}

TEST(Csv, LineCounts) {
    const auto one = csv_text(synthetic({{"dtau", 0.0, 1.0, 3}}));
    EXPECT_EQ(count_lines(one), 4u);
    EXPECT_EQ(one.substr(0, one.find('\n')), "dtau,probability");
    const auto two = csv_text(synthetic({{"tau", 0.0, 1.0, 2}, {"dtau", 0.0, 1.0, 2}}));
    EXPECT_EQ(count_lines(two), 5u);
    const auto t = parse_csv(two);
    EXPECT_EQ(t.rows[1][0], 0.0);
    EXPECT_EQ(t.rows[1][1], 1.0);
    EXPECT_EQ(t.rows[2][0], 1.0);
    EXPECT_EQ(two.find('\r'), std::string::npos);
}

TEST(Csv, RoundTripIsBitExact) {
    const auto d = scratch("roundtrip");
    auto r = synthetic({{"t0", -1.0, 1.0, 7}, {"separation", 0.0, 3.0, 5}});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1e-3);
    for (auto& v : r.values) v = u(rng);
    const auto path = (d / "r.csv").string();
    write_csv(r, path);
    const auto table = read_csv(path);
    ASSERT_EQ(table.rows.size(), r.values.size());
    for (std::size_t i = 0; i < r.values.size(); ++i) EXPECT_EQ(table.rows[i].back(), r.values[i]);
    EXPECT_EQ(serialize_csv(table), read_text_file(path));
}

TEST(Csv, ParseErrors) {
    EXPECT_THROW(parse_csv(""), ParameterError);
    EXPECT_THROW(parse_csv("a,b\n1\n"), ParameterError);
    EXPECT_THROW(parse_csv("a,b\n1,zz\n"), ParameterError);
    EXPECT_THROW(parse_csv("a,b\n1,2"), ParameterError);
}

TEST(Csv, IoErrorsCarrySystemText) {
    const auto r = synthetic({{"t0", 0.0, 1.0, 2}});
    try {
        write_csv(r, "/nonexistent-dir/x.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(std::strerror(ENOENT)), std::string::npos);
    }
    EXPECT_THROW(read_csv("/nonexistent-dir/x.csv"), IoError);
}

TEST(Csv, RejectsInconsistentGrid) {
    auto r = synthetic({{"t0", 0.0, 1.0, 3}});
    r.values.pop_back();
    EXPECT_THROW(csv_text(r), ParameterError);
}

TEST(Metadata, DeterministicAndComplete) {
    ScanSetup s;
    const auto r = beat_scan(s, {{"dtau", 0.0, 1.0, 3}}, Engine::ClosedForm);
    const auto a = result_metadata(r, {{"note", "x"}}).dump(2);
    const auto b = result_metadata(r, {{"note", "x"}}).dump(2);
    EXPECT_EQ(a, b);
    const auto j = result_metadata(r, {{"note", "x"}});
    EXPECT_EQ(j["engine"], "closed_form");
    EXPECT_EQ(j["points"], 3);
    EXPECT_EQ(j["note"], "x");
    EXPECT_EQ(j["input_delay"], 0.5);
    EXPECT_TRUE(j.contains("units"));
    EXPECT_EQ(j["csv_columns"][1], "probability");
}

TEST(Plot, LinePlotTouchesZero) {
    ScanSetup s;
    const auto r = beat_scan(s, {{"dtau", 0.0, 4.0, 41}}, Engine::ClosedForm);
    const auto svg = plot_svg(r);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    // First point: left edge of the frame at the zero baseline.
    EXPECT_NE(svg.find("points=\"80.00,380.00 "), std::string::npos);
    EXPECT_NE(svg.find(">dtau</text>"), std::string::npos);
}

TEST(Plot, HeatMapHasMonotoneRamp) {
    ScanSetup s;
    const auto r = beat_scan(s, {{"tau", 0.0, 2.0, 6}, {"dtau", 0.0, 2.0, 5}}, Engine::ClosedForm);
    const auto svg = plot_svg(r);
    EXPECT_GE(static_cast<std::size_t>(std::count(svg.begin(), svg.end(), '\n')), 30u + 32u);
    EXPECT_NE(svg.find(">tau</text>"), std::string::npos);
    auto channels = [](const std::string& c) {
        return std::array<int, 3>{std::stoi(c.substr(1, 2), nullptr, 16), std::stoi(c.substr(3, 2), nullptr, 16),
                                  std::stoi(c.substr(5, 2), nullptr, 16)};
    };
    auto prev = channels(detail::ramp_color(0.0));
    for (int k = 1; k <= 100; ++k) {
        const auto c = channels(detail::ramp_color(k / 100.0));
        for (int ch = 0; ch < 3; ++ch) EXPECT_LE(c[ch], prev[ch]);
        prev = c;
    }
}

TEST(Plot, UnsupportedShapesWriteNothing) {
    const auto d = scratch("plot");
    const auto three = synthetic({{"tau", 0.0, 1.0, 2}, {"dtau", 0.0, 1.0, 2}, {"t0", 0.0, 1.0, 2}});
    EXPECT_THROW(emit_plot(three, (d / "three.svg").string()), ParameterError);
    EXPECT_FALSE(fs::exists(d / "three.svg"));
    ScanResult empty;
    empty.axes = {{"t0", 0.0, 1.0, 2}};
    EXPECT_THROW(emit_plot(empty, (d / "empty.svg").string()), ParameterError);
    EXPECT_FALSE(fs::exists(d / "empty.svg"));
    const auto ok = synthetic({{"t0", 0.0, 1.0, 4}});
    emit_plot(ok, (d / "ok.svg").string());
    EXPECT_EQ(read_text_file((d / "ok.svg").string()), plot_svg(ok));
}
