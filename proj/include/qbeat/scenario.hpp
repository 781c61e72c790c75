#pragma once

// Scenario documents and the runner behind the command-line tool.
//
// A document is a sequence of sections holding `key = value` lines:
//
//   [device]    preset, fig1 delays, max_passes, t0, separation, detectors,
//               detection_times, and node/edge lines for preset = custom
//   [source.1]  port, center_time, width, carrier_freq, phase_offset
//   [source.2]  same keys
//   [scan]      engine, quantity, axis = <name> <start> <stop> <steps>
//   [output]    dir, prefix, formats
//
// `#` starts a comment. Every unknown section, key or axis is an error.

#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbeat/report.hpp"
#include "qbeat/scan.hpp"

namespace qbeat {

/// A scan or plot failed after the scenario was accepted.
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputOptions {
    std::string dir = ".";
    std::string prefix = "scan";
    bool csv = true;
    bool svg = true;
};

struct Scenario {
    ScanSetup setup;
    std::vector<ScanAxis> axes;
    std::vector<Engine> engines;
    OutputOptions output;

    /// Every setting, defaults included.
    nlohmann::json echo() const {
        nlohmann::json j;
        j["device"] = setup_provenance(setup);
        j["engines"] = nlohmann::json::array();
        for (auto e : engines) j["engines"].push_back(to_string(e));
        j["axes"] = nlohmann::json::array();
        for (const auto& a : axes) j["axes"].push_back(to_json(a));
        j["output"] = {{"dir", output.dir}, {"prefix", output.prefix}, {"csv", output.csv}, {"svg", output.svg}};
        return j;
    }
};

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct Section {
    std::size_t line = 0;
    std::vector<Entry> entries;
};

inline const std::map<std::string, std::set<std::string>>& section_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"device",
         {"preset", "input_delay", "shifter_delay", "loop_delay", "mirror_reflectivity", "max_passes", "t0",
          "separation", "detectors", "detection_times", "node", "edge"}},
        {"source.1", {"port", "center_time", "width", "carrier_freq", "phase_offset"}},
        {"source.2", {"port", "center_time", "width", "carrier_freq", "phase_offset"}},
        {"scan", {"engine", "quantity", "axis"}},
        {"output", {"dir", "prefix", "formats"}},
    };
    return keys;
}

inline bool repeatable(const std::string& key) { return key == "axis" || key == "node" || key == "edge"; }

class Parser {
public:
    std::vector<ConfigIssue> issues;

    void error(std::size_t line, std::string msg) { issues.push_back({line, std::move(msg)}); }

    std::optional<double> number(const Entry& e, std::string_view token) {
        double v = 0.0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
            error(e.line, "key '" + e.key + "': '" + std::string(token) + "' is not a finite number");
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> number(const Entry& e) {
        const auto w = split_words(e.value);
        if (w.size() != 1) {
            error(e.line, "key '" + e.key + "' takes exactly one number");
            return std::nullopt;
        }
        return number(e, w[0]);
    }

    std::optional<long long> integer(const Entry& e, std::string_view token) {
        long long v = 0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
            error(e.line, "key '" + e.key + "': '" + std::string(token) + "' is not an integer");
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> non_negative(const Entry& e) {
        auto v = number(e);
        if (v && *v < 0.0) {
            error(e.line, "key '" + e.key + "' must be >= 0");
            return std::nullopt;
        }
        return v;
    }
};

}  // namespace detail

/// Parses and fully validates a scenario document. All problems found are
/// reported together, each with its line number.
inline Scenario parse_config(std::string_view text) {
    using detail::Entry;
    detail::Parser ps;
    std::map<std::string, detail::Section> sections;
    std::string current;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                ps.error(line_no, "malformed section header");
                current.clear();
                continue;
            }
            const std::string name(detail::trim(line.substr(1, line.size() - 2)));
            if (!detail::section_keys().count(name)) {
                ps.error(line_no, "unknown section '" + name + "'; valid sections: device, source.1, source.2, scan, output");
                current = "?";
                continue;
            }
            if (sections.count(name)) {
                ps.error(line_no, "section '" + name + "' appears twice (first at line " +
                                      std::to_string(sections[name].line) + ")");
            } else {
                sections[name].line = line_no;
            }
            current = name;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            ps.error(line_no, "expected 'key = value'");
            continue;
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (current.empty()) {
            ps.error(line_no, "key '" + key + "' appears before any section");
            continue;
        }
        if (current == "?") continue;  // already reported the section
        if (key.empty()) {
            ps.error(line_no, "missing key before '='");
            continue;
        }
        if (!detail::section_keys().at(current).count(key)) {
            ps.error(line_no, "unknown key '" + key + "' in section [" + current + "]");
            continue;
        }
        if (value.empty()) {
            ps.error(line_no, "key '" + key + "' has no value");
            continue;
        }
        auto& sec = sections[current];
        if (!detail::repeatable(key)) {
            bool dup = false;
            for (const auto& e : sec.entries) {
                if (e.key == key) {
                    ps.error(line_no, "key '" + key + "' repeats line " + std::to_string(e.line));
                    dup = true;
                    break;
                }
            }
            if (dup) continue;
        }
        sec.entries.push_back({key, value, line_no});
    }

    auto entries = [&](const std::string& sec, const std::string& key) {
        std::vector<Entry> out;
        if (auto it = sections.find(sec); it != sections.end()) {
            for (const auto& e : it->second.entries) {
                if (e.key == key) out.push_back(e);
            }
        }
        return out;
    };
    auto entry = [&](const std::string& sec, const std::string& key) -> std::optional<Entry> {
        auto all = entries(sec, key);
        if (all.empty()) return std::nullopt;
        return all.front();
    };

    Scenario sc;
    auto& setup = sc.setup;

    // [device]
    std::size_t preset_line = 0;
    if (auto e = entry("device", "preset")) {
        preset_line = e->line;
        static const std::set<std::string> presets{"fig1", "beam_splitter", "pass_through", "custom"};
        if (!presets.count(e->value)) {
            ps.error(e->line, "unknown preset '" + e->value + "'; valid presets: beam_splitter, custom, fig1, pass_through");
        } else {
            setup.preset = e->value;
        }
    }
    const bool fig1 = setup.is_fig1();
    for (const char* k : {"input_delay", "shifter_delay", "loop_delay", "mirror_reflectivity"}) {
        if (auto e = entry("device", k); e && !fig1) ps.error(e->line, std::string("key '") + k + "' only applies to preset fig1");
    }
    for (const char* k : {"node", "edge"}) {
        for (const auto& e : entries("device", k)) {
            if (setup.preset != "custom") ps.error(e.line, std::string("key '") + k + "' only applies to preset custom");
        }
    }
    if (auto e = entry("device", "detection_times"); e && fig1) {
        ps.error(e->line, "key 'detection_times' does not apply to preset fig1; its timing follows the device delays");
    }
    if (fig1) {
        if (auto e = entry("device", "input_delay")) {
            if (auto v = ps.non_negative(*e)) setup.fig1.input_delay = *v;
        }
        if (auto e = entry("device", "shifter_delay")) {
            if (auto v = ps.non_negative(*e)) setup.fig1.shifter_delay = *v;
        }
        if (auto e = entry("device", "loop_delay")) {
            if (auto v = ps.non_negative(*e)) setup.fig1.loop_delay = *v;
        }
        if (auto e = entry("device", "mirror_reflectivity")) {
            const auto w = split_words(e->value);
            if (w.empty() || w.size() > 2) {
                ps.error(e->line, "key 'mirror_reflectivity' takes 're' or 're im'");
            } else {
                auto re = ps.number(*e, w[0]);
                auto im = w.size() == 2 ? ps.number(*e, w[1]) : std::optional<double>(0.0);
                if (re && im) {
                    const Complex r{*re, *im};
                    if (std::abs(r) > 1.0) ps.error(e->line, "key 'mirror_reflectivity' must satisfy |r| <= 1");
                    else setup.fig1.mirror_reflectivity = r;
                }
            }
        }
    }
    if (auto e = entry("device", "max_passes")) {
        const auto w = split_words(e->value);
        if (w.size() != 1) {
            ps.error(e->line, "key 'max_passes' takes one integer");
        } else if (auto v = ps.integer(*e, w[0])) {
            if (*v < 0 || *v > 64) ps.error(e->line, "key 'max_passes' must be in [0, 64]");
            else setup.max_passes = static_cast<int>(*v);
        }
    }
    if (auto e = entry("device", "t0")) {
        if (auto v = ps.number(*e)) setup.t0 = *v;
    }
    if (auto e = entry("device", "separation")) {
        if (auto v = ps.number(*e)) setup.separation = *v;
    }
    std::size_t detectors_line = preset_line;
    if (auto e = entry("device", "detectors")) {
        detectors_line = e->line;
        const auto w = split_words(e->value);
        if (w.size() != 2) ps.error(e->line, "key 'detectors' takes two port names");
        else setup.detectors = {w[0], w[1]};
    }
    if (auto e = entry("device", "detection_times")) {
        const auto w = split_words(e->value);
        if (w.size() != 2) {
            ps.error(e->line, "key 'detection_times' takes two numbers");
        } else {
            auto a = ps.number(*e, w[0]);
            auto b = ps.number(*e, w[1]);
            if (a && b) setup.detection_times = {*a, *b};
        }
    }

    // Device graph.
    std::optional<DeviceSpec> device;
    std::map<std::string, std::size_t> node_lines;
    if (setup.preset == "custom") {
        DeviceBuilder b;
        std::map<std::string, NodeId> ids;
        for (const auto& e : entries("device", "node")) {
            const auto w = split_words(e.value);
            if (w.size() < 2) {
                ps.error(e.line, "key 'node' takes '<kind> <name> [parameters]'");
                continue;
            }
            const auto& kind = w[0];
            const auto& name = w[1];
            if (ids.count(name)) {
                ps.error(e.line, "node '" + name + "' defined twice");
                continue;
            }
            auto arity = [&](std::size_t lo, std::size_t hi) {
                if (w.size() < lo || w.size() > hi) {
                    ps.error(e.line, "node kind '" + kind + "' takes " + std::to_string(lo - 2) +
                                         (hi > lo ? " to " + std::to_string(hi - 2) : std::string()) + " parameter(s)");
                    return false;
                }
                return true;
            };
            if (kind == "source") {
                if (arity(2, 2)) ids[name] = b.add_source(name);
            } else if (kind == "detector") {
                if (arity(2, 2)) ids[name] = b.add_detector(name);
            } else if (kind == "beam_splitter") {
                if (arity(2, 2)) ids[name] = b.add_beam_splitter(name);
            } else if (kind == "phase_shifter") {
                if (!arity(3, 3)) continue;
                auto d = ps.number(e, w[2]);
                if (d && *d < 0.0) ps.error(e.line, "phase_shifter delay must be >= 0");
                else if (d) ids[name] = b.add_phase_shifter(name, *d);
            } else if (kind == "mirror") {
                if (!arity(3, 4)) continue;
                auto re = ps.number(e, w[2]);
                auto im = w.size() == 4 ? ps.number(e, w[3]) : std::optional<double>(0.0);
                if (re && im) {
                    if (std::abs(Complex{*re, *im}) > 1.0) ps.error(e.line, "mirror reflectivity must satisfy |r| <= 1");
                    else ids[name] = b.add_mirror(name, {*re, *im});
                }
            } else {
                ps.error(e.line, "unknown node kind '" + kind +
                                     "'; valid kinds: beam_splitter, detector, mirror, phase_shifter, source");
                continue;
            }
            node_lines[name] = e.line;
        }
        for (const auto& e : entries("device", "edge")) {
            const auto w = split_words(e.value);
            if (w.size() != 4 && w.size() != 5) {
                ps.error(e.line, "key 'edge' takes '<from> <port> <to> <port> [delay]'");
                continue;
            }
            bool ok = true;
            for (std::size_t k : {0u, 2u}) {
                if (!ids.count(w[k])) {
                    ps.error(e.line, "edge references unknown node '" + w[k] + "'");
                    ok = false;
                }
            }
            auto fp = ps.integer(e, w[1]);
            auto tp = ps.integer(e, w[3]);
            auto d = w.size() == 5 ? ps.number(e, w[4]) : std::optional<double>(0.0);
            if (!ok || !fp || !tp || !d) continue;
            if (*fp < 0 || *tp < 0) {
                ps.error(e.line, "edge ports must be >= 0");
                continue;
            }
            b.connect(ids[w[0]], static_cast<unsigned>(*fp), ids[w[2]], static_cast<unsigned>(*tp), *d);
        }
        if (ids.empty()) {
            ps.error(preset_line, "preset custom needs at least one 'node' line");
        } else if (ps.issues.empty()) {
            auto spec = b.build();
            const auto diags = validate_device(spec);
            for (const auto& dg : diags) {
                const auto& name = dg.node;
                ps.error(node_lines.count(name) ? node_lines[name] : preset_line,
                         "device node '" + name + "': " + dg.rule);
            }
            if (diags.empty()) device = std::move(spec);
        }
    } else if (fig1) {
        try {
            device = build_fig1_device(setup.fig1);
        } catch (const ParameterError& ex) {
            ps.error(preset_line, ex.what());
        }
    } else if (setup.preset == "beam_splitter") {
        device = build_beam_splitter_device();
    } else {
        device = build_pass_through_device();
    }
    if (!fig1) setup.device = device;

    // Sources.
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string sec = "source." + std::to_string(k + 1);
        auto& p = setup.packets[k];
        if (auto e = entry(sec, "port")) {
            const auto w = split_words(e->value);
            if (w.size() != 1) ps.error(e->line, "key 'port' takes one port name");
            else setup.source_ports[k] = w[0];
        }
        if (auto e = entry(sec, "center_time")) {
            if (auto v = ps.number(*e)) p.center_time = *v;
        }
        if (auto e = entry(sec, "width")) {
            if (auto v = ps.number(*e)) {
                if (*v > 0.0) p.width = *v;
                else ps.error(e->line, "key 'width' must be > 0");
            }
        }
        if (auto e = entry(sec, "carrier_freq")) {
            if (auto v = ps.number(*e)) p.carrier_freq = *v;
        }
        if (auto e = entry(sec, "phase_offset")) {
            if (auto v = ps.number(*e)) p.phase_offset = *v;
        }
    }
    if (device) {
        for (std::size_t k = 0; k < 2; ++k) {
            const std::string sec = "source." + std::to_string(k + 1);
            const auto e = entry(sec, "port");
            const std::size_t line = e ? e->line : (sections.count(sec) ? sections[sec].line : 0);
            const auto id = device->find(setup.source_ports[k]);
            if (!id || device->node(*id).kind != NodeKind::Source) {
                ps.error(line, "[" + sec + "] port '" + setup.source_ports[k] + "' is not a source of the device");
            }
        }
        if (setup.source_ports[0] == setup.source_ports[1]) {
            const auto e = entry("source.2", "port");
            ps.error(e ? e->line : 0, "the two sources must use distinct ports");
        }
        for (const auto& d : setup.detectors) {
            const auto id = device->find(d);
            if (!id || device->node(*id).kind != NodeKind::Detector) {
                ps.error(detectors_line, "detector '" + d + "' is not a detector of the device");
            }
        }
    }

    // [scan]
    std::size_t engine_line = 0;
    if (auto e = entry("scan", "engine")) {
        engine_line = e->line;
        if (e->value == "both") {
            sc.engines = {Engine::ClosedForm, Engine::HistorySum};
        } else if (auto en = parse_engine(e->value)) {
            sc.engines = {*en};
        } else {
            ps.error(e->line, "unknown engine '" + e->value + "'; valid engines: both, closed_form, history_sum");
        }
    } else {
        sc.engines = {fig1 ? Engine::ClosedForm : Engine::HistorySum};
    }
    if (!fig1 && std::find(sc.engines.begin(), sc.engines.end(), Engine::ClosedForm) != sc.engines.end()) {
        ps.error(engine_line, "engine closed_form needs preset fig1");
    }
    if (auto e = entry("scan", "quantity")) {
        if (auto q = parse_quantity(e->value)) setup.quantity = *q;
        else ps.error(e->line, "unknown quantity '" + e->value + "'; valid quantities: density, normalized");
    }
    const auto axis_entries = entries("scan", "axis");
    for (const auto& e : axis_entries) {
        const auto w = split_words(e.value);
        if (w.size() != 4) {
            ps.error(e.line, "key 'axis' takes '<name> <start> <stop> <steps>'");
            continue;
        }
        if (!is_axis_name(w[0])) {
            ps.error(e.line, "unknown axis '" + w[0] + "'; valid axes: " + axis_name_list());
            continue;
        }
        if ((w[0] == "tau" || w[0] == "dtau") && !fig1) {
            ps.error(e.line, "axis '" + w[0] + "' needs preset fig1");
            continue;
        }
        auto lo = ps.number(e, w[1]);
        auto hi = ps.number(e, w[2]);
        auto steps = ps.integer(e, w[3]);
        if (!lo || !hi || !steps) continue;
        if (*steps < 1) {
            ps.error(e.line, "key 'axis' (" + w[0] + "): steps must be >= 1, got " + w[3]);
            continue;
        }
        if (*steps > 1 && *lo == *hi) {
            ps.error(e.line, "key 'axis' (" + w[0] + "): start equals stop with more than one step");
            continue;
        }
        if ((w[0] == "tau" || w[0] == "dtau") && (*lo < 0.0 || *hi < 0.0)) {
            ps.error(e.line, "axis '" + w[0] + "' is a delay and must stay >= 0");
            continue;
        }
        bool dup = false;
        for (const auto& a : sc.axes) dup = dup || a.name == w[0];
        if (dup) {
            ps.error(e.line, "axis '" + w[0] + "' given twice");
            continue;
        }
        sc.axes.push_back({w[0], *lo, *hi, static_cast<std::size_t>(*steps)});
    }
    if (axis_entries.empty()) {
        ps.error(sections.count("scan") ? sections["scan"].line : 0, "at least one 'axis' line is required in [scan]");
    }

    // [output]
    if (auto e = entry("output", "dir")) sc.output.dir = e->value;
    if (auto e = entry("output", "prefix")) {
        if (e->value.find_first_of("/\\ ") != std::string::npos) ps.error(e->line, "key 'prefix' must be a plain file name");
        else sc.output.prefix = e->value;
    }
    if (auto e = entry("output", "formats")) {
        sc.output.csv = sc.output.svg = false;
        for (const auto& f : split_words(e->value)) {
            if (f == "csv") sc.output.csv = true;
            else if (f == "svg") sc.output.svg = true;
            else ps.error(e->line, "unknown format '" + f + "'; valid formats: csv, svg");
        }
        if (sc.output.svg && sc.axes.size() > 2) ps.error(e->line, "format svg supports at most 2 axes");
    } else if (sc.axes.size() > 2) {
        sc.output.svg = false;
    }

    if (!ps.issues.empty()) throw ConfigError(std::move(ps.issues));
    return sc;
}

/// Replaces the document's engine choice ("closed_form", "history_sum" or
/// "both").
inline void override_engine(Scenario& s, const std::string& name) {
    std::vector<Engine> engines;
    if (name == "both") engines = {Engine::ClosedForm, Engine::HistorySum};
    else if (auto e = parse_engine(name)) engines = {*e};
    else throw ConfigError({{0, "unknown engine '" + name + "'; valid engines: both, closed_form, history_sum"}});
    if (!s.setup.is_fig1() && engines.front() == Engine::ClosedForm) {
        throw ConfigError({{0, "engine closed_form needs preset fig1"}});
    }
    s.engines = std::move(engines);
}

struct RunOptions {
    unsigned threads = 1;  // 0 = hardware concurrency
    std::optional<std::string> out_dir;
    bool write_files = true;
};

struct RunReport {
    std::vector<ScanResult> results;
    std::optional<EngineAgreement> agreement;
    std::vector<std::string> files;
};

inline nlohmann::json to_json(const EngineAgreement& a) {
    return {{"points_compared", a.points},
            {"mean_ratio_history_over_closed", a.mean_ratio},
            {"ratio_coefficient_of_variation", a.coefficient_of_variation}};
}

/// Runs every selected engine and writes <prefix>.<engine>.csv, the
/// .meta.json sidecar and the .svg plot into the output directory.
inline RunReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
    RunReport rep;
    for (auto e : s.engines) {
        try {
            rep.results.push_back(beat_scan(s.setup, s.axes, e, opt.threads));
        } catch (const IoError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ComputationError(std::string("scan with engine ") + to_string(e) + " on preset " +
                                   s.setup.preset + " failed: " + ex.what());
        }
    }
    nlohmann::json extra;
    extra["scenario"] = s.echo();
    if (rep.results.size() == 2) {
        rep.agreement = compare_engines(rep.results[0], rep.results[1]);
        extra["engine_agreement"] = to_json(*rep.agreement);
    }
    if (!opt.write_files) return rep;

    const std::filesystem::path dir = opt.out_dir.value_or(s.output.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());
    for (const auto& r : rep.results) {
        const auto stem = (dir / (s.output.prefix + "." + to_string(r.engine))).string();
        std::string svg;
        if (s.output.svg) {
            try {
                svg = plot_svg(r);
            } catch (const ParameterError& ex) {
                throw ComputationError(std::string("plot failed: ") + ex.what());
            }
        }
        if (s.output.csv) {
            write_csv(r, stem + ".csv");
            rep.files.push_back(stem + ".csv");
        }
        write_metadata(r, stem + ".meta.json", extra);
        rep.files.push_back(stem + ".meta.json");
        if (s.output.svg) {
            write_text_file(stem + ".svg", svg);
            rep.files.push_back(stem + ".svg");
        }
    }
    return rep;
}

}  // namespace qbeat
