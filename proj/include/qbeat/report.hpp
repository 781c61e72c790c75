#pragma once

// Serialization of scan results: CSV grid, JSON metadata sidecar and an SVG
// plot. All writers are byte-deterministic for equal inputs.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbeat/scan.hpp"

namespace qbeat {

/// Shortest-form rendering with 17 significant digits, which round-trips
/// every finite double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError(path + ": " + std::strerror(errno));
    const std::size_t n = std::fwrite(content.data(), 1, content.size(), f);
    const int write_errno = errno;
    if (n != content.size()) {
        std::fclose(f);
        throw IoError(path + ": " + std::strerror(write_errno));
    }
    if (std::fclose(f) != 0) throw IoError(path + ": " + std::strerror(errno));
}

inline std::string read_text_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError(path + ": " + std::strerror(errno));
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    const bool bad = std::ferror(f) != 0;
    std::fclose(f);
    if (bad) throw IoError(path + ": read failed");
    return out;
}

// --- CSV --------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline std::string serialize_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t k = 0; k < t.header.size(); ++k) out += (k ? "," : "") + t.header[k];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += format_double(row[k]);
        }
        out += '\n';
    }
    return out;
}

/// Header of axis names then "probability"; one row per grid point in
/// row-major order.
inline CsvTable to_table(const ScanResult& r) {
    if (r.values.size() != r.expected_size()) {
        throw ParameterError("scan result has " + std::to_string(r.values.size()) + " values for a grid of " +
                             std::to_string(r.expected_size()));
    }
    CsvTable t;
    for (const auto& a : r.axes) t.header.push_back(a.name);
    t.header.push_back("probability");
    t.rows.reserve(r.values.size());
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        auto row = r.coordinates(i);
        row.push_back(r.values[i]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string csv_text(const ScanResult& r) { return serialize_csv(to_table(r)); }

inline void write_csv(const ScanResult& r, const std::string& path) { write_text_file(path, csv_text(r)); }

inline CsvTable parse_csv(std::string_view text) {
    auto fail = [](std::size_t line, const std::string& msg) {
        throw ParameterError("csv line " + std::to_string(line) + ": " + msg);
    };
    auto split = [](std::string_view s) {
        std::vector<std::string_view> f;
        std::size_t pos = 0;
        while (true) {
            const auto comma = s.find(',', pos);
            f.push_back(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return f;
    };
    CsvTable t;
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) fail(line + 1, "missing line terminator");
        const auto content = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line;
        const auto fields = split(content);
        if (line == 1) {
            for (auto f : fields) t.header.emplace_back(f);
            continue;
        }
        if (fields.size() != t.header.size()) fail(line, "expected " + std::to_string(t.header.size()) + " fields");
        std::vector<double> row;
        for (auto f : fields) {
            const auto v = parse_double(f);
            if (!v) fail(line, "not a number: '" + std::string(f) + "'");
            row.push_back(*v);
        }
        t.rows.push_back(std::move(row));
    }
    if (line == 0) fail(1, "empty document");
    return t;
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

// --- metadata ---------------------------------------------------------------

inline nlohmann::json result_metadata(const ScanResult& r, const nlohmann::json& extra = {}) {
    nlohmann::json j = r.provenance;
    j["engine"] = to_string(r.engine);
    j["quantity"] = to_string(r.quantity);
    j["points"] = r.values.size();
    j["clamped_points"] = r.clamped;
    j["csv_columns"] = to_table(r).header;
    if (r.quantity == Quantity::Density) {
        j["units"] = r.engine == Engine::ClosedForm ? "closed-form coincidence density, 1/time^2"
                                                    : "history-sum |A|^2, 1/time^2";
    } else {
        j["units"] = "dimensionless";
    }
    if (!extra.is_null()) {
        for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    }
    return j;
}

inline void write_metadata(const ScanResult& r, const std::string& path, const nlohmann::json& extra = {}) {
    write_text_file(path, result_metadata(r, extra).dump(2) + "\n");
}

// --- SVG --------------------------------------------------------------------

namespace detail {

inline std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

/// Linear ramp from pale yellow to dark blue; every channel is monotone in t.
inline std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255.0 + (16.0 - 255.0) * t));
    const int g = static_cast<int>(std::lround(250.0 + (32.0 - 250.0) * t));
    const int b = static_cast<int>(std::lround(210.0 + (110.0 - 210.0) * t));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace detail

/// 1 axis: line plot. 2 axes: heat map (first axis vertical). Anything else
/// is rejected before a file is touched.
inline std::string plot_svg(const ScanResult& r) {
    if (r.values.empty() || r.values.size() != r.expected_size()) {
        throw ParameterError("cannot plot an empty or inconsistent grid");
    }
    if (r.axes.empty() || r.axes.size() > 2) {
        throw ParameterError("plots support 1 or 2 axes, result has " + std::to_string(r.axes.size()));
    }
    using detail::fixed;
    using detail::short_number;
    constexpr double W = 640, H = 440, L = 80, R = 120, T = 30, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    const double vmax = *std::max_element(r.values.begin(), r.values.end());
    const double vmin = std::min(0.0, *std::min_element(r.values.begin(), r.values.end()));
    const double vspan = vmax > vmin ? vmax - vmin : 1.0;
    const std::string quantity = to_string(r.quantity);

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(W) + "\" height=\"" + fixed(H) +
         "\" viewBox=\"0 0 " + fixed(W) + " " + fixed(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += std::string("<title>") + to_string(r.engine) + " " + quantity + "</title>\n";

    auto text = [&](double x, double y, const std::string& str, const std::string& extra = "") {
        s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\"" + extra + ">" + str + "</text>\n";
    };

    if (r.axes.size() == 1) {
        const auto& a = r.axes[0];
        const double x0 = a.value(0), x1 = a.value(a.steps - 1);
        const double xspan = x1 != x0 ? x1 - x0 : 1.0;
        auto px = [&](double x) { return L + pw * (x - x0) / xspan; };
        auto py = [&](double v) { return T + ph * (1.0 - (v - vmin) / vspan); };
        s += "<rect x=\"" + fixed(L) + "\" y=\"" + fixed(T) + "\" width=\"" + fixed(pw) + "\" height=\"" +
             fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
        s += "<polyline fill=\"none\" stroke=\"#10206e\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            s += (i ? " " : "") + fixed(px(a.value(i))) + "," + fixed(py(r.values[i]));
        }
        s += "\"/>\n";
        text(L, H - B + 18, short_number(x0), " text-anchor=\"middle\"");
        text(L + pw, H - B + 18, short_number(x1), " text-anchor=\"middle\"");
        text(L - 6, T + ph, short_number(vmin), " text-anchor=\"end\"");
        text(L - 6, T + 10, short_number(vmax), " text-anchor=\"end\"");
        text(L + pw / 2, H - 15, a.name, " text-anchor=\"middle\"");
        text(20, T + ph / 2, quantity,
             " text-anchor=\"middle\" transform=\"rotate(-90 20 " + fixed(T + ph / 2) + ")\"");
    } else {
        const auto& ay = r.axes[0];
        const auto& ax = r.axes[1];
        const double cw = pw / static_cast<double>(ax.steps);
        const double ch = ph / static_cast<double>(ay.steps);
        for (std::size_t i = 0; i < ay.steps; ++i) {
            for (std::size_t j = 0; j < ax.steps; ++j) {
                const double v = r.values[i * ax.steps + j];
                // First axis grows upwards.
                const double y = T + ph - static_cast<double>(i + 1) * ch;
                s += "<rect x=\"" + fixed(L + static_cast<double>(j) * cw) + "\" y=\"" + fixed(y) +
                     "\" width=\"" + fixed(cw + 0.01) + "\" height=\"" + fixed(ch + 0.01) + "\" fill=\"" +
                     detail::ramp_color((v - vmin) / vspan) + "\"/>\n";
            }
        }
        s += "<rect x=\"" + fixed(L) + "\" y=\"" + fixed(T) + "\" width=\"" + fixed(pw) + "\" height=\"" +
             fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
        text(L, H - B + 18, short_number(ax.value(0)), " text-anchor=\"middle\"");
        text(L + pw, H - B + 18, short_number(ax.value(ax.steps - 1)), " text-anchor=\"middle\"");
        text(L - 6, T + ph, short_number(ay.value(0)), " text-anchor=\"end\"");
        text(L - 6, T + 10, short_number(ay.value(ay.steps - 1)), " text-anchor=\"end\"");
        text(L + pw / 2, H - 15, ax.name, " text-anchor=\"middle\"");
        text(20, T + ph / 2, ay.name,
             " text-anchor=\"middle\" transform=\"rotate(-90 20 " + fixed(T + ph / 2) + ")\"");
        // Colour bar.
        const double bx = W - R + 30, bw = 18;
        constexpr int kBands = 32;
        for (int k = 0; k < kBands; ++k) {
            const double t = (k + 0.5) / kBands;
            s += "<rect x=\"" + fixed(bx) + "\" y=\"" + fixed(T + ph * (1.0 - (k + 1.0) / kBands)) +
                 "\" width=\"" + fixed(bw) + "\" height=\"" + fixed(ph / kBands + 0.01) + "\" fill=\"" +
                 detail::ramp_color(t) + "\"/>\n";
        }
        text(bx + bw + 4, T + 10, short_number(vmax));
        text(bx + bw + 4, T + ph, short_number(vmin));
        text(bx, T - 8, quantity);
    }
    s += "</svg>\n";
    return s;
}

inline void emit_plot(const ScanResult& r, const std::string& path) {
    const auto svg = plot_svg(r);
    write_text_file(path, svg);
}

}  // namespace qbeat
