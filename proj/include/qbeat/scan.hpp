#pragma once

// Parameter scans of the coincidence signal over rectangular grids.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbeat/correlations.hpp"
#include "qbeat/presets.hpp"

namespace qbeat {

enum class Engine { ClosedForm, HistorySum };

/// Density is |A|^2 itself. Normalized divides by the incoherent sum of the
/// direct and exchange terms, which removes the envelope and leaves the
/// interference fringe.
enum class Quantity { Density, Normalized };

inline const char* to_string(Engine e) { return e == Engine::ClosedForm ? "closed_form" : "history_sum"; }
inline const char* to_string(Quantity q) { return q == Quantity::Density ? "density" : "normalized"; }

inline std::optional<Engine> parse_engine(const std::string& s) {
    if (s == "closed_form") return Engine::ClosedForm;
    if (s == "history_sum") return Engine::HistorySum;
    return std::nullopt;
}

inline std::optional<Quantity> parse_quantity(const std::string& s) {
    if (s == "density") return Quantity::Density;
    if (s == "normalized") return Quantity::Normalized;
    return std::nullopt;
}

/// tau and dtau are device delays, t0 the reference detection time,
/// detuning sets photon 1's carrier to photon 2's plus the value, and
/// separation moves the two clicks apart symmetrically (+s/2 on the first
/// detector, -s/2 on the second).
inline const std::vector<std::string>& axis_names() {
    static const std::vector<std::string> names{"tau", "dtau", "t0", "detuning", "separation"};
    return names;
}

inline bool is_axis_name(const std::string& s) {
    const auto& n = axis_names();
    return std::find(n.begin(), n.end(), s) != n.end();
}

inline std::string axis_name_list() {
    std::string out;
    for (const auto& n : axis_names()) out += (out.empty() ? "" : ", ") + n;
    return out;
}

/// `steps` equally spaced values from start to stop inclusive. A single
/// step pins the parameter at `start`.
struct ScanAxis {
    std::string name;
    double start = 0.0;
    double stop = 0.0;
    std::size_t steps = 1;

    double value(std::size_t i) const {
        if (steps == 1) return start;
        return start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }

    void validate() const {
        if (!is_axis_name(name)) {
            throw ParameterError("unknown scan axis '" + name + "'; valid axes: " + axis_name_list());
        }
        if (steps == 0) throw ParameterError("axis '" + name + "' needs steps >= 1");
        if (!std::isfinite(start) || !std::isfinite(stop)) {
            throw ParameterError("axis '" + name + "' bounds must be finite");
        }
        if (steps > 1 && start == stop) {
            throw ParameterError("axis '" + name + "' has equal start and stop but " +
                                 std::to_string(steps) + " steps");
        }
    }
};

/// Everything a scan needs besides its axes.
struct ScanSetup {
    std::string preset = "fig1";
    Fig1Params fig1;
    std::optional<DeviceSpec> device;  // used when preset is not fig1
    std::array<std::string, 2> source_ports{fig1::kInput1, fig1::kInput2};
    std::array<std::string, 2> detectors{fig1::kDetector1, fig1::kDetector2};
    std::array<double, 2> detection_times{0.0, 0.0};  // offsets for non-fig1 devices
    std::array<WavepacketParams, 2> packets{};
    double t0 = 0.0;
    double separation = 0.0;
    int max_passes = fig1::kDoublePasses;
    Quantity quantity = Quantity::Density;

    bool is_fig1() const { return preset == "fig1"; }
};

inline nlohmann::json to_json(const WavepacketParams& p) {
    return {{"center_time", p.center_time},
            {"width", p.width},
            {"carrier_freq", p.carrier_freq},
            {"phase_offset", p.phase_offset}};
}

inline nlohmann::json to_json(const ScanAxis& a) {
    return {{"name", a.name}, {"start", a.start}, {"stop", a.stop}, {"steps", a.steps}};
}

inline nlohmann::json setup_provenance(const ScanSetup& s) {
    nlohmann::json j;
    j["preset"] = s.preset;
    if (s.is_fig1()) {
        j["input_delay"] = s.fig1.input_delay;
        j["shifter_delay"] = s.fig1.shifter_delay;
        j["loop_delay"] = s.fig1.loop_delay;
        j["mirror_reflectivity"] = {s.fig1.mirror_reflectivity.real(), s.fig1.mirror_reflectivity.imag()};
    } else {
        j["detection_times"] = s.detection_times;
    }
    j["source_ports"] = s.source_ports;
    j["detectors"] = s.detectors;
    j["sources"] = {to_json(s.packets[0]), to_json(s.packets[1])};
    j["t0"] = s.t0;
    j["separation"] = s.separation;
    j["max_passes"] = s.max_passes;
    j["quantity"] = to_string(s.quantity);
    return j;
}

struct ScanResult {
    std::vector<ScanAxis> axes;
    std::vector<double> values;  // row-major, first axis slowest
    Engine engine = Engine::ClosedForm;
    Quantity quantity = Quantity::Density;
    nlohmann::json provenance;
    std::size_t clamped = 0;  // entries below -1e-15 that were clamped to zero

    std::size_t expected_size() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.steps;
        return n;
    }

    /// Axis coordinates of grid point `index`.
    std::vector<double> coordinates(std::size_t index) const {
        std::vector<double> c(axes.size());
        for (std::size_t k = axes.size(); k-- > 0;) {
            c[k] = axes[k].value(index % axes[k].steps);
            index /= axes[k].steps;
        }
        return c;
    }
};

namespace detail {

struct ScanPoint {
    Fig1Params fig1;
    std::array<WavepacketParams, 2> packets;
    double t0 = 0.0;
    double separation = 0.0;
};

inline ScanPoint make_point(const ScanSetup& s, const std::vector<ScanAxis>& axes, const std::vector<double>& c) {
    ScanPoint p{s.fig1, s.packets, s.t0, s.separation};
    for (std::size_t k = 0; k < axes.size(); ++k) {
        const auto& n = axes[k].name;
        if (n == "tau") p.fig1.input_delay = c[k];
        else if (n == "dtau") p.fig1.shifter_delay = c[k];
        else if (n == "t0") p.t0 = c[k];
        else if (n == "separation") p.separation = c[k];
        else if (n == "detuning") p.packets[0].carrier_freq = p.packets[1].carrier_freq + c[k];
    }
    return p;
}

inline double reduce(const TwoPhotonAmplitude& a, Quantity q) {
    return q == Quantity::Normalized ? a.normalized() : a.probability();
}

/// Runs body(i) for i in [0, n) on `threads` workers. Each index is taken
/// exactly once; the first exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i; !failed && (i = next++) < n;) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Evaluates the chosen quantity on every grid point. The closed form is
/// only defined for the fig1 preset; tau and dtau axes need it too, since
/// they are fig1 device delays. threads = 0 picks the hardware count.
inline ScanResult beat_scan(const ScanSetup& setup, const std::vector<ScanAxis>& axes, Engine engine,
                            unsigned threads = 1) {
    for (const auto& a : axes) a.validate();
    for (std::size_t i = 0; i < axes.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (axes[i].name == axes[j].name) throw ParameterError("axis '" + axes[i].name + "' given twice");
        }
    }
    for (const auto& p : setup.packets) p.validate();
    setup.fig1.validate();
    if (setup.max_passes < 0) throw ParameterError("max_passes must be >= 0");

    const bool device_axes = std::any_of(axes.begin(), axes.end(),
                                         [](const ScanAxis& a) { return a.name == "tau" || a.name == "dtau"; });
    if (!setup.is_fig1()) {
        if (engine == Engine::ClosedForm) {
            throw ParameterError("the closed_form engine needs the fig1 preset, got '" + setup.preset + "'");
        }
        if (device_axes) throw ParameterError("tau and dtau axes need the fig1 preset");
        if (!setup.device) throw ParameterError("no device given for preset '" + setup.preset + "'");
    }

    ScanResult r;
    r.axes = axes;
    r.engine = engine;
    r.quantity = setup.quantity;
    r.provenance = setup_provenance(setup);
    r.provenance["engine"] = to_string(engine);
    r.provenance["axes"] = nlohmann::json::array();
    for (const auto& a : axes) r.provenance["axes"].push_back(to_json(a));
    r.values.assign(r.expected_size(), 0.0);

    auto history_engine = [&](const Fig1Params& fp, const std::array<WavepacketParams, 2>& packets) {
        const DeviceSpec spec = setup.is_fig1() ? build_fig1_device(fp) : *setup.device;
        std::array<PhotonSource, 2> src{PhotonSource{spec.port(setup.source_ports[0]), packets[0]},
                                        PhotonSource{spec.port(setup.source_ports[1]), packets[1]}};
        const std::optional<Fig1Timing> timing =
            setup.is_fig1() ? std::optional(fig1_timing(spec)) : std::nullopt;
        return std::make_pair(
            TwoPhotonEngine(spec, src, {spec.port(setup.detectors[0]), spec.port(setup.detectors[1])},
                            setup.max_passes),
            timing);
    };

    // Without device axes every point shares one set of histories.
    std::optional<std::pair<TwoPhotonEngine, std::optional<Fig1Timing>>> shared;
    if (engine == Engine::HistorySum && !device_axes) shared.emplace(history_engine(setup.fig1, setup.packets));

    std::vector<double> raw(r.values.size(), 0.0);
    detail::parallel_for(raw.size(), threads, [&](std::size_t i) {
        const auto p = detail::make_point(setup, axes, r.coordinates(i));
        const double half = 0.5 * p.separation;
        if (engine == Engine::ClosedForm) {
            const auto a = closed_form_terms(p.t0 + half, p.t0 - half, p.fig1.input_delay, p.fig1.shifter_delay,
                                     p.packets[0], p.packets[1]);
            raw[i] = setup.quantity == Quantity::Density ? std::ldexp(a.probability(), -11)
                                                         : a.normalized();
            return;
        }
        auto local = shared ? std::nullopt : std::optional(history_engine(p.fig1, p.packets));
        const auto& [base, timing] = shared ? *shared : *local;
        const auto eng = base.with_packets(p.packets[0], p.packets[1]);
        double t1 = p.t0 + setup.detection_times[0];
        double t2 = p.t0 + setup.detection_times[1];
        if (timing) {
            t1 = timing->detector1_time(p.t0);
            t2 = timing->detector2_time(p.t0);
        }
        raw[i] = detail::reduce(eng.amplitude(t1 + half, t2 - half), setup.quantity);
    });

    for (std::size_t i = 0; i < raw.size(); ++i) r.values[i] = clamp_probability(raw[i], &r.clamped);
    return r;
}

/// Ratio statistics history_sum / closed_form over points where both
/// exceed `floor`.
struct EngineAgreement {
    std::size_t points = 0;
    double mean_ratio = 0.0;
    double coefficient_of_variation = 0.0;
};

inline EngineAgreement compare_engines(const ScanResult& closed, const ScanResult& history,
                                       double floor = 1e-20) {
    if (closed.values.size() != history.values.size()) {
        throw ParameterError("engine comparison needs grids of equal size");
    }
    std::vector<double> ratios;
    for (std::size_t i = 0; i < closed.values.size(); ++i) {
        if (closed.values[i] > floor && history.values[i] > floor) {
            ratios.push_back(history.values[i] / closed.values[i]);
        }
    }
    EngineAgreement a;
    a.points = ratios.size();
    if (ratios.empty()) return a;
    double sum = 0.0;
    for (double x : ratios) sum += x;
    a.mean_ratio = sum / static_cast<double>(ratios.size());
    double var = 0.0;
    for (double x : ratios) var += (x - a.mean_ratio) * (x - a.mean_ratio);
    var /= static_cast<double>(ratios.size());
    a.coefficient_of_variation = std::sqrt(var) / a.mean_ratio;
    return a;
}

}  // namespace qbeat
