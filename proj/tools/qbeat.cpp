// Command-line front end: run or validate a scenario document, list presets.
//
// Exit codes: 0 success, 1 configuration error, 2 computational error,
// 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qbeat/scenario.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kCompute = 2, kIo = 3 };

qbeat::Scenario load(const std::string& path, const std::string& engine) {
    auto s = qbeat::parse_config(qbeat::read_text_file(path));
    if (!engine.empty()) qbeat::override_engine(s, engine);
    return s;
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const qbeat::ConfigError& e) {
        std::cerr << "config error:\n" << e.what() << "\n";
        return kConfig;
    } catch (const qbeat::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return kCompute;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-photon coincidence scans of linear-optical feedback devices"};
    app.require_subcommand(1);

    std::string engine;
    std::string out_dir;
    unsigned threads = 1;
    app.add_option("--engine", engine, "override the scenario engine")
        ->check(CLI::IsMember({"closed_form", "history_sum", "both"}));
    app.add_option("--out-dir", out_dir, "override the scenario output directory");
    app.add_option("--threads", threads, "scan worker threads, 0 = one per hardware thread");

    std::string config;
    auto* run = app.add_subcommand("run", "run a scenario and write its outputs");
    run->add_option("config", config, "scenario document")->required();
    auto* validate = app.add_subcommand("validate", "check a scenario document and echo its settings");
    validate->add_option("config", config, "scenario document")->required();
    auto* presets = app.add_subcommand("presets", "list the built-in devices");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (*presets) {
        for (const auto& p : qbeat::preset_catalog()) std::cout << p.name << "\t" << p.summary << "\n";
        std::cout << "custom\tnode/edge lines in [device]\n";
        return kOk;
    }

    if (*validate) {
        return guarded([&] {
            const auto s = load(config, engine);
            std::cout << s.echo().dump(2) << "\n";
            return kOk;
        });
    }

    return guarded([&] {
        const auto s = load(config, engine);
        qbeat::RunOptions opt;
        opt.threads = threads;
        if (!out_dir.empty()) opt.out_dir = out_dir;
        const auto rep = qbeat::run_scenario(s, opt);
        for (const auto& r : rep.results) {
            std::cout << qbeat::to_string(r.engine) << ": " << r.values.size() << " points";
            if (r.clamped) std::cout << ", " << r.clamped << " clamped below -1e-15";
            std::cout << "\n";
        }
        if (rep.agreement) {
            std::cout << "engine agreement: " << rep.agreement->points << " points, mean ratio "
                      << qbeat::format_double(rep.agreement->mean_ratio) << ", coefficient of variation "
                      << qbeat::format_double(rep.agreement->coefficient_of_variation) << "\n";
        }
        for (const auto& f : rep.files) std::cout << "wrote " << f << "\n";
        return kOk;
    });
}
