#include "modesum/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace ms = modesum::scenario;

int main(int argc, char** argv) {
    CLI::App app{"Mode-sum solver for linear fields on flat cosmological models"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    bool strict = false;
    unsigned threads = 0;

    for (const auto& name : ms::task_names()) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " task");
        sub->add_option("--config", config, "JSON scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_flag("--strict", strict, "Exit with status 4 when an invariant fails");
        sub->add_option("--threads", threads, "Worker threads (0: all cores); never changes results")
            ->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ms::ConfigFailure;
    }

    const auto* sub = app.get_subcommands().front();
    const auto task = ms::task_from_string(sub->get_name());

    ms::ScenarioConfig cfg;
    try {
        cfg = ms::load_config(config, task);
    } catch (const ms::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        ms::write_error_manifest(out, "config_error", e.what(), e.path());
        return ms::ConfigFailure;
    } catch (const modesum::ArgumentError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        ms::write_error_manifest(out, "config_error", e.what());
        return ms::ConfigFailure;
    }

    const auto result = ms::run(cfg, ms::RunOptions{out, strict, threads});
    const auto& m = result.manifest;
    if (m.contains("error")) {
        std::cerr << m["status"].get<std::string>() << ": " << m["error"]["message"].get<std::string>();
        if (m["error"].contains("context")) std::cerr << " [" << m["error"]["context"].get<std::string>() << "]";
        std::cerr << '\n';
    }
    std::cout << sub->get_name() << ": " << m["status"].get<std::string>() << ", "
              << m["invariants_failed"].get<std::size_t>() << " invariant(s) failed, "
              << result.artifacts.size() + 1 << " file(s) in " << out << '\n';
    return result.exit_code;
}
