// tcm: command-line runner for the presets in tcm/experiment.hpp

#include "tcm/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Tavis-Cummings collapse, revival and attractor experiments"};
    app.require_subcommand(1);

    std::string preset;
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> sets;

    auto* run = app.add_subcommand("run", "run a preset and write series.csv, qgrid_*.csv and meta.txt");
    run->add_option("--preset", preset, "preset name (see list-presets)");
    run->add_option("--config", config_path, "flat key = value file applied on top of the preset");
    run->add_option("--set", sets, "key=value override, repeatable")->take_all();
    run->add_option("--out", out_dir, "output directory (default out/<preset>)");

    auto* list = app.add_subcommand("list-presets", "print preset names with one-line descriptions");

    std::string describe_name;
    auto* describe = app.add_subcommand("describe", "print the resolved settings of a preset");
    describe->add_option("--preset", describe_name, "preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*list) {
            for (const auto& p : tcm::presets()) std::printf("%-8s %s\n", p.name.c_str(), p.description.c_str());
            return 0;
        }
        if (*describe) {
            std::fputs(tcm::describe(describe_name).c_str(), stdout);
            return 0;
        }
        tcm::Settings file;
        if (!config_path.empty()) file = tcm::read_settings_file(config_path);
        tcm::Settings overrides;
        for (const auto& s : sets) {
            auto [k, v] = tcm::parse_assignment(s);
            overrides[k] = v;
        }
        const tcm::ExperimentConfig cfg = tcm::load_experiment(preset, file, overrides);
        const std::filesystem::path out = out_dir.empty() ? std::filesystem::path("out") / cfg.preset : std::filesystem::path(out_dir);
        const auto report = tcm::run(cfg, out);
        for (const auto& f : report.files) std::printf("wrote %s\n", f.string().c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "tcm: error: %s\n", e.what());
        return 1;
    }
}
