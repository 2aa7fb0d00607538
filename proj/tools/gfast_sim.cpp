#include "gfast/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Flags {
    std::string config;
    std::string snr_db;
    std::string seeds;
    std::string loop_length_m;
    std::string kappa;
    std::string detectors;
    std::string ce;
    std::string channel_csv;
    std::string output;
    int tones = 0;
    int frames = 0;
    int instances = 0;
    int turbo_outer_iters = -1;
    bool full_grid = false;
    std::vector<std::string> settings;
};

void add_flags(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "key = value configuration file");
    cmd.add_option("--snr-db", f.snr_db, "comma-separated Eb/N0 points in dB");
    cmd.add_option("--seed", f.seeds, "comma-separated seeds");
    cmd.add_option("--loop-length-m", f.loop_length_m, "loop length(s) in metres");
    cmd.add_option("--kappa", f.kappa, "impulse infection probabilities");
    cmd.add_option("--detectors", f.detectors, "subset of sud,zf,ml,dea");
    cmd.add_option("--ce", f.ce, "channel estimator: dea, ls or perfect");
    cmd.add_option("--channel-csv", f.channel_csv, "measured channel file (tone,l,m,re,im)");
    cmd.add_option("--tones", f.tones, "active tones, subsampled uniformly");
    cmd.add_option("--frames", f.frames, "frames per point");
    cmd.add_option("--instances", f.instances, "symbol vectors per tone and point");
    cmd.add_option("--turbo-outer-iters", f.turbo_outer_iters, "outer CE/MUD iterations");
    cmd.add_flag("--full-grid", f.full_grid, "use the 4096-tone grid");
    cmd.add_option("-o,--output", f.output, "CSV output path (stdout if omitted)");
    cmd.add_option("--set", f.settings, "extra key=value setting, repeatable");
}

gfast::ExperimentConfig build_config(gfast::ExperimentKind kind, const Flags& f) {
    gfast::ExperimentConfig cfg;
    if (!f.config.empty()) cfg = gfast::load_config(f.config, cfg);
    cfg.kind = kind;
    auto set = [&](const char* key, const std::string& v) {
        if (!v.empty()) gfast::apply_setting(cfg, key, v);
    };
    set("snr_db", f.snr_db);
    set("seeds", f.seeds);
    set("loop_length_m", f.loop_length_m);
    set("kappa", f.kappa);
    set("detectors", f.detectors);
    set("ce", f.ce);
    set("channel_csv", f.channel_csv);
    set("output", f.output);
    if (f.tones) cfg.tones = f.tones;
    if (f.frames) cfg.frames = f.frames;
    if (f.instances) cfg.instances = f.instances;
    if (f.turbo_outer_iters >= 0) cfg.frame.turbo_outer_iters = f.turbo_outer_iters;
    if (f.full_grid) cfg.full_grid = true;
    for (const auto& s : f.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw gfast::ConfigError("--set expects key=value, got '" + s + "'");
        gfast::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"G.fast upstream simulator with DE-aided turbo channel estimation and multi-user detection"};
    app.require_subcommand(1);
    Flags flags;
    using gfast::ExperimentKind;
    constexpr std::pair<ExperimentKind, const char*> kinds[] = {
        {ExperimentKind::per_tone, "per-tone CE NMSE and detector SER/BER"},
        {ExperimentKind::convergence, "best CF per generation for DEA-CE and DEA-MUD"},
        {ExperimentKind::turbo, "NMSE/BER/SER per outer turbo iteration"},
        {ExperimentKind::bandwidth, "link over growing tone prefixes"},
        {ExperimentKind::loop_length, "link versus loop length"},
        {ExperimentKind::impulse, "link under impulse noise"},
        {ExperimentKind::ce_error, "estimated versus perfect CSI per detector"},
        {ExperimentKind::complexity, "DEA-MUD evaluations against exhaustive ML"},
    };
    std::vector<std::pair<CLI::App*, ExperimentKind>> commands;
    for (auto [k, about] : kinds) {
        auto* cmd = app.add_subcommand(std::string(gfast::experiment_name(k)), about);
        add_flags(*cmd, flags);
        commands.emplace_back(cmd, k);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        gfast::apply_worker_env();
        gfast::ExperimentKind kind{};
        for (const auto& [cmd, k] : commands)
            if (cmd->parsed()) kind = k;
        const auto cfg = build_config(kind, flags);
        const auto rows = gfast::run_experiment(cfg);
        if (cfg.output) {
            std::ofstream out(*cfg.output);
            if (!out) throw gfast::ConfigError("cannot write '" + cfg.output->string() + "'");
            gfast::write_csv(out, rows);
        } else {
            gfast::write_csv(std::cout, rows);
        }
    } catch (const gfast::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const gfast::UsageError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const gfast::ParseError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const gfast::BudgetError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const gfast::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
