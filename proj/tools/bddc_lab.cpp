// Command-line driver for the BDDC experiments.

#include "ambddc/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config, "key = value configuration file");
    cmd->add_option("--override", common.overrides, "key=value, applied after the file")->take_all();
    cmd->add_option("--out", common.out, "output directory");
}

ambddc::ExperimentConfig load(const Common& common) {
    ambddc::ConfigFile file;
    if (!common.config.empty()) file = ambddc::ConfigFile::load(common.config);
    for (const auto& o : common.overrides) file.set(o);
    if (!common.out.empty()) file.set("out", common.out);
    return ambddc::make_config(file);
}

void print_row(const ambddc::ResultRow& row) {
    std::cout << row.label << "  Nc=" << row.nc << "  C=" << row.coarse_ratio;
    if (row.omega_tilde) std::cout << "  omega_tilde=" << *row.omega_tilde;
    std::cout << "  kappa=" << row.kappa << "  it=" << row.iterations << '\n';
}

int run(const Common& common) {
    const auto config = load(common);
    const auto result = ambddc::run_experiment(config);
    ambddc::emit_table(config.out / "summary.csv", {result.row});
    print_row(result.row);
    for (const auto& level : result.levels)
        for (const auto& w : level.warnings) std::cerr << "warning: " << w << '\n';
    if (!result.converged) {
        std::cerr << "PCG did not converge in " << result.solve.iterations << " iterations\n";
        return 1;
    }
    return 0;
}

int sweep(const Common& common) {
    auto config = load(common);
    std::vector<ambddc::ResultRow> fixed, adaptive, all;
    bool ok = true;
    auto one = [&](ambddc::ExperimentConfig c, std::vector<ambddc::ResultRow>& rows) {
        try {
            const auto result = ambddc::run_experiment(c);
            ok = ok && result.converged;
            print_row(result.row);
            rows.push_back(result.row);
            all.push_back(result.row);
        } catch (const std::exception& e) {
            ok = false;
            std::cerr << ambddc::row_label(c) << ": " << e.what() << '\n';
        }
    };
    for (auto mode : {ambddc::ConstraintMode::corners, ambddc::ConstraintMode::corners_and_edges}) {
        auto c = config;
        c.mode = mode;
        one(c, fixed);
    }
    for (double tau : config.sweep_taus) {
        auto c = config;
        c.mode = ambddc::ConstraintMode::adaptive;
        c.tau = tau;
        one(c, adaptive);
    }
    const std::string suffix = "_L" + std::to_string(config.levels) + ".csv";
    ambddc::emit_table(config.out / ("table_nonadaptive" + suffix), fixed);
    ambddc::emit_table(config.out / ("table_adaptive" + suffix), adaptive);
    ambddc::emit_table(config.out / "summary.csv", all);
    return ok ? 0 : 1;
}

int spectra(const Common& common) {
    const auto config = load(common);
    const auto levels = ambddc::compute_spectra(config);
    std::filesystem::create_directories(config.out);
    for (const auto& level : levels) {
        const auto path = config.out / ("spectra_level" + std::to_string(level.level) + ".csv");
        std::ofstream out(path);
        ambddc::emit_spectra(out, level.spectra);
        std::cout << "level " << level.level << ": " << level.spectra.size() << " pairs -> " << path.string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive-multilevel BDDC laboratory for 2D elasticity"};
    app.require_subcommand(1);
    Common run_opts, sweep_opts, spectra_opts;
    auto* run_cmd = app.add_subcommand("run", "one experiment, writes summary.csv");
    add_common(run_cmd, run_opts);
    auto* sweep_cmd = app.add_subcommand("sweep", "c, c+e and every tau in sweep.taus");
    add_common(sweep_cmd, sweep_opts);
    auto* spectra_cmd = app.add_subcommand("spectra", "pair eigenvalues per level");
    add_common(spectra_cmd, spectra_opts);
    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return run(run_opts);
        if (*sweep_cmd) return sweep(sweep_opts);
        if (*spectra_cmd) return spectra(spectra_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
