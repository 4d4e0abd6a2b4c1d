#include "ambddc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ambddc {

namespace {

std::string number(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string file_tag(const ExperimentConfig& config) {
    std::string tag = "L" + std::to_string(config.levels) + "_";
    switch (config.mode) {
        case ConstraintMode::corners: tag += "c"; break;
        case ConstraintMode::corners_and_edges: tag += "ce"; break;
        case ConstraintMode::adaptive: tag += "tau" + format_tau(config.tau); break;
    }
    return tag;
}

Vector make_rhs(const ExperimentConfig& config, const Mesh& mesh, Index n) {
    if (config.rhs == RhsKind::uniform) return build_rhs(mesh);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector f(n);
    for (Index i = 0; i < n; ++i) f(i) = dist(rng);
    return f;
}

void open_for_write(std::ofstream& out, const std::filesystem::path& path) {
    out.open(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Sort key: c, c+e, then tau descending with infinity first.
std::pair<int, double> row_order(const std::string& label) {
    if (label == "c") return {0, 0.0};
    if (label == "c+e") return {1, 0.0};
    if (label.rfind("inf", 0) == 0) return {2, 0.0};
    try {
        return {3, -std::stod(label)};
    } catch (const std::exception&) {
        return {4, 0.0};
    }
}

}  // namespace

std::string row_label(const ExperimentConfig& config) {
    switch (config.mode) {
        case ConstraintMode::corners: return "c";
        case ConstraintMode::corners_and_edges: return "c+e";
        case ConstraintMode::adaptive: return std::isinf(config.tau) ? "inf(=c)" : format_tau(config.tau);
    }
    return "c";
}

std::string coarse_count_label(const std::vector<LevelReport>& levels) {
    std::string out;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        if (l > 0) out += "+";
        out += std::to_string(levels[l].coarse_dofs);
    }
    return out;
}

double coarse_size_ratio(const std::vector<LevelReport>& levels) {
    if (levels.empty()) return 0.0;
    const double subdomain = static_cast<double>(levels[0].num_dofs) / static_cast<double>(levels[0].num_substructures);
    double largest = static_cast<double>(levels.back().coarse_dofs);
    for (std::size_t l = 1; l < levels.size(); ++l)
        largest = std::max(largest, static_cast<double>(levels[l].num_dofs) / static_cast<double>(levels[l].num_substructures));
    return largest / subdomain;
}

namespace {

SetupResult setup_for(const ExperimentConfig& config, const LevelSystem& fine, bool spectra) {
    SetupOptions options;
    options.mode = config.mode;
    options.tau = config.tau;
    options.scaling = config.scaling;
    options.promote_corners = config.promote_corners;
    options.compute_spectra = spectra;
    return setup_multilevel_bddc(fine, config.plans, options);
}

void write_spectra_files(const ExperimentConfig& config, const std::vector<LevelReport>& levels) {
    for (const auto& level : levels) {
        if (level.spectra.empty()) continue;
        std::ofstream out;
        open_for_write(out, config.out / ("spectra_" + file_tag(config) + "_level" + std::to_string(level.level) + ".csv"));
        emit_spectra(out, level.spectra);
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts) {
    config.validate();
    const Mesh mesh = build_unit_square_mesh(config.nx, config.ny);
    const LevelSystem fine = fine_level_system(mesh, config.material);
    const SparseSymmetricMatrix a = assemble(fine);
    const Vector f = make_rhs(config, mesh, fine.num_dofs);

    SetupResult setup = setup_for(config, fine, false);
    const MultilevelBddc& bddc = setup.preconditioner;
    const LevelContext& first = bddc.level(1);

    PcgResult solve;
    Vector u;
    if (config.reduced) {
        const Vector g = first.reduce_rhs(f);
        solve = pcg([&](const Vector& v) { return first.schur_apply(v); },
                    [&](const Vector& r) { return bddc.apply_reduced(r); }, g, config.pcg);
        u = first.extend_interface(solve.x, f);
    } else {
        solve = pcg([&](const Vector& v) { return Vector(a * v); }, [&](const Vector& r) { return bddc.apply(r); }, f,
                    config.pcg, first.interior_correction(f));
        u = solve.x;
    }

    ExperimentResult result;
    result.solve = solve.report;
    result.converged = solve.report.converged;
    const double fnorm = f.norm();
    result.true_residual = fnorm > 0.0 ? (f - a * u).norm() / fnorm : (a * u).norm();
    result.levels = std::move(setup.levels);
    result.indicator = setup.indicator;
    result.row.label = row_label(config);
    result.row.nc = coarse_count_label(result.levels);
    result.row.coarse_ratio = coarse_size_ratio(result.levels);
    if (result.indicator) result.row.omega_tilde = result.indicator->omega_tilde;
    result.row.kappa = solve.report.kappa;
    result.row.iterations = solve.report.iterations;

    if (write_artifacts) {
        std::filesystem::create_directories(config.out);
        const std::string tag = file_tag(config);
        std::ofstream out;
        open_for_write(out, config.out / ("residual_" + tag + ".csv"));
        emit_residual_history(out, result.solve);
        out.close();
        open_for_write(out, config.out / ("partition_" + tag + ".csv"));
        emit_partitions(out, result.levels);
        out.close();
        write_spectra_files(config, result.levels);
        if (config.dump_matrices) {
            write_matrix_market((config.out / ("stiffness_" + tag + ".mtx")).string(), a);
            for (int l = 1; l < bddc.num_levels(); ++l)
                write_matrix_market((config.out / ("qp_" + tag + "_level" + std::to_string(l) + ".mtx")).string(),
                                    bddc.level(l).selection().q_p());
            write_matrix_market((config.out / ("coarse_" + tag + "_level" + std::to_string(bddc.num_levels()) + ".mtx")).string(),
                                bddc.top_matrix());
        }
    }
    return result;
}

std::vector<LevelReport> compute_spectra(const ExperimentConfig& config) {
    config.validate();
    const Mesh mesh = build_unit_square_mesh(config.nx, config.ny);
    const LevelSystem fine = fine_level_system(mesh, config.material);
    return setup_for(config, fine, true).levels;
}

void emit_table(std::ostream& out, std::vector<ResultRow> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ResultRow& x, const ResultRow& y) { return row_order(x.label) < row_order(y.label); });
    out << "# Nc: coarse dofs on level 1, then +k for each higher level; "
           "C = max(level l dofs per substructure for 1<l<L, top coarse size) / (level 1 dofs per substructure)\n";
    out << "constraint/tau,Nc,C,omega_tilde,kappa,it\n";
    for (const auto& r : rows) {
        out << r.label << ',' << r.nc << ',' << number(r.coarse_ratio) << ','
            << (r.omega_tilde ? number(*r.omega_tilde) : std::string()) << ',' << number(r.kappa) << ',' << r.iterations
            << '\n';
    }
}

void emit_table(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out;
    open_for_write(out, path);
    emit_table(out, rows);
}

void emit_spectra(std::ostream& out, const std::vector<PairSpectrum>& spectra, int count) {
    out << "s,t";
    for (int k = 1; k <= count; ++k) out << ",lambda_" << k;
    out << '\n';
    std::vector<PairSpectrum> sorted = spectra;
    std::stable_sort(sorted.begin(), sorted.end(), [](const PairSpectrum& x, const PairSpectrum& y) {
        const double a = x.values.size() > 0 ? x.values(0) : 0.0;
        const double b = y.values.size() > 0 ? y.values(0) : 0.0;
        return a > b;
    });
    for (const auto& p : sorted) {
        out << p.pair.s << ',' << p.pair.t;
        for (int k = 0; k < count; ++k) {
            out << ',';
            if (k < p.values.size()) out << number(p.values(k));
        }
        out << '\n';
    }
}

void emit_residual_history(std::ostream& out, const SolveReport& report) {
    out << "iteration,relative_residual\n";
    for (std::size_t k = 0; k < report.residual_history.size(); ++k) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6e", report.residual_history[k]);
        out << k << ',' << buf << '\n';
    }
}

void emit_partitions(std::ostream& out, const std::vector<LevelReport>& levels) {
    out << "element";
    for (const auto& l : levels) out << ",level" << l.level;
    out << '\n';
    std::vector<Partition> chain;
    std::vector<std::vector<Index>> owners;
    for (const auto& l : levels) {
        chain.push_back(l.partition);
        owners.push_back(composite_owner(chain));
    }
    if (owners.empty()) return;
    for (std::size_t e = 0; e < owners.front().size(); ++e) {
        out << e;
        for (const auto& o : owners) out << ',' << o[e];
        out << '\n';
    }
}

}  // namespace ambddc
