#include "ambddc/adaptive.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace ambddc {

namespace {

constexpr double kNullTol = 1e-10;
constexpr double kTruncationTol = 1e-12;

Index position_of(const std::vector<Index>& sorted, Index value) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
    if (it == sorted.end() || *it != value) return -1;
    return it - sorted.begin();
}

Matrix jump_rows(const CoarseSelection& selection, const std::vector<Index>& ids, const PairProblem& p) {
    const Index ns = p.size_s();
    Matrix g = Matrix::Zero(static_cast<Index>(ids.size()), p.size());
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (const auto& [d, w] : selection.dofs[static_cast<std::size_t>(ids[r])].weights) {
            const Index k = position_of(p.shared, d);
            if (k < 0) throw std::logic_error("jump_rows: coarse dof outside the shared interface");
            g(static_cast<Index>(r), p.shared_in_s[static_cast<std::size_t>(k)]) += w;
            g(static_cast<Index>(r), ns + p.shared_in_t[static_cast<std::size_t>(k)]) -= w;
        }
    return g;
}

}  // namespace

PairProblem assemble_pair_problem(const LevelContext& context, SubstructurePair pair) {
    const auto& dec = context.decomposition();
    const auto& pairs = dec.globs.adjacent_pairs;
    if (pair.s > pair.t) std::swap(pair.s, pair.t);
    if (std::find(pairs.begin(), pairs.end(), pair) == pairs.end()) {
        std::ostringstream os;
        os << "assemble_pair_problem: substructures " << pair.s << " and " << pair.t << " are not adjacent";
        throw std::invalid_argument(os.str());
    }
    PairProblem p;
    p.pair = pair;
    p.level = context.level();
    p.edge_glob = dec.globs.edge_of(pair);
    if (p.edge_glob >= 0) p.edge_dofs = dec.globs.globs[static_cast<std::size_t>(p.edge_glob)].dofs;

    const auto shared = dec.globs.shared_globs(pair);
    for (Index g : shared)
        for (Index d : dec.globs.globs[static_cast<std::size_t>(g)].dofs) p.shared.push_back(d);
    std::sort(p.shared.begin(), p.shared.end());

    const auto& subs = context.substructures();
    const auto& ss = subs[static_cast<std::size_t>(pair.s)];
    const auto& st = subs[static_cast<std::size_t>(pair.t)];
    for (Index k : ss.interface) p.interface_s.push_back(ss.dofs[static_cast<std::size_t>(k)]);
    for (Index k : st.interface) p.interface_t.push_back(st.dofs[static_cast<std::size_t>(k)]);
    for (Index d : p.shared) {
        p.shared_in_s.push_back(position_of(p.interface_s, d));
        p.shared_in_t.push_back(position_of(p.interface_t, d));
        if (p.shared_in_s.back() < 0 || p.shared_in_t.back() < 0)
            throw std::logic_error("assemble_pair_problem: shared dof is not on both interfaces");
    }
    const Index ns = p.size_s();
    const Index nt = static_cast<Index>(p.interface_t.size());
    const Index n = ns + nt;

    p.schur = Matrix::Zero(n, n);
    p.schur.topLeftCorner(ns, ns) = context.local_schur(pair.s);
    p.schur.bottomRightCorner(nt, nt) = context.local_schur(pair.t);

    std::tie(p.weight_s, p.weight_t) = context.averaging().pair_weights(pair.s, pair.t, p.shared);
    p.jump = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < p.shared.size(); ++k) {
        const Index i = p.shared_in_s[k];
        const Index j = ns + p.shared_in_t[k];
        const auto kk = static_cast<Index>(k);
        p.jump(i, i) = p.weight_t(kk);
        p.jump(i, j) = -p.weight_t(kk);
        p.jump(j, j) = p.weight_s(kk);
        p.jump(j, i) = -p.weight_s(kk);
    }

    const auto& selection = context.selection();
    std::vector<Index> all, initial;
    for (Index j = 0; j < selection.size(); ++j) {
        const auto& dof = selection.dofs[static_cast<std::size_t>(j)];
        if (!std::binary_search(shared.begin(), shared.end(), dof.glob)) continue;
        all.push_back(j);
        if (dof.kind != CoarseDofKind::adaptive) initial.push_back(j);
    }
    p.constraints = jump_rows(selection, all, p);
    p.initial_constraints = jump_rows(selection, initial, p);

    if (p.level == 1) {
        // Rigid body modes of each substructure on its interface.
        const auto& sys = dec.system;
        auto node_of = [&](Index d) -> const LevelNode& {
            return sys.nodes[static_cast<std::size_t>(sys.dof_node[static_cast<std::size_t>(d)])];
        };
        double cx = 0.0, cy = 0.0;
        for (Index d : p.shared) {
            cx += node_of(d).x;
            cy += node_of(d).y;
        }
        cx /= static_cast<double>(std::max<std::size_t>(p.shared.size(), 1));
        cy /= static_cast<double>(std::max<std::size_t>(p.shared.size(), 1));
        p.nullspace = Matrix::Zero(n, 6);
        auto fill = [&](const std::vector<Index>& dofs, Index offset, Index col) {
            for (std::size_t k = 0; k < dofs.size(); ++k) {
                const Index d = dofs[k];
                const int comp = sys.dof_component[static_cast<std::size_t>(d)];
                const Index row = offset + static_cast<Index>(k);
                p.nullspace(row, col + comp) = 1.0;
                p.nullspace(row, col + 2) = comp == 0 ? -(node_of(d).y - cy) : (node_of(d).x - cx);
            }
        };
        fill(p.interface_s, 0, 0);
        fill(p.interface_t, ns, 3);
    } else {
        const Matrix& phi_s = context.coarse_basis(pair.s);
        const Matrix& phi_t = context.coarse_basis(pair.t);
        p.nullspace = Matrix::Zero(n, phi_s.cols() + phi_t.cols());
        for (Index k = 0; k < ns; ++k) p.nullspace.block(k, 0, 1, phi_s.cols()) = phi_s.row(ss.interface[static_cast<std::size_t>(k)]);
        for (Index k = 0; k < nt; ++k)
            p.nullspace.block(ns + k, phi_s.cols(), 1, phi_t.cols()) = phi_t.row(st.interface[static_cast<std::size_t>(k)]);
    }
    p.regularization = n > 0 ? p.schur.diagonal().mean() : 1.0;
    if (!(p.regularization > 0.0)) p.regularization = 1.0;
    return p;
}

Matrix null_projection(const Matrix& rows, Index dim) {
    Matrix pi = Matrix::Identity(dim, dim);
    if (rows.rows() == 0) return pi;
    const Matrix q = orthonormal_range(rows.transpose());
    pi -= q * q.transpose();
    return pi;
}

PairOperators pair_operators(const PairProblem& problem) {
    const Index n = problem.size();
    const Matrix& s = problem.schur;
    const double a = problem.regularization;
    PairOperators op;
    op.pi = null_projection(problem.constraints, n);
    const Matrix complement = Matrix::Identity(n, n) - op.pi;

    // range(Pi) & null(S): numerically null directions of S inside range Z,
    // then the part of those that satisfies the constraints.
    Matrix basis(n, 0);
    const Matrix qz = orthonormal_range(problem.nullspace);
    if (qz.cols() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig_s(s, Eigen::EigenvaluesOnly);
        const double norm_s = n > 0 ? eig_s.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
        Eigen::JacobiSVD<Matrix> svd(s * qz, Eigen::ComputeFullV);
        const Vector sigma = svd.singularValues();
        std::vector<Index> null_cols;
        for (Index j = 0; j < qz.cols(); ++j) {
            const double value = j < sigma.size() ? sigma(j) : 0.0;
            if (value <= kNullTol * norm_s) null_cols.push_back(j);
        }
        Matrix nz(n, static_cast<Index>(null_cols.size()));
        for (std::size_t k = 0; k < null_cols.size(); ++k)
            nz.col(static_cast<Index>(k)) = qz * svd.matrixV().col(null_cols[k]);
        if (nz.cols() > 0) {
            const Matrix violation = complement * nz;
            Eigen::JacobiSVD<Matrix> svd_v(violation, Eigen::ComputeFullV);
            const Vector sv = svd_v.singularValues();
            std::vector<Index> keep;
            for (Index j = 0; j < nz.cols(); ++j) {
                const double value = j < sv.size() ? sv(j) : 0.0;
                if (value <= kNullTol) keep.push_back(j);
            }
            Matrix candidates(n, static_cast<Index>(keep.size()));
            for (std::size_t k = 0; k < keep.size(); ++k)
                candidates.col(static_cast<Index>(k)) = nz * svd_v.matrixV().col(keep[k]);
            basis = orthonormal_range(candidates);
        }
    }
    op.pi_bar = Matrix::Identity(n, n) - basis * basis.transpose();

    const Matrix& jump = problem.jump;
    op.x = op.pi * jump.transpose() * s * jump * op.pi;
    op.x = 0.5 * (op.x + op.x.transpose()).eval();
    const Matrix inner = op.pi * s * op.pi + a * complement;
    op.y = op.pi_bar * inner * op.pi_bar + a * (Matrix::Identity(n, n) - op.pi_bar);
    op.y = 0.5 * (op.y + op.y.transpose()).eval();
    return op;
}

PairEigenReport solve_local_eigenproblem(const PairProblem& problem, double tau) {
    if (!(tau > 1.0)) throw std::invalid_argument("solve_local_eigenproblem: tau must exceed 1");
    const PairOperators op = pair_operators(problem);
    PairEigenReport report;
    report.pair = problem.pair;
    GeneralizedEigenpairs eig;
    try {
        eig = eig_sym_generalized(op.x, op.y);
    } catch (const NumericalError& e) {
        std::ostringstream os;
        os << "pair (" << problem.pair.s << "," << problem.pair.t << ") on level " << problem.level
           << ": " << e.what() << " (check the regularization a or the null space basis Z)";
        throw NumericalError(os.str());
    }
    report.values = eig.values.cwiseMax(0.0);
    report.vectors = eig.vectors;
    for (Index k = 0; k < report.values.size(); ++k)
        if (report.values(k) > tau) ++report.num_above;
    return report;
}

Matrix generate_constraint_rows(const PairEigenReport& report, const PairProblem& problem) {
    const Index n = problem.size();
    const Matrix pi_init = null_projection(problem.initial_constraints, n);
    const Matrix x_hat = problem.jump.transpose() * problem.schur * problem.jump;
    const Matrix op = pi_init * x_hat * pi_init;
    Matrix rows(report.num_above, n);
    for (Index k = 0; k < report.num_above; ++k) rows.row(k) = (op * report.vectors.col(k)).transpose();
    return rows;
}

AugmentationResult augment_coarse_selection(CoarseSelection& selection, const Matrix& rows, const PairProblem& problem) {
    AugmentationResult result;
    if (rows.rows() == 0) return result;
    if (problem.edge_glob < 0) {
        std::ostringstream os;
        os << "pair (" << problem.pair.s << "," << problem.pair.t << ") has no edge left for adaptive constraints";
        selection.warnings.push_back(os.str());
        result.dropped = rows.rows();
        return result;
    }
    const Index ns = problem.size_s();
    for (Index r = 0; r < rows.rows(); ++r) {
        const Vector c_s = rows.row(r).head(ns).transpose();
        const double scale = c_s.cwiseAbs().maxCoeff();
        if (!(scale > 0.0)) {
            ++result.dropped;
            continue;
        }
        // Keep the s block on the edge only.
        Vector kept = Vector::Zero(ns);
        for (Index k = 0; k < ns; ++k) {
            const Index d = problem.interface_s[static_cast<std::size_t>(k)];
            if (std::binary_search(problem.edge_dofs.begin(), problem.edge_dofs.end(), d)) kept(k) = c_s(k);
            else result.discarded = std::max(result.discarded, std::abs(c_s(k)) / scale);
        }
        const double norm = kept.norm();
        CoarseDof dof{problem.edge_glob, CoarseDofKind::adaptive, -1, {}};
        if (norm > 0.0)
            for (Index k = 0; k < ns; ++k)
                if (std::abs(kept(k)) > kTruncationTol * scale)
                    dof.weights.emplace_back(problem.interface_s[static_cast<std::size_t>(k)], kept(k) / norm);
        if (!dof.weights.empty() && selection.add(std::move(dof))) {
            ++result.added;
        } else {
            ++result.dropped;
            std::ostringstream os;
            os << "pair (" << problem.pair.s << "," << problem.pair.t << "): dropped a near-parallel adaptive constraint";
            selection.warnings.push_back(os.str());
        }
    }
    return result;
}

IndicatorReport condition_indicator(const std::vector<std::vector<PairEigenReport>>& levels, double tau) {
    IndicatorReport report;
    report.tau = tau;
    for (const auto& pairs : levels) {
        double level_max = pairs.empty() ? 1.0 : 0.0;
        for (const auto& p : pairs) level_max = std::max(level_max, p.top());
        report.level_max.push_back(level_max);
        report.omega_tilde *= level_max;
    }
    return report;
}

SetupResult setup_multilevel_bddc(const LevelSystem& fine, const std::vector<LevelPlan>& plans,
                                  const SetupOptions& options) {
    if (plans.empty()) throw std::invalid_argument("setup_multilevel_bddc: at least two levels are required");
    const bool adaptive = options.mode == ConstraintMode::adaptive;
    if (adaptive && !(options.tau > 1.0)) throw std::invalid_argument("setup_multilevel_bddc: tau must exceed 1");
    const bool spectra = adaptive || options.compute_spectra;
    const double tau = adaptive ? options.tau : std::numeric_limits<double>::infinity();
    const ConstraintKind kind =
        options.mode == ConstraintMode::corners_and_edges ? ConstraintKind::corners_and_edges : ConstraintKind::corners;

    SetupResult result;
    std::vector<LevelContext> contexts;
    std::vector<std::vector<PairEigenReport>> recomputed;
    LevelSystem system = fine;
    Partition previous;
    for (std::size_t l = 0; l < plans.size(); ++l) {
        const auto& plan = plans[l];
        Partition partition = l == 0 ? partition_regular_grid(system.grid_nx, system.grid_ny, plan.kx, plan.ky,
                                                              system.element_size, system.level)
                                     : agglomerate(previous, plan.kx, plan.ky);
        if (plan.jag) partition = jag_interface_edge(partition, plan.jag->s, plan.jag->t, plan.jag->amplitude, plan.jag->period);

        auto dec = std::make_shared<const LevelDecomposition>(decompose(system, partition, options.promote_corners));
        AveragingOperator averaging = build_averaging(*dec, options.scaling);
        CoarseSelection selection = build_constraints(*dec, kind);

        LevelReport report;
        report.level = dec->level();
        report.partition = partition;
        report.num_substructures = partition.count();
        report.num_dofs = dec->system.num_dofs;
        report.initial_coarse_dofs = selection.size();

        std::optional<LevelContext> context;
        context.emplace(dec, averaging, selection);
        if (spectra) {
            std::vector<PairEigenReport> reports;
            Index added = 0;
            for (const auto& pair : dec->globs.adjacent_pairs) {
                const PairProblem problem = assemble_pair_problem(*context, pair);
                PairEigenReport eig = solve_local_eigenproblem(problem, tau);
                report.spectra.push_back({pair, eig.values});
                if (adaptive && eig.num_above > 0) {
                    const Matrix rows = generate_constraint_rows(eig, problem);
                    const auto aug = augment_coarse_selection(selection, rows, problem);
                    added += aug.added;
                }
                reports.push_back(std::move(eig));
            }
            if (added > 0) {
                context.emplace(dec, averaging, selection);
                reports.clear();
                for (const auto& pair : dec->globs.adjacent_pairs)
                    reports.push_back(solve_local_eigenproblem(assemble_pair_problem(*context, pair), tau));
            }
            for (auto& r : reports) r.vectors.resize(0, 0);
            report.recomputed = reports;
            recomputed.push_back(std::move(reports));
        }
        report.adaptive_coarse_dofs = selection.count(CoarseDofKind::adaptive);
        report.coarse_dofs = selection.size();
        report.warnings = selection.warnings;
        result.levels.push_back(std::move(report));

        system = context->coarse_system();
        previous = partition;
        contexts.push_back(std::move(*context));
    }
    result.preconditioner = MultilevelBddc(std::move(contexts));
    if (spectra) result.indicator = condition_indicator(recomputed, options.tau);
    return result;
}

}  // namespace ambddc
