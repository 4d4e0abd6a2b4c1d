#include "ambddc/bddc.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ambddc {

namespace {

Vector gather(const Vector& global, const std::vector<Index>& dofs) {
    Vector out(static_cast<Index>(dofs.size()));
    for (std::size_t k = 0; k < dofs.size(); ++k) out(static_cast<Index>(k)) = global(dofs[k]);
    return out;
}

void scatter_add(Vector& global, const std::vector<Index>& dofs, const Vector& local) {
    for (std::size_t k = 0; k < dofs.size(); ++k) global(dofs[k]) += local(static_cast<Index>(k));
}

Matrix submatrix(const Matrix& a, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = a(rows[i], cols[j]);
    return out;
}

std::vector<Index> pick(const std::vector<Index>& values, const std::vector<Index>& positions) {
    std::vector<Index> out;
    out.reserve(positions.size());
    for (Index p : positions) out.push_back(values[static_cast<std::size_t>(p)]);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- averaging

AveragingOperator::AveragingOperator(Index num_dofs, std::vector<std::vector<Index>> local_dofs, LocalVectors weights)
    : num_dofs_(num_dofs), local_dofs_(std::move(local_dofs)), weights_(std::move(weights)) {}

Vector AveragingOperator::average(const LocalVectors& w) const {
    Vector u = Vector::Zero(num_dofs_);
    for (std::size_t s = 0; s < local_dofs_.size(); ++s)
        scatter_add(u, local_dofs_[s], weights_[s].cwiseProduct(w[s]));
    return u;
}

LocalVectors AveragingOperator::restrict(const Vector& u) const {
    LocalVectors out;
    out.reserve(local_dofs_.size());
    for (const auto& dofs : local_dofs_) out.push_back(gather(u, dofs));
    return out;
}

LocalVectors AveragingOperator::weighted_restrict(const Vector& r) const {
    LocalVectors out;
    out.reserve(local_dofs_.size());
    for (std::size_t s = 0; s < local_dofs_.size(); ++s) out.push_back(weights_[s].cwiseProduct(gather(r, local_dofs_[s])));
    return out;
}

std::pair<Vector, Vector> AveragingOperator::pair_weights(Index s, Index t, const std::vector<Index>& dofs) const {
    const auto m = static_cast<Index>(dofs.size());
    Vector ws(m), wt(m);
    const auto& ds = local_dofs_[static_cast<std::size_t>(s)];
    const auto& dt = local_dofs_[static_cast<std::size_t>(t)];
    for (Index k = 0; k < m; ++k) {
        const Index d = dofs[static_cast<std::size_t>(k)];
        const auto is = std::lower_bound(ds.begin(), ds.end(), d) - ds.begin();
        const auto it = std::lower_bound(dt.begin(), dt.end(), d) - dt.begin();
        if (is >= static_cast<Index>(ds.size()) || ds[static_cast<std::size_t>(is)] != d ||
            it >= static_cast<Index>(dt.size()) || dt[static_cast<std::size_t>(it)] != d)
            throw std::invalid_argument("pair_weights: dof is not shared by the pair");
        const double a = weights_[static_cast<std::size_t>(s)](is);
        const double b = weights_[static_cast<std::size_t>(t)](it);
        ws(k) = a / (a + b);
        wt(k) = 1.0 - ws(k);
    }
    return {ws, wt};
}

AveragingOperator build_averaging(const LevelDecomposition& decomposition, Scaling scaling) {
    const auto& subs = decomposition.substructures;
    const Index n = decomposition.system.num_dofs;
    Vector total = Vector::Zero(n);
    for (const auto& sub : subs)
        for (Index k : sub.interface)
            total(sub.dofs[static_cast<std::size_t>(k)]) += scaling == Scaling::stiffness ? sub.stiffness(k, k) : 1.0;

    std::vector<std::vector<Index>> dofs;
    LocalVectors weights;
    for (const auto& sub : subs) {
        Vector w = Vector::Ones(sub.size());
        for (Index k : sub.interface) {
            const double sum = total(sub.dofs[static_cast<std::size_t>(k)]);
            if (!(sum > 0.0)) throw NumericalError("build_averaging: zero stiffness diagonal on the interface");
            w(k) = (scaling == Scaling::stiffness ? sub.stiffness(k, k) : 1.0) / sum;
        }
        dofs.push_back(sub.dofs);
        weights.push_back(std::move(w));
    }
    return AveragingOperator(n, std::move(dofs), std::move(weights));
}

// ----------------------------------------------------------- coarse selection

Index CoarseSelection::count(CoarseDofKind kind) const {
    return static_cast<Index>(std::count_if(dofs.begin(), dofs.end(), [&](const CoarseDof& d) { return d.kind == kind; }));
}

Eigen::SparseMatrix<double> CoarseSelection::q_p() const {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t j = 0; j < dofs.size(); ++j)
        for (const auto& [dof, w] : dofs[j].weights) triplets.emplace_back(dof, static_cast<Index>(j), w);
    Eigen::SparseMatrix<double> q(num_level_dofs, size());
    q.setFromTriplets(triplets.begin(), triplets.end());
    return q;
}

std::vector<Index> CoarseSelection::columns_of_glob(Index glob) const {
    std::vector<Index> out;
    for (std::size_t j = 0; j < dofs.size(); ++j)
        if (dofs[j].glob == glob) out.push_back(static_cast<Index>(j));
    return out;
}

bool CoarseSelection::add(CoarseDof dof, double angle_tol) {
    // Dense comparison against the glob's existing columns.
    std::vector<Index> support;
    const auto existing = columns_of_glob(dof.glob);
    for (Index j : existing)
        for (const auto& [d, w] : dofs[static_cast<std::size_t>(j)].weights) support.push_back(d);
    for (const auto& [d, w] : dof.weights) support.push_back(d);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    auto position = [&](Index d) { return std::lower_bound(support.begin(), support.end(), d) - support.begin(); };

    Vector candidate = Vector::Zero(static_cast<Index>(support.size()));
    for (const auto& [d, w] : dof.weights) candidate(position(d)) += w;
    const double norm = candidate.norm();
    if (!(norm > 0.0)) return false;
    if (!existing.empty()) {
        Matrix basis = Matrix::Zero(static_cast<Index>(support.size()), static_cast<Index>(existing.size()));
        for (std::size_t k = 0; k < existing.size(); ++k)
            for (const auto& [d, w] : dofs[static_cast<std::size_t>(existing[k])].weights)
                basis(position(d), static_cast<Index>(k)) += w;
        const Matrix q = orthonormal_range(basis, 1e-12);
        const Vector residual = candidate - q * (q.transpose() * candidate);
        if (residual.norm() < angle_tol * norm) return false;
    }
    const auto at = std::find_if(dofs.begin(), dofs.end(), [&](const CoarseDof& d) { return d.glob > dof.glob; });
    dofs.insert(at, std::move(dof));
    return true;
}

CoarseSelection build_constraints(const LevelDecomposition& decomposition, ConstraintKind kind) {
    const auto& system = decomposition.system;
    CoarseSelection sel;
    sel.num_level_dofs = system.num_dofs;
    const auto& globs = decomposition.globs.globs;
    for (std::size_t g = 0; g < globs.size(); ++g) {
        const auto& glob = globs[g];
        std::vector<CoarseDof> rows;
        if (glob.kind == GlobKind::corner) {
            for (Index d : glob.dofs)
                rows.push_back({static_cast<Index>(g), CoarseDofKind::corner,
                                system.dof_component[static_cast<std::size_t>(d)], {{d, 1.0}}});
        } else if (kind == ConstraintKind::corners_and_edges) {
            for (int comp : {0, 1}) {
                std::vector<Index> members;
                for (Index d : glob.dofs)
                    if (system.dof_component[static_cast<std::size_t>(d)] == comp) members.push_back(d);
                if (members.empty()) continue;
                CoarseDof row{static_cast<Index>(g), CoarseDofKind::edge_average, comp, {}};
                for (Index d : members) row.weights.emplace_back(d, 1.0 / static_cast<double>(members.size()));
                rows.push_back(std::move(row));
            }
        }
        for (auto& row : rows) {
            if (!sel.add(std::move(row))) {
                std::ostringstream os;
                os << "level " << decomposition.level() << ": dropped a redundant coarse dof on glob " << g;
                sel.warnings.push_back(os.str());
            }
        }
    }
    return sel;
}

ConstraintMatrix local_constraints(const LevelDecomposition& decomposition, const CoarseSelection& selection) {
    const auto& subs = decomposition.substructures;
    const auto& globs = decomposition.globs.globs;
    ConstraintMatrix cm;
    for (const auto& sub : subs) {
        std::vector<Index> ids;
        for (Index j = 0; j < selection.size(); ++j) {
            const auto& owners = globs[static_cast<std::size_t>(selection.dofs[static_cast<std::size_t>(j)].glob)].substructures;
            if (std::binary_search(owners.begin(), owners.end(), sub.id)) ids.push_back(j);
        }
        Matrix c = Matrix::Zero(static_cast<Index>(ids.size()), sub.size());
        for (std::size_t r = 0; r < ids.size(); ++r)
            for (const auto& [d, w] : selection.dofs[static_cast<std::size_t>(ids[r])].weights) {
                const Index k = sub.local_index(d);
                if (k < 0) throw std::logic_error("local_constraints: coarse dof outside its substructure");
                c(static_cast<Index>(r), k) += w;
            }
        cm.local.push_back(std::move(c));
        cm.coarse_id.push_back(std::move(ids));
    }
    return cm;
}

// ------------------------------------------------------------- level context

LevelContext::LevelContext(std::shared_ptr<const LevelDecomposition> decomposition, AveragingOperator averaging,
                           CoarseSelection selection)
    : decomposition_(std::move(decomposition)),
      averaging_(std::move(averaging)),
      selection_(std::move(selection)) {
    constraints_ = local_constraints(*decomposition_, selection_);
    const auto& subs = decomposition_->substructures;
    const Index n = decomposition_->system.num_dofs;

    std::vector<Index> interface_position(static_cast<std::size_t>(n), -1);
    for (const auto& sub : subs)
        for (Index k : sub.interface) interface_position[static_cast<std::size_t>(sub.dofs[static_cast<std::size_t>(k)])] = 0;
    for (Index d = 0; d < n; ++d)
        if (interface_position[static_cast<std::size_t>(d)] == 0) {
            interface_position[static_cast<std::size_t>(d)] = static_cast<Index>(interface_dofs_.size());
            interface_dofs_.push_back(d);
        }

    local_.resize(subs.size());
    for (std::size_t s = 0; s < subs.size(); ++s) {
        const auto& sub = subs[s];
        auto& loc = local_[s];
        loc.constraints = constraints_.local[s];
        try {
            loc.saddle = SaddlePointSolver(sub.stiffness, loc.constraints);
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << "level " << level() << " substructure " << sub.id
               << ": constrained local problem is singular (insufficient initial constraints): " << e.what();
            throw NumericalError(os.str());
        }
        if (!loc.saddle.removed_rows().empty()) {
            std::ostringstream os;
            os << "level " << level() << " substructure " << sub.id << ": local coarse dofs are linearly dependent";
            throw NumericalError(os.str());
        }
        const Index m = loc.constraints.rows();
        loc.basis.resize(sub.size(), m);
        for (Index j = 0; j < m; ++j)
            loc.basis.col(j) = loc.saddle.solve(Vector::Zero(sub.size()), Vector::Unit(m, j)).primal;
        loc.coarse_stiffness = loc.basis.transpose() * sub.stiffness * loc.basis;
        loc.coarse_stiffness = 0.5 * (loc.coarse_stiffness + loc.coarse_stiffness.transpose()).eval();

        const Matrix k_ii = submatrix(sub.stiffness, sub.interior, sub.interior);
        loc.interior = DenseCholesky(k_ii);
        loc.k_ig = submatrix(sub.stiffness, sub.interior, sub.interface);
        const Matrix k_gg = submatrix(sub.stiffness, sub.interface, sub.interface);
        loc.schur = k_gg - loc.k_ig.transpose() * loc.interior.solve(loc.k_ig);
        loc.schur = 0.5 * (loc.schur + loc.schur.transpose()).eval();
        for (Index k : sub.interface)
            loc.interface_global.push_back(interface_position[static_cast<std::size_t>(sub.dofs[static_cast<std::size_t>(k)])]);
    }
}

Vector LevelContext::apply_operator(const Vector& u) const {
    Vector y = Vector::Zero(num_dofs());
    for (const auto& sub : substructures()) scatter_add(y, sub.dofs, sub.stiffness * gather(u, sub.dofs));
    return y;
}

Vector LevelContext::interior_correction(const Vector& r) const {
    Vector u = Vector::Zero(num_dofs());
    const auto& subs = substructures();
    for (std::size_t s = 0; s < subs.size(); ++s) {
        const auto dofs = pick(subs[s].dofs, subs[s].interior);
        const Vector u_i = local_[s].interior.solve(gather(r, dofs));
        for (std::size_t k = 0; k < dofs.size(); ++k) u(dofs[k]) = u_i(static_cast<Index>(k));
    }
    return u;
}

LocalVectors LevelContext::delta_correction(const Vector& r_b) const {
    LocalVectors f = averaging_.weighted_restrict(r_b);
    for (std::size_t s = 0; s < f.size(); ++s) f[s] = local_[s].saddle.solve_homogeneous(f[s]);
    return f;
}

Vector LevelContext::coarse_residual(const Vector& r_b) const {
    const LocalVectors f = averaging_.weighted_restrict(r_b);
    Vector r_c = Vector::Zero(num_coarse_dofs());
    for (std::size_t s = 0; s < f.size(); ++s) scatter_add(r_c, constraints_.coarse_id[s], local_[s].basis.transpose() * f[s]);
    return r_c;
}

LocalVectors LevelContext::coarse_extension(const Vector& u_c) const {
    LocalVectors out;
    out.reserve(local_.size());
    for (std::size_t s = 0; s < local_.size(); ++s) out.push_back(local_[s].basis * gather(u_c, constraints_.coarse_id[s]));
    return out;
}

LevelSystem LevelContext::coarse_system() const {
    const auto& dec = *decomposition_;
    LevelSystem next;
    next.level = dec.level() + 1;
    next.num_dofs = num_coarse_dofs();
    next.grid_nx = dec.partition.kx;
    next.grid_ny = dec.partition.ky;
    next.element_size = dec.partition.size;

    std::vector<Index> glob_node(dec.globs.globs.size(), -1);
    next.dof_node.assign(static_cast<std::size_t>(next.num_dofs), -1);
    next.dof_component.assign(static_cast<std::size_t>(next.num_dofs), -1);
    for (std::size_t g = 0; g < dec.globs.globs.size(); ++g) {
        const auto columns = selection_.columns_of_glob(static_cast<Index>(g));
        if (columns.empty()) continue;
        LevelNode node;
        for (Index fine : dec.globs.globs[g].nodes) {
            node.x += dec.system.nodes[static_cast<std::size_t>(fine)].x;
            node.y += dec.system.nodes[static_cast<std::size_t>(fine)].y;
        }
        node.x /= static_cast<double>(dec.globs.globs[g].nodes.size());
        node.y /= static_cast<double>(dec.globs.globs[g].nodes.size());
        node.dofs = columns;
        glob_node[g] = static_cast<Index>(next.nodes.size());
        for (Index c : columns) {
            next.dof_node[static_cast<std::size_t>(c)] = glob_node[g];
            next.dof_component[static_cast<std::size_t>(c)] = selection_.dofs[static_cast<std::size_t>(c)].component;
        }
        next.nodes.push_back(std::move(node));
    }
    for (std::size_t s = 0; s < local_.size(); ++s) {
        LevelElement el;
        el.dofs = constraints_.coarse_id[s];
        for (Index c : el.dofs) el.nodes.push_back(next.dof_node[static_cast<std::size_t>(c)]);
        std::sort(el.nodes.begin(), el.nodes.end());
        el.nodes.erase(std::unique(el.nodes.begin(), el.nodes.end()), el.nodes.end());
        el.stiffness = local_[s].coarse_stiffness;
        next.elements.push_back(std::move(el));
    }
    return next;
}

Vector LevelContext::schur_apply(const Vector& u_gamma) const {
    Vector y = Vector::Zero(static_cast<Index>(interface_dofs_.size()));
    for (const auto& loc : local_) scatter_add(y, loc.interface_global, loc.schur * gather(u_gamma, loc.interface_global));
    return y;
}

Vector LevelContext::reduce_rhs(const Vector& f) const {
    Vector g = gather(f, interface_dofs_);
    const auto& subs = substructures();
    for (std::size_t s = 0; s < subs.size(); ++s) {
        const Vector f_i = gather(f, pick(subs[s].dofs, subs[s].interior));
        scatter_add(g, local_[s].interface_global, -local_[s].k_ig.transpose() * local_[s].interior.solve(f_i));
    }
    return g;
}

Vector LevelContext::extend_interface(const Vector& u_gamma, const Vector& f) const {
    Vector u = Vector::Zero(num_dofs());
    for (std::size_t k = 0; k < interface_dofs_.size(); ++k) u(interface_dofs_[k]) = u_gamma(static_cast<Index>(k));
    const auto& subs = substructures();
    for (std::size_t s = 0; s < subs.size(); ++s) {
        const auto dofs = pick(subs[s].dofs, subs[s].interior);
        const Vector rhs = gather(f, dofs) - local_[s].k_ig * gather(u_gamma, local_[s].interface_global);
        const Vector u_i = local_[s].interior.solve(rhs);
        for (std::size_t k = 0; k < dofs.size(); ++k) u(dofs[k]) = u_i(static_cast<Index>(k));
    }
    return u;
}

// ------------------------------------------------------------------ multilevel

MultilevelBddc::MultilevelBddc(std::vector<LevelContext> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("MultilevelBddc: at least one level context is required");
    top_matrix_ = assemble(levels_.back().coarse_system());
    try {
        top_ = SparseCholesky(top_matrix_);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("top-level coarse problem is singular: ") + e.what());
    }
}

Vector MultilevelBddc::apply(const Vector& r) const { return apply_from(0, r); }

Vector MultilevelBddc::coarse_correction(std::size_t l, const Vector& r_b, LocalVectors& w) const {
    const auto& ctx = levels_[l];
    const Vector r_next = ctx.coarse_residual(r_b);
    const Vector u_next = (l + 1 == levels_.size()) ? top_.solve(r_next) : apply_from(l + 1, r_next);
    const LocalVectors ext = ctx.coarse_extension(u_next);
    for (std::size_t s = 0; s < w.size(); ++s) w[s] += ext[s];
    return u_next;
}

Vector MultilevelBddc::apply_from(std::size_t l, const Vector& r) const {
    const auto& ctx = levels_[l];
    const Vector u_i = ctx.interior_correction(r);
    const Vector r_b = r - ctx.apply_operator(u_i);
    LocalVectors w = ctx.delta_correction(r_b);
    coarse_correction(l, r_b, w);
    const Vector u_b = ctx.average(w);
    const Vector v_i = ctx.interior_correction(ctx.apply_operator(u_b));
    return u_i + u_b - v_i;
}

Vector MultilevelBddc::apply_reduced(const Vector& r_gamma) const {
    const auto& ctx = levels_.front();
    const auto& gamma = ctx.interface_dofs();
    Vector r_b = Vector::Zero(ctx.num_dofs());
    for (std::size_t k = 0; k < gamma.size(); ++k) r_b(gamma[k]) = r_gamma(static_cast<Index>(k));
    LocalVectors w = ctx.delta_correction(r_b);
    coarse_correction(0, r_b, w);
    return gather(ctx.average(w), gamma);
}

}  // namespace ambddc
