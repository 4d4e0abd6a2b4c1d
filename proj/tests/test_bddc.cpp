#include "ambddc/adaptive.hpp"
#include "ambddc/bddc.hpp"
#include "ambddc/krylov.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace ambddc;

namespace {

Matrix dense_operator(const std::function<Vector(const Vector&)>& op, Index n) {
    Matrix m(n, n);
    for (Index j = 0; j < n; ++j) m.col(j) = op(Vector::Unit(n, j));
    return m;
}

}  // namespace

TEST_SUITE("bddc") {

TEST_CASE("averaging operator") {
    for (Scaling scaling : {Scaling::stiffness, Scaling::multiplicity}) {
        auto f = fixture::level1(16, 4, ConstraintKind::corners, 1, 1, 5);
        const AveragingOperator e = build_averaging(*f.decomposition, scaling);
        const auto& subs = f.decomposition->substructures;
        // Weights at each dof sum to one.
        Vector total = Vector::Zero(f.system.num_dofs);
        for (std::size_t s = 0; s < subs.size(); ++s) {
            const Vector& w = e.weights(static_cast<Index>(s));
            for (Index i = 0; i < subs[s].size(); ++i) {
                CHECK(w(i) >= 0.0);
                total(subs[s].dofs[static_cast<std::size_t>(i)]) += w(i);
            }
        }
        CHECK((total - Vector::Ones(total.size())).cwiseAbs().maxCoeff() <= 1e-12);

        std::mt19937_64 rng(7);
        const Vector u = oracle::random_vector(f.system.num_dofs, rng);
        CHECK((e.average(e.restrict(u)) - u).cwiseAbs().maxCoeff() <= 1e-12);
        LocalVectors w;
        for (const auto& s : subs) w.push_back(oracle::random_vector(s.size(), rng));
        const Vector ew = e.average(w);
        CHECK((e.average(e.restrict(ew)) - ew).cwiseAbs().maxCoeff() <= 1e-12);

        // E^T r equals the weighted restriction.
        const Vector r = oracle::random_vector(f.system.num_dofs, rng);
        const LocalVectors er = e.weighted_restrict(r);
        double lhs = 0.0;
        for (std::size_t s = 0; s < subs.size(); ++s) lhs += er[s].dot(w[s]);
        CHECK(lhs == doctest::Approx(r.dot(ew)).epsilon(1e-12));
    }

    // Identical halves share their interface with weight one half.
    auto g = fixture::level1(8, 2);
    const auto& e = *g.context;
    const auto [ws, wt] = e.averaging().pair_weights(0, 1, g.decomposition->globs.globs[static_cast<std::size_t>(
                                                                g.decomposition->globs.edge_of({0, 1}))].dofs);
    CHECK((ws - Vector::Constant(ws.size(), 0.5)).norm() <= 1e-12);
    CHECK((ws + wt - Vector::Ones(ws.size())).norm() <= 1e-14);
}

TEST_CASE("constraints and coarse selection") {
    auto c = fixture::level1(16, 4);
    CHECK(c.context->num_coarse_dofs() == 42);
    CHECK(c.context->selection().count(CoarseDofKind::corner) == 42);
    auto ce = fixture::level1(16, 4, ConstraintKind::corners_and_edges);
    CHECK(ce.context->num_coarse_dofs() == 90);
    CHECK(ce.context->selection().count(CoarseDofKind::edge_average) == 48);

    for (const auto* f : {&c, &ce}) {
        const auto& ctx = *f->context;
        const Matrix qp = Matrix(ctx.selection().q_p());
        for (std::size_t s = 0; s < ctx.substructures().size(); ++s) {
            const auto& sub = ctx.substructures()[s];
            const Matrix& cs = ctx.constraints().local[s];
            const auto& ids = ctx.constraints().coarse_id[s];
            REQUIRE(cs.rows() == static_cast<Index>(ids.size()));
            for (Index k = 0; k < cs.rows(); ++k)
                for (Index i = 0; i < sub.size(); ++i)
                    CHECK(cs(k, i) == doctest::Approx(qp(sub.dofs[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(k)])));
        }
        // Columns live on a single glob.
        for (const auto& dof : ctx.selection().dofs) {
            const auto& glob = ctx.decomposition().globs.globs[static_cast<std::size_t>(dof.glob)];
            for (const auto& [d, w] : dof.weights) CHECK(std::binary_search(glob.dofs.begin(), glob.dofs.end(), d));
        }
    }

    // A column parallel to an existing one is dropped.
    CoarseSelection sel = c.context->selection();
    CoarseDof copy = sel.dofs[0];
    for (auto& [d, w] : copy.weights) w *= 3.0;
    CHECK_FALSE(sel.add(copy));
    CHECK(sel.size() == 42);
}

TEST_CASE("coarse basis") {
    auto f = fixture::level1(12, 3, ConstraintKind::corners_and_edges);
    const auto& ctx = *f.context;
    std::mt19937_64 rng(9);
    for (std::size_t s = 0; s < ctx.substructures().size(); ++s) {
        const auto& sub = ctx.substructures()[s];
        const Matrix& phi = ctx.coarse_basis(static_cast<Index>(s));
        const Matrix& cs = ctx.constraints().local[s];
        CHECK((cs * phi - Matrix::Identity(cs.rows(), cs.rows())).norm() <= 1e-10);
        const Matrix nc = oracle::null_space(cs);
        for (int i = 0; i < 5; ++i) {
            const Vector z = nc * oracle::random_vector(nc.cols(), rng);
            const Vector kz = sub.stiffness * z;
            for (Index j = 0; j < phi.cols(); ++j) {
                const double scale = std::sqrt(phi.col(j).dot(sub.stiffness * phi.col(j)) * z.dot(kz));
                CHECK(std::abs(phi.col(j).dot(kz)) <= 1e-9 * scale);
            }
        }
        const Matrix& kc = ctx.coarse_element(static_cast<Index>(s));
        CHECK((kc - kc.transpose()).norm() <= 1e-12 * kc.norm());
        CHECK(oracle::symmetric_eigenvalues(kc)(0) >= -1e-10 * kc.norm());
    }
    // The centre substructure floats: coarse element has the rigid modes.
    CHECK(oracle::numerical_nullity(ctx.coarse_element(4)) == 3);
}

TEST_CASE("substructure correction") {
    auto f = fixture::level1(16, 4, ConstraintKind::corners, 1, 1, 5);
    const auto& ctx = *f.context;
    const auto zero = ctx.delta_correction(Vector::Zero(ctx.num_dofs()));
    for (const auto& w : zero) CHECK(w.norm() == 0.0);

    std::mt19937_64 rng(13);
    const Vector r = oracle::random_vector(ctx.num_dofs(), rng);
    const LocalVectors w = ctx.delta_correction(r);
    for (std::size_t s = 0; s < w.size(); ++s) {
        const auto& sub = ctx.substructures()[s];
        CHECK((ctx.constraints().local[s] * w[s]).norm() <= 1e-10 * w[s].norm());
        // Space decomposition: a(w_Delta, Phi_j) = 0.
        const Matrix& phi = ctx.coarse_basis(static_cast<Index>(s));
        const Vector kw = sub.stiffness * w[s];
        const double wa = std::sqrt(w[s].dot(kw));
        for (Index j = 0; j < phi.cols(); ++j) {
            const double pa = std::sqrt(phi.col(j).dot(sub.stiffness * phi.col(j)));
            CHECK(std::abs(phi.col(j).dot(kw)) <= 1e-9 * wa * pa);
        }
    }
}

TEST_CASE("interior correction") {
    auto f = fixture::level1(16, 4);
    const auto& ctx = *f.context;
    std::mt19937_64 rng(17);
    const Vector r = oracle::random_vector(ctx.num_dofs(), rng);
    const Vector res = r - ctx.apply_operator(ctx.interior_correction(r));
    std::vector<bool> on_interface(static_cast<std::size_t>(ctx.num_dofs()), false);
    for (Index d : ctx.interface_dofs()) on_interface[static_cast<std::size_t>(d)] = true;
    for (Index d = 0; d < ctx.num_dofs(); ++d)
        if (!on_interface[static_cast<std::size_t>(d)]) CHECK(std::abs(res(d)) <= 1e-10 * r.norm());
    const Vector a = f.matrix * r;
    CHECK((ctx.apply_operator(r) - a).norm() <= 1e-12 * a.norm());
}

TEST_CASE("preconditioner symmetry and definiteness") {
    const LevelSystem fine = fine_level_system(build_unit_square_mesh(16, 16), {1.0, 2.0});
    for (int levels : {2, 3}) {
        std::vector<LevelPlan> plans{{4, 4, JagSpec{1, 5, 1, 2}}};
        if (levels == 3) plans.push_back({2, 2, std::nullopt});
        const auto setup = setup_multilevel_bddc(fine, plans, {});
        const auto& m = setup.preconditioner;
        const Matrix full = dense_operator([&](const Vector& r) { return m.apply(r); }, fine.num_dofs);
        CHECK((full - full.transpose()).norm() <= 1e-9 * full.norm());
        CHECK(oracle::symmetric_eigenvalues(0.5 * (full + full.transpose()))(0) > 0.0);

        const Index ng = static_cast<Index>(m.level(1).interface_dofs().size());
        const Matrix reduced = dense_operator([&](const Vector& r) { return m.apply_reduced(r); }, ng);
        CHECK((reduced - reduced.transpose()).norm() <= 1e-9 * reduced.norm());
        CHECK(oracle::symmetric_eigenvalues(0.5 * (reduced + reduced.transpose()))(0) > 0.0);
    }
}

TEST_CASE("reduced preconditioner matches a dense partially assembled oracle") {
    auto f = fixture::level1(8, 2);
    const auto& ctx = *f.context;
    const MultilevelBddc bddc({ctx});
    const auto& gamma = ctx.interface_dofs();
    const Index ng = static_cast<Index>(gamma.size());
    std::map<Index, Index> gamma_pos;
    for (Index i = 0; i < ng; ++i) gamma_pos[gamma[static_cast<std::size_t>(i)]] = i;
    std::set<Index> corner_dofs;
    for (const auto& dof : ctx.selection().dofs)
        for (const auto& [d, w] : dof.weights) corner_dofs.insert(d);

    // Unknowns of the partially assembled space: one per corner dof, one per
    // (substructure, non-corner interface dof).
    std::map<Index, Index> corner_var;
    for (Index d : corner_dofs) corner_var[d] = static_cast<Index>(corner_var.size());
    Index nvar = static_cast<Index>(corner_var.size());
    std::vector<std::vector<Index>> var_of(ctx.substructures().size());
    for (std::size_t s = 0; s < ctx.substructures().size(); ++s) {
        const auto& sub = ctx.substructures()[s];
        for (Index k : sub.interface) {
            const Index d = sub.dofs[static_cast<std::size_t>(k)];
            var_of[s].push_back(corner_dofs.count(d) ? corner_var[d] : nvar++);
        }
    }
    Matrix st = Matrix::Zero(nvar, nvar);
    Matrix et = Matrix::Zero(nvar, ng);  // E^T as a map U_Gamma -> tilde space
    for (std::size_t s = 0; s < ctx.substructures().size(); ++s) {
        const auto& sub = ctx.substructures()[s];
        const Matrix ss = oracle::dense_schur(sub.stiffness, sub.interface);
        const Vector& w = ctx.averaging().weights(static_cast<Index>(s));
        for (std::size_t i = 0; i < sub.interface.size(); ++i) {
            for (std::size_t j = 0; j < sub.interface.size(); ++j)
                st(var_of[s][i], var_of[s][j]) += ss(static_cast<Index>(i), static_cast<Index>(j));
            const Index d = sub.dofs[static_cast<std::size_t>(sub.interface[i])];
            et(var_of[s][i], gamma_pos[d]) = corner_dofs.count(d) ? 1.0 : w(sub.interface[i]);
        }
    }
    const Matrix oracle_m = et.transpose() * st.llt().solve(et);
    const Matrix m = dense_operator([&](const Vector& r) { return bddc.apply_reduced(r); }, ng);
    CHECK((m - oracle_m).norm() <= 1e-9 * oracle_m.norm());
}

TEST_CASE("single substructure gives the exact inverse") {
    const LevelSystem fine = fine_level_system(build_unit_square_mesh(4, 4), {1.0, 2.0});
    const auto setup = setup_multilevel_bddc(fine, {{1, 1, std::nullopt}}, {});
    const Matrix a = assemble(fine).dense();
    std::mt19937_64 rng(19);
    const Vector r = oracle::random_vector(fine.num_dofs, rng);
    const Vector u = setup.preconditioner.apply(r);
    CHECK((a * u - r).norm() <= 1e-10 * r.norm());
}

TEST_CASE("reduced and unreduced iterates agree") {
    auto f = fixture::level1(16, 4, ConstraintKind::corners, 1, 1, 5);
    const auto& ctx = *f.context;
    const MultilevelBddc bddc({ctx});
    const Vector rhs = build_rhs(f.mesh);

    std::vector<Vector> full_iterates, reduced_iterates;
    const auto full = pcg([&](const Vector& v) { return Vector(f.matrix * v); }, [&](const Vector& r) { return bddc.apply(r); }, rhs, {},
        ctx.interior_correction(rhs), [&](int, const Vector& x) { full_iterates.push_back(x); });
    const Vector g = ctx.reduce_rhs(rhs);
    const auto red = pcg([&](const Vector& v) { return ctx.schur_apply(v); }, [&](const Vector& r) { return bddc.apply_reduced(r); }, g,
        {}, Vector(), [&](int, const Vector& x) { reduced_iterates.push_back(ctx.extend_interface(x, rhs)); });
    CHECK(full.report.iterations == red.report.iterations);
    REQUIRE(full_iterates.size() == reduced_iterates.size());
    for (std::size_t k = 0; k < full_iterates.size(); ++k)
        CHECK((full_iterates[k] - reduced_iterates[k]).norm() <= 1e-9 * full_iterates[k].norm());

    // Schur complement consistency against the assembled matrix.
    CHECK((f.matrix * reduced_iterates.back() - rhs).norm() <= 1e-7 * rhs.norm());
    CHECK((f.matrix * full.x - rhs).norm() <= 1e-7 * rhs.norm());
}

}
