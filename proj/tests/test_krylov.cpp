#include "ambddc/krylov.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cstring>

using namespace ambddc;

namespace {

LinearOperator matrix_op(const Matrix& a) {
    return [a](const Vector& v) { return Vector(a * v); };
}

Matrix spd_with_spectrum(const Vector& values, std::mt19937_64& rng) {
    const Index n = values.size();
    Matrix g(n, n);
    for (Index j = 0; j < n; ++j) g.col(j) = oracle::random_vector(n, rng);
    const Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix q = qr.householderQ();
    return q * values.asDiagonal() * q.transpose();
}

}  // namespace

TEST_SUITE("krylov") {

TEST_CASE("identity converges in one iteration") {
    const Index n = 10;
    const auto id = matrix_op(Matrix::Identity(n, n));
    const Vector b = Vector::LinSpaced(n, 1.0, 2.0);
    const auto r = pcg(id, id, b);
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    CHECK(r.report.kappa == doctest::Approx(1.0));
    CHECK((r.x - b).norm() <= 1e-14 * b.norm());
    CHECK(r.report.residual_history.front() == 1.0);
}

TEST_CASE("exact preconditioner") {
    std::mt19937_64 rng(29);
    const Matrix a = spd_with_spectrum(Vector::LinSpaced(30, 1.0, 100.0), rng);
    const Matrix inv = a.inverse();
    const Vector b = oracle::random_vector(30, rng);
    const auto r = pcg(matrix_op(a), matrix_op(inv), b);
    CHECK(r.report.converged);
    CHECK(r.report.iterations <= 2);
    CHECK((a * r.x - b).norm() <= 1e-8 * b.norm());
}

TEST_CASE("Lanczos estimate against the explicit spectrum") {
    std::mt19937_64 rng(31);
    const Vector values = Vector::LinSpaced(40, 1.0, 50.0);
    const Matrix a = spd_with_spectrum(values, rng);
    const auto id = matrix_op(Matrix::Identity(40, 40));
    const auto r = pcg(matrix_op(a), id, oracle::random_vector(40, rng), {1e-12, 1e-14, 200});
    const Vector spectrum = explicit_spectrum_oracle(matrix_op(a), id, 40);
    CHECK((spectrum - values).norm() <= 1e-9 * values.norm());
    const double kappa = spectrum(39) / spectrum(0);
    CHECK(r.report.kappa <= kappa * 1.05);
    CHECK(r.report.kappa >= kappa * 0.95);
    const Vector ritz = lanczos_ritz_values(r.report.alpha, r.report.beta);
    CHECK(ritz(0) >= spectrum(0) * (1.0 - 1e-8));
    CHECK(ritz(ritz.size() - 1) <= spectrum(39) * (1.0 + 1e-8));
    CHECK(r.report.kappa == doctest::Approx(ritz(ritz.size() - 1) / ritz(0)));

    CHECK((explicit_spectrum_oracle(id, id, 5) - Vector::Ones(5)).norm() <= 1e-12);
    CHECK_THROWS_AS(explicit_spectrum_oracle(id, id, 2001), std::invalid_argument);
}

TEST_CASE("BDDC spectrum is bounded below by one") {
    auto f = fixture::level1(8, 2);
    const MultilevelBddc bddc({*f.context});
    const auto& ctx = *f.context;
    const Index ng = static_cast<Index>(ctx.interface_dofs().size());
    const Vector spectrum = explicit_spectrum_oracle([&](const Vector& v) { return ctx.schur_apply(v); },
                                                     [&](const Vector& r) { return bddc.apply_reduced(r); }, ng);
    CHECK(spectrum(0) >= 1.0 - 1e-6);

    // A random load excites the antisymmetric modes a uniform load misses.
    std::mt19937_64 rng(43);
    const Vector g = oracle::random_vector(ng, rng);
    const auto r = pcg([&](const Vector& v) { return ctx.schur_apply(v); },
                       [&](const Vector& v) { return bddc.apply_reduced(v); }, g);
    CHECK(r.report.converged);
    const double kappa = spectrum(ng - 1) / spectrum(0);
    CHECK(std::abs(r.report.kappa - kappa) <= 0.05 * kappa);
}

TEST_CASE("breakdown and non-convergence") {
    Matrix indefinite = Matrix::Identity(3, 3);
    indefinite(2, 2) = -1.0;
    const auto id = matrix_op(Matrix::Identity(3, 3));
    CHECK_THROWS_AS(pcg(matrix_op(indefinite), id, Vector::Ones(3)), NumericalError);
    CHECK_THROWS_AS(pcg(id, matrix_op(indefinite), Vector::Ones(3)), NumericalError);

    std::mt19937_64 rng(37);
    const Matrix a = spd_with_spectrum(Vector::LinSpaced(50, 1.0, 1e4), rng);
    const auto r = pcg(matrix_op(a), matrix_op(Matrix::Identity(50, 50)), oracle::random_vector(50, rng), {1e-8, 1e-14, 3});
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.iterations == 3);
    CHECK(r.report.residual_history.size() == 4);

    const auto zero = pcg(id, id, Vector::Zero(3));
    CHECK(zero.report.converged);
    CHECK(zero.report.iterations == 0);
    CHECK(zero.x.norm() == 0.0);
}

TEST_CASE("bit reproducibility") {
    auto f = fixture::level1(16, 4, ConstraintKind::corners, 1, 1, 5);
    const MultilevelBddc bddc({*f.context});
    const Vector b = f.context->reduce_rhs(build_rhs(f.mesh));
    auto solve = [&] {
        return pcg([&](const Vector& v) { return f.context->schur_apply(v); },
                   [&](const Vector& v) { return bddc.apply_reduced(v); }, b);
    };
    const auto x = solve();
    const auto y = solve();
    REQUIRE(x.x.size() == y.x.size());
    CHECK(std::memcmp(x.x.data(), y.x.data(), sizeof(double) * static_cast<std::size_t>(x.x.size())) == 0);
    CHECK(x.report.residual_history == y.report.residual_history);
    CHECK(x.report.final_residual <= 1e-8);
}

}
