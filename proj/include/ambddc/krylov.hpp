/// @file krylov.hpp
/// @brief Preconditioned conjugate gradients with a Lanczos condition
/// number estimate, and an explicit spectrum of MA for small problems.

#ifndef AMBDDC_KRYLOV_HPP
#define AMBDDC_KRYLOV_HPP

#include "ambddc/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ambddc {

using LinearOperator = std::function<Vector(const Vector&)>;

struct PcgOptions {
    double tol = 1e-8;        // on ||r||_M / ||r_0||_M
    double abs_tol = 1e-14;   // on ||r||_M
    int max_it = 500;
};

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;  // relative M-norm residual, entry 0 is 1
    double final_residual = 0.0;
    double lambda_min = 1.0;  // extreme Ritz values
    double lambda_max = 1.0;
    double kappa = 1.0;
    std::vector<double> alpha;
    std::vector<double> beta;
};

struct PcgResult {
    Vector x;
    SolveReport report;
};

/// Called after every iteration with the iteration number and the iterate.
using IterateCallback = std::function<void(int, const Vector&)>;

/// Throws NumericalError when p'Ap <= 0 or r'Mr < 0.
PcgResult pcg(const LinearOperator& apply_a, const LinearOperator& apply_m, const Vector& b,
              const PcgOptions& options = {}, const Vector& x0 = Vector(), const IterateCallback& callback = {});

/// Eigenvalues (ascending) of the Lanczos tridiagonal built from the PCG
/// coefficients.
Vector lanczos_ritz_values(const std::vector<double>& alpha, const std::vector<double>& beta);

/// All eigenvalues of MA, ascending, formed from n applications of each operator.
Vector explicit_spectrum_oracle(const LinearOperator& apply_a, const LinearOperator& apply_m, Index n);

}  // namespace ambddc

#endif  // AMBDDC_KRYLOV_HPP
