// Independent reference computations used by the tests.

#ifndef AMBDDC_TESTS_ORACLES_HPP
#define AMBDDC_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Q1 plane-strain element matrix by 2x2 Gauss quadrature.
Matrix gauss_element_stiffness(double lambda, double mu, double hx, double hy);

/// K_bb - K_bi K_ii^{-1} K_ib with an explicit inverse.
Matrix dense_schur(const Matrix& k, const std::vector<Eigen::Index>& keep);

/// Eigenvalues of a symmetric matrix, ascending.
Vector symmetric_eigenvalues(const Matrix& a);

/// Number of eigenvalues below rel_tol times the largest.
int numerical_nullity(const Matrix& a, double rel_tol = 1e-10);

Vector random_vector(Eigen::Index n, std::mt19937_64& rng);

/// Columns spanning null(c), from a full SVD.
Matrix null_space(const Matrix& c, double rel_tol = 1e-10);

}  // namespace oracle

#endif
