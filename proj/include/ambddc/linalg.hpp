/// @file linalg.hpp
/// @brief Dense and sparse kernels: Cholesky factorizations, constrained
/// energy minimization, and the symmetric-definite generalized eigensolver.

#ifndef AMBDDC_LINALG_HPP
#define AMBDDC_LINALG_HPP

#include "ambddc/common.hpp"
#include "ambddc/fem.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace ambddc {

/// Dense Cholesky factorization of an SPD matrix.
class DenseCholesky {
public:
    DenseCholesky() = default;
    explicit DenseCholesky(const Matrix& matrix);

    Index rows() const { return n_; }
    Vector solve(const Vector& b) const;
    Matrix solve(const Matrix& b) const;
    /// Lower factor L with A = L L^T.
    Matrix factor() const { return llt_.matrixL(); }

private:
    Index n_ = 0;
    Eigen::LLT<Matrix> llt_;
};

/// Sparse LDL^T of an SPD matrix with fill-reducing ordering.
class SparseCholesky {
public:
    SparseCholesky() = default;
    explicit SparseCholesky(const SparseSymmetricMatrix& matrix);

    Index rows() const { return n_; }
    Vector solve(const Vector& b) const;

private:
    Index n_ = 0;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower>> ldlt_;
};

DenseCholesky factor_spd(const Matrix& matrix);
SparseCholesky factor_spd(const SparseSymmetricMatrix& matrix);

/// First index k at which unpivoted Cholesky meets a pivot <= 0, with that
/// pivot value; index -1 when the matrix is numerically positive definite.
std::pair<Index, double> cholesky_breakdown(const Matrix& matrix);

/// Orthonormal basis of range(a): columns of the column-pivoted QR whose
/// |R_kk| exceeds rel_tol * |R_00|.
Matrix orthonormal_range(const Matrix& a, double rel_tol = 1e-10);

/// Indices of a maximal linearly independent subset of the rows of c,
/// in increasing order.
std::vector<Index> independent_rows(const Matrix& c, double rel_tol = 1e-10);

/// Stiffness K (PSD) bordered by constraints C: min 1/2 x'Kx - f'x s.t. Cx = g.
struct SaddlePointSystem {
    Matrix stiffness;
    Matrix constraints;
};

struct SaddlePointSolution {
    Vector primal;
    Vector multipliers;  // one per constraint row; zero for removed rows
};

/// Factored saddle-point operator. Uses K + rho*C'C (SPD whenever
/// null K and null C intersect trivially) and the constraint Schur complement.
class SaddlePointSolver {
public:
    SaddlePointSolver() = default;
    SaddlePointSolver(Matrix stiffness, const Matrix& constraints, double redundancy_tol = 1e-10);

    Index primal_size() const { return stiffness_.rows(); }
    Index constraint_count() const { return static_cast<Index>(row_scale_.size()); }
    /// Rows dropped as linearly dependent on the others.
    const std::vector<Index>& removed_rows() const { return removed_; }

    SaddlePointSolution solve(const Vector& rhs_primal, const Vector& rhs_constraint) const;
    /// Primal part only, with homogeneous constraints.
    Vector solve_homogeneous(const Vector& rhs_primal) const;

private:
    Matrix stiffness_;
    Matrix kept_;                   // normalized independent rows
    std::vector<Index> kept_index_; // original row index of each kept row
    std::vector<Index> removed_;
    std::vector<double> row_scale_; // per original row; 0 if removed
    double rho_ = 1.0;
    DenseCholesky regularized_;
    Matrix regularized_inv_ct_;     // (K + rho C'C)^{-1} C'
    DenseCholesky constraint_schur_;
};

SaddlePointSolution solve_saddle(const SaddlePointSystem& system, const Vector& rhs_primal,
                                 const Vector& rhs_constraint);

/// Eigenpairs of X w = omega Y w, eigenvalues in descending order and
/// eigenvectors Y-orthonormal.
struct GeneralizedEigenpairs {
    Vector values;
    Matrix vectors;
};

GeneralizedEigenpairs eig_sym_generalized(const Matrix& x, const Matrix& y);

bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

}  // namespace ambddc

#endif  // AMBDDC_LINALG_HPP
