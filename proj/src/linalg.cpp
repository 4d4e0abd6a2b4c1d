#include "ambddc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ambddc {

namespace {

constexpr double kPivotTol = 1e-12;

std::string breakdown_message(const char* what, Index pivot, double value) {
    std::ostringstream os;
    os << what << ": non-positive pivot " << value << " at index " << pivot;
    return os.str();
}

}  // namespace

bool is_symmetric(const Matrix& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    if (a.size() == 0) return true;
    const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

std::pair<Index, double> cholesky_breakdown(const Matrix& matrix) {
    const Index n = matrix.rows();
    if (n == 0) return {-1, 0.0};
    const double scale = matrix.diagonal().cwiseAbs().maxCoeff();
    Matrix l = matrix.triangularView<Eigen::Lower>();
    for (Index k = 0; k < n; ++k) {
        const double pivot = l(k, k) - l.row(k).head(k).squaredNorm();
        if (!(pivot > kPivotTol * scale)) return {k, pivot};
        l(k, k) = std::sqrt(pivot);
        for (Index i = k + 1; i < n; ++i)
            l(i, k) = (l(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / l(k, k);
    }
    return {-1, 0.0};
}

DenseCholesky::DenseCholesky(const Matrix& matrix) : n_(matrix.rows()) {
    if (!is_symmetric(matrix, 1e-10)) throw std::invalid_argument("factor_spd: matrix is not symmetric");
    if (n_ == 0) return;
    llt_.compute(matrix);
    bool ok = llt_.info() == Eigen::Success;
    if (ok) {
        const double scale = matrix.diagonal().cwiseAbs().maxCoeff();
        const Vector pivots = Matrix(llt_.matrixL()).diagonal().array().square();
        ok = (pivots.array() > kPivotTol * scale).all();
    }
    if (!ok) {
        const auto [k, value] = cholesky_breakdown(matrix);
        throw NumericalError(breakdown_message("dense Cholesky breakdown", k, value));
    }
}

Vector DenseCholesky::solve(const Vector& b) const {
    if (b.size() != n_) throw std::invalid_argument("DenseCholesky::solve: size mismatch");
    if (n_ == 0) return Vector();
    return llt_.solve(b);
}

Matrix DenseCholesky::solve(const Matrix& b) const {
    if (b.rows() != n_) throw std::invalid_argument("DenseCholesky::solve: size mismatch");
    if (n_ == 0) return Matrix(0, b.cols());
    return llt_.solve(b);
}

SparseCholesky::SparseCholesky(const SparseSymmetricMatrix& matrix) : n_(matrix.rows()) {
    if (n_ == 0) return;
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower>>();
    ldlt_->compute(matrix.lower());
    if (ldlt_->info() != Eigen::Success) throw NumericalError("sparse LDL^T factorization failed");
    const Vector d = ldlt_->vectorD();
    const double scale = matrix.lower().diagonal().cwiseAbs().maxCoeff();
    for (Index k = 0; k < d.size(); ++k) {
        if (!(d(k) > kPivotTol * scale)) {
            // Report the pivot in the caller's numbering.
            const Index original = ldlt_->permutationPinv().indices()(k);
            throw NumericalError(breakdown_message("sparse Cholesky breakdown", original, d(k)));
        }
    }
}

Vector SparseCholesky::solve(const Vector& b) const {
    if (b.size() != n_) throw std::invalid_argument("SparseCholesky::solve: size mismatch");
    if (n_ == 0) return Vector();
    return ldlt_->solve(b);
}

DenseCholesky factor_spd(const Matrix& matrix) { return DenseCholesky(matrix); }
SparseCholesky factor_spd(const SparseSymmetricMatrix& matrix) { return SparseCholesky(matrix); }

Matrix orthonormal_range(const Matrix& a, double rel_tol) {
    if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    const Matrix r = qr.matrixR().template triangularView<Eigen::Upper>();
    const Index diag = std::min(a.rows(), a.cols());
    const double lead = diag > 0 ? std::abs(r(0, 0)) : 0.0;
    Index rank = 0;
    while (rank < diag && lead > 0.0 && std::abs(r(rank, rank)) > rel_tol * lead) ++rank;
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), rank);
    return q;
}

std::vector<Index> independent_rows(const Matrix& c, double rel_tol) {
    std::vector<Index> rows;
    if (c.rows() == 0 || c.cols() == 0) return rows;
    const Matrix ct = c.transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(ct);
    const Matrix r = qr.matrixR().template triangularView<Eigen::Upper>();
    const Index diag = std::min(ct.rows(), ct.cols());
    const double lead = std::abs(r(0, 0));
    for (Index k = 0; k < diag && lead > 0.0 && std::abs(r(k, k)) > rel_tol * lead; ++k)
        rows.push_back(qr.colsPermutation().indices()(k));
    std::sort(rows.begin(), rows.end());
    return rows;
}

SaddlePointSolver::SaddlePointSolver(Matrix stiffness, const Matrix& constraints, double redundancy_tol)
    : stiffness_(std::move(stiffness)) {
    const Index n = stiffness_.rows();
    if (stiffness_.cols() != n) throw std::invalid_argument("SaddlePointSolver: stiffness is not square");
    if (constraints.rows() > 0 && constraints.cols() != n)
        throw std::invalid_argument("SaddlePointSolver: constraint width does not match stiffness");

    const Index m = constraints.rows();
    row_scale_.assign(static_cast<std::size_t>(m), 0.0);
    Matrix normalized(m, n);
    for (Index i = 0; i < m; ++i) {
        const double norm = constraints.row(i).norm();
        normalized.row(i) = norm > 0.0 ? Vector(constraints.row(i).transpose() / norm) : Vector::Zero(n);
    }
    kept_index_ = independent_rows(normalized, redundancy_tol);
    for (Index i = 0, k = 0; i < m; ++i) {
        if (k < static_cast<Index>(kept_index_.size()) && kept_index_[static_cast<std::size_t>(k)] == i) {
            row_scale_[static_cast<std::size_t>(i)] = 1.0 / constraints.row(i).norm();
            ++k;
        } else {
            removed_.push_back(i);
        }
    }
    kept_.resize(static_cast<Index>(kept_index_.size()), n);
    for (std::size_t k = 0; k < kept_index_.size(); ++k)
        kept_.row(static_cast<Index>(k)) = normalized.row(kept_index_[k]);

    if (n > 0) {
        const double mean_diag = stiffness_.diagonal().mean();
        rho_ = mean_diag > 0.0 ? mean_diag : 1.0;
    }
    Matrix regularized = stiffness_ + rho_ * kept_.transpose() * kept_;
    try {
        regularized_ = DenseCholesky(regularized);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("saddle-point system is singular (constraints do not control the "
                                         "stiffness nullspace); ") + e.what());
    }
    regularized_inv_ct_ = regularized_.solve(Matrix(kept_.transpose()));
    Matrix schur = kept_ * regularized_inv_ct_;
    schur = 0.5 * (schur + schur.transpose()).eval();
    constraint_schur_ = DenseCholesky(schur);
}

SaddlePointSolution SaddlePointSolver::solve(const Vector& rhs_primal, const Vector& rhs_constraint) const {
    if (rhs_primal.size() != primal_size() || rhs_constraint.size() != constraint_count())
        throw std::invalid_argument("SaddlePointSolver::solve: size mismatch");
    const auto kept = static_cast<Index>(kept_index_.size());
    Vector g(kept);
    for (Index k = 0; k < kept; ++k) {
        const Index i = kept_index_[static_cast<std::size_t>(k)];
        g(k) = rhs_constraint(i) * row_scale_[static_cast<std::size_t>(i)];
    }
    const Vector y = regularized_.solve(Vector(rhs_primal + rho_ * kept_.transpose() * g));
    const Vector mu = constraint_schur_.solve(Vector(kept_ * y - g));

    SaddlePointSolution out;
    out.primal = y - regularized_inv_ct_ * mu;
    out.multipliers = Vector::Zero(constraint_count());
    for (Index k = 0; k < kept; ++k) {
        const Index i = kept_index_[static_cast<std::size_t>(k)];
        out.multipliers(i) = mu(k) * row_scale_[static_cast<std::size_t>(i)];
    }
    return out;
}

Vector SaddlePointSolver::solve_homogeneous(const Vector& rhs_primal) const {
    if (rhs_primal.size() != primal_size()) throw std::invalid_argument("SaddlePointSolver: size mismatch");
    const Vector y = regularized_.solve(rhs_primal);
    if (kept_.rows() == 0) return y;
    const Vector mu = constraint_schur_.solve(Vector(kept_ * y));
    return y - regularized_inv_ct_ * mu;
}

SaddlePointSolution solve_saddle(const SaddlePointSystem& system, const Vector& rhs_primal,
                                 const Vector& rhs_constraint) {
    return SaddlePointSolver(system.stiffness, system.constraints).solve(rhs_primal, rhs_constraint);
}

GeneralizedEigenpairs eig_sym_generalized(const Matrix& x, const Matrix& y) {
    const Index n = x.rows();
    if (x.cols() != n || y.rows() != n || y.cols() != n)
        throw std::invalid_argument("eig_sym_generalized: dimension mismatch");
    if (!is_symmetric(x, 1e-10) || !is_symmetric(y, 1e-10))
        throw std::invalid_argument("eig_sym_generalized: X and Y must be symmetric");
    GeneralizedEigenpairs out;
    if (n == 0) return out;

    DenseCholesky chol;
    try {
        chol = DenseCholesky(y);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("eig_sym_generalized: Y is not positive definite; ") + e.what());
    }
    const Matrix l = chol.factor();
    const auto lower = l.triangularView<Eigen::Lower>();
    // A = L^{-1} X L^{-T}
    Matrix a = lower.solve(x);
    a = lower.solve(Matrix(a.transpose()));
    a = 0.5 * (a + a.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    if (eig.info() != Eigen::Success) throw NumericalError("eig_sym_generalized: eigensolver did not converge");
    out.values = eig.eigenvalues().reverse();
    const Matrix v = eig.eigenvectors().rowwise().reverse();
    out.vectors = l.transpose().triangularView<Eigen::Upper>().solve(v);
    return out;
}

}  // namespace ambddc
