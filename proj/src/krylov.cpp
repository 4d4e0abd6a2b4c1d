#include "ambddc/krylov.hpp"
#include "ambddc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ambddc {

Vector lanczos_ritz_values(const std::vector<double>& alpha, const std::vector<double>& beta) {
    const auto k = static_cast<Index>(alpha.size());
    if (k == 0) return Vector();
    Matrix t = Matrix::Zero(k, k);
    for (Index j = 0; j < k; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        t(j, j) = 1.0 / alpha[uj];
        if (j > 0) t(j, j) += beta[uj - 1] / alpha[uj - 1];
        if (j + 1 < k) {
            const double off = std::sqrt(beta[uj]) / alpha[uj];
            t(j, j + 1) = off;
            t(j + 1, j) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(t, Eigen::EigenvaluesOnly);
    return eig.eigenvalues();
}

PcgResult pcg(const LinearOperator& apply_a, const LinearOperator& apply_m, const Vector& b,
              const PcgOptions& options, const Vector& x0, const IterateCallback& callback) {
    PcgResult out;
    auto& rep = out.report;
    out.x = x0.size() == 0 ? Vector(Vector::Zero(b.size())) : x0;
    if (out.x.size() != b.size()) throw std::invalid_argument("pcg: x0 size does not match b");

    Vector r = b - (x0.size() == 0 ? Vector(Vector::Zero(b.size())) : apply_a(out.x));
    Vector z = apply_m(r);
    double rz = r.dot(z);
    if (rz < 0.0) throw NumericalError("pcg: preconditioner is not positive definite (r'Mr < 0)");
    const double norm0 = std::sqrt(rz);
    rep.residual_history.push_back(1.0);
    if (norm0 <= options.abs_tol) {
        rep.converged = true;
        rep.final_residual = norm0 > 0.0 ? 1.0 : 0.0;
        return out;
    }
    Vector p = z;
    for (int it = 1; it <= options.max_it; ++it) {
        const Vector ap = apply_a(p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            std::ostringstream os;
            os << "pcg: operator is not positive definite (p'Ap = " << pap << " at iteration " << it << ")";
            throw NumericalError(os.str());
        }
        const double alpha = rz / pap;
        out.x += alpha * p;
        r -= alpha * ap;
        z = apply_m(r);
        const double rz_next = r.dot(z);
        if (rz_next < 0.0) throw NumericalError("pcg: preconditioner is not positive definite (r'Mr < 0)");
        rep.alpha.push_back(alpha);
        rep.iterations = it;
        const double norm = std::sqrt(rz_next);
        rep.residual_history.push_back(norm / norm0);
        if (callback) callback(it, out.x);
        if (norm / norm0 <= options.tol || norm <= options.abs_tol) {
            rep.converged = true;
            break;
        }
        const double beta = rz_next / rz;
        rep.beta.push_back(beta);
        p = z + beta * p;
        rz = rz_next;
    }
    rep.final_residual = rep.residual_history.back();
    const Vector ritz = lanczos_ritz_values(rep.alpha, rep.beta);
    if (ritz.size() > 0) {
        rep.lambda_min = ritz(0);
        rep.lambda_max = ritz(ritz.size() - 1);
        rep.kappa = rep.lambda_min > 0.0 ? rep.lambda_max / rep.lambda_min : std::numeric_limits<double>::infinity();
    }
    return out;
}

Vector explicit_spectrum_oracle(const LinearOperator& apply_a, const LinearOperator& apply_m, Index n) {
    if (n > 2000) throw std::invalid_argument("explicit_spectrum_oracle: dimension exceeds 2000");
    Matrix a(n, n), ma(n, n);
    for (Index j = 0; j < n; ++j) {
        a.col(j) = apply_a(Vector::Unit(n, j));
        ma.col(j) = apply_m(a.col(j));
    }
    a = 0.5 * (a + a.transpose()).eval();
    // A M A w = lambda A w has the eigenvalues of MA.
    Matrix ama = a * ma;
    ama = 0.5 * (ama + ama.transpose()).eval();
    Vector values = eig_sym_generalized(ama, a).values;
    return values.reverse();
}

}  // namespace ambddc
