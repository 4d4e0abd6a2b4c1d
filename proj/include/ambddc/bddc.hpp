/// @file bddc.hpp
/// @brief Per-level BDDC operators and the multilevel preconditioner.
///
/// Level vectors live in U_l (assembled level dofs); broken vectors in W_l
/// are stored as one local vector per substructure, ordered by
/// Substructure::dofs. Coarse dofs are continuous functionals of the
/// substructure values; the coarse basis Phi_s is energy minimal with one
/// local coarse dof equal to one and the others zero.

#ifndef AMBDDC_BDDC_HPP
#define AMBDDC_BDDC_HPP

#include "ambddc/common.hpp"
#include "ambddc/decomposition.hpp"
#include "ambddc/linalg.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ambddc {

using LocalVectors = std::vector<Vector>;

enum class Scaling { stiffness, multiplicity };

/// Weighted average E: W -> U, (E w) = sum_s R_s^T D_s w_s with D_s = 1 on
/// interior dofs and the interface weights summing to one per dof.
class AveragingOperator {
public:
    AveragingOperator() = default;
    AveragingOperator(Index num_dofs, std::vector<std::vector<Index>> local_dofs, LocalVectors weights);

    Index num_dofs() const { return num_dofs_; }
    const Vector& weights(Index s) const { return weights_[static_cast<std::size_t>(s)]; }

    Vector average(const LocalVectors& w) const;
    LocalVectors restrict(const Vector& u) const;
    /// E^T applied to a level residual: D_s R_s r per substructure.
    LocalVectors weighted_restrict(const Vector& r) const;
    /// Weights of s and t at the given global dofs, renormalized to sum to one.
    std::pair<Vector, Vector> pair_weights(Index s, Index t, const std::vector<Index>& dofs) const;

private:
    Index num_dofs_ = 0;
    std::vector<std::vector<Index>> local_dofs_;
    LocalVectors weights_;
};

AveragingOperator build_averaging(const LevelDecomposition& decomposition, Scaling scaling = Scaling::stiffness);

enum class CoarseDofKind { corner, edge_average, adaptive };

/// One global coarse dof: a column of Q_P, supported on a single glob.
struct CoarseDof {
    Index glob = 0;
    CoarseDofKind kind = CoarseDofKind::corner;
    int component = -1;
    std::vector<std::pair<Index, double>> weights;  // (level dof, weight)
};

struct CoarseSelection {
    Index num_level_dofs = 0;
    std::vector<CoarseDof> dofs;  // grouped by glob, in glob order
    std::vector<std::string> warnings;

    Index size() const { return static_cast<Index>(dofs.size()); }
    Index count(CoarseDofKind kind) const;
    Eigen::SparseMatrix<double> q_p() const;
    std::vector<Index> columns_of_glob(Index glob) const;
    /// Appends a dof to its glob's group unless it is (nearly) parallel to
    /// the glob's existing columns. Returns false if dropped.
    bool add(CoarseDof dof, double angle_tol = 1e-8);
};

enum class ConstraintKind { corners, corners_and_edges };

/// Corner rows (one per corner dof) and optionally one arithmetic average
/// per displacement component on every edge.
CoarseSelection build_constraints(const LevelDecomposition& decomposition, ConstraintKind kind);

/// Local constraint matrices C_s with C R = R_c Q_P^T.
struct ConstraintMatrix {
    std::vector<Matrix> local;                 // rows over substructure dofs
    std::vector<std::vector<Index>> coarse_id; // R_c: local row -> global coarse dof
};

ConstraintMatrix local_constraints(const LevelDecomposition& decomposition, const CoarseSelection& selection);

/// All operators the multilevel application needs on one level.
class LevelContext {
public:
    LevelContext(std::shared_ptr<const LevelDecomposition> decomposition, AveragingOperator averaging,
                 CoarseSelection selection);

    int level() const { return decomposition_->level(); }
    const LevelDecomposition& decomposition() const { return *decomposition_; }
    std::shared_ptr<const LevelDecomposition> shared_decomposition() const { return decomposition_; }
    const std::vector<Substructure>& substructures() const { return decomposition_->substructures; }
    const AveragingOperator& averaging() const { return averaging_; }
    const CoarseSelection& selection() const { return selection_; }
    const ConstraintMatrix& constraints() const { return constraints_; }
    Index num_dofs() const { return decomposition_->system.num_dofs; }
    Index num_coarse_dofs() const { return selection_.size(); }

    const Matrix& coarse_basis(Index s) const { return local_[static_cast<std::size_t>(s)].basis; }
    const Matrix& coarse_element(Index s) const { return local_[static_cast<std::size_t>(s)].coarse_stiffness; }
    const SaddlePointSolver& constrained_solver(Index s) const { return local_[static_cast<std::size_t>(s)].saddle; }
    /// S_s on the local interface dofs (Substructure::interface order).
    const Matrix& local_schur(Index s) const { return local_[static_cast<std::size_t>(s)].schur; }

    /// A_l u = sum_s R_s^T K_s R_s u.
    Vector apply_operator(const Vector& u) const;
    /// Interior pre-correction: Dirichlet solves on substructure interiors.
    Vector interior_correction(const Vector& r) const;
    /// Substructure correction w_Delta with zero coarse dofs and rhs E^T r_b.
    LocalVectors delta_correction(const Vector& r_b) const;
    /// Right-hand side handed to level l+1: Phi^T E^T r_b assembled by R_c.
    Vector coarse_residual(const Vector& r_b) const;
    /// Coarse function Phi_s R_c,s u_c on every substructure.
    LocalVectors coarse_extension(const Vector& u_c) const;
    Vector average(const LocalVectors& w) const { return averaging_.average(w); }

    /// Level l+1 finite element structure: nodes are globs with coarse dofs,
    /// elements are the substructures with their coarse stiffness.
    LevelSystem coarse_system() const;

    // Interface reduction: the Schur complement system on the interface dofs.
    const std::vector<Index>& interface_dofs() const { return interface_dofs_; }
    Vector schur_apply(const Vector& u_gamma) const;
    Vector reduce_rhs(const Vector& f) const;
    /// Full level vector from interface values: interior dofs solve
    /// K_II u_I = f_I - K_IG u_G.
    Vector extend_interface(const Vector& u_gamma, const Vector& f) const;

private:
    struct Local {
        Matrix constraints;
        SaddlePointSolver saddle;
        Matrix basis;             // Phi_s
        Matrix coarse_stiffness;  // Phi_s^T K_s Phi_s
        DenseCholesky interior;   // K_II
        Matrix k_ig;              // K_I,Gamma
        Matrix schur;             // S_s on local interface dofs
        std::vector<Index> interface_global;  // local interface dof -> position in interface_dofs_
    };

    std::shared_ptr<const LevelDecomposition> decomposition_;
    AveragingOperator averaging_;
    CoarseSelection selection_;
    ConstraintMatrix constraints_;
    std::vector<Local> local_;
    std::vector<Index> interface_dofs_;
};

/// Multilevel BDDC: level contexts for l = 1..L-1 and a direct solve on level L.
class MultilevelBddc {
public:
    MultilevelBddc() = default;
    explicit MultilevelBddc(std::vector<LevelContext> levels);

    int num_levels() const { return static_cast<int>(levels_.size()) + 1; }
    /// Level l context, 1 <= l <= L-1.
    const LevelContext& level(int l) const { return levels_.at(static_cast<std::size_t>(l - 1)); }
    Index top_size() const { return top_matrix_.rows(); }
    const SparseSymmetricMatrix& top_matrix() const { return top_matrix_; }

    /// r_1 -> u_1 with interior corrections on every level.
    Vector apply(const Vector& r) const;
    /// Level 1 reduced to the interface: r_Gamma -> u_Gamma.
    Vector apply_reduced(const Vector& r_gamma) const;

private:
    Vector apply_from(std::size_t l, const Vector& r) const;
    Vector coarse_correction(std::size_t l, const Vector& r_b, LocalVectors& w) const;

    std::vector<LevelContext> levels_;
    SparseSymmetricMatrix top_matrix_;
    SparseCholesky top_;
};

}  // namespace ambddc

#endif  // AMBDDC_BDDC_HPP
