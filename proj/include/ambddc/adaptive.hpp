/// @file adaptive.hpp
/// @brief Pairwise generalized eigenproblems, adaptive coarse dofs, the
/// condition number indicator, and the multilevel setup driver.
///
/// A pair vector w = [w_s; w_t] holds the values of s and t on their whole
/// interfaces. I - E is nonzero only on the dofs the two share.

#ifndef AMBDDC_ADAPTIVE_HPP
#define AMBDDC_ADAPTIVE_HPP

#include "ambddc/bddc.hpp"
#include "ambddc/common.hpp"
#include "ambddc/decomposition.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ambddc {

struct PairProblem {
    SubstructurePair pair;
    int level = 1;
    std::vector<Index> shared;       // dofs shared by s and t, sorted
    std::vector<Index> interface_s;  // interface dofs of s, sorted
    std::vector<Index> interface_t;
    std::vector<Index> shared_in_s;  // position of each shared dof in interface_s
    std::vector<Index> shared_in_t;
    Index edge_glob = -1;
    std::vector<Index> edge_dofs;    // dofs of the edge glob, sorted
    Matrix schur;                    // blkdiag(S_s, S_t)
    Vector weight_s;                 // pair-renormalized weights on the shared dofs
    Vector weight_t;
    Matrix jump;                     // I - E on the pair space
    Matrix constraints;              // jump rows [c, -c] of every shared coarse dof
    Matrix initial_constraints;      // the same for non-adaptive coarse dofs only
    Matrix nullspace;                // Z
    double regularization = 1.0;     // a

    Index size_s() const { return static_cast<Index>(interface_s.size()); }
    Index size() const { return static_cast<Index>(interface_s.size() + interface_t.size()); }
};

/// Raises std::invalid_argument if s and t do not share an edge.
PairProblem assemble_pair_problem(const LevelContext& context, SubstructurePair pair);

/// Orthogonal projection onto the null space of the given rows.
Matrix null_projection(const Matrix& rows, Index dim);

struct PairOperators {
    Matrix pi;      // onto null C(I-E)
    Matrix pi_bar;  // I - projection onto range(Pi) & null S
    Matrix x;
    Matrix y;
};

PairOperators pair_operators(const PairProblem& problem);

struct PairEigenReport {
    SubstructurePair pair;
    Vector values;    // descending
    Matrix vectors;   // Y-orthonormal columns
    Index num_above = 0;  // eigenvalues > tau

    double top() const { return values.size() > 0 ? values(0) : 0.0; }
};

PairEigenReport solve_local_eigenproblem(const PairProblem& problem, double tau);

/// Rows c_k = w_k^T Pi_I X_hat Pi_I for the eigenvectors above tau, over
/// the full pair space.
Matrix generate_constraint_rows(const PairEigenReport& report, const PairProblem& problem);

struct AugmentationResult {
    Index added = 0;
    Index dropped = 0;
    double discarded = 0.0;  // largest |entry| cut off the edge, relative to the row
};

/// Tears each row, keeps the s block on the pair's edge and appends it to
/// the selection as a new column of Q_P.
AugmentationResult augment_coarse_selection(CoarseSelection& selection, const Matrix& rows,
                                            const PairProblem& problem);

struct IndicatorReport {
    double tau = std::numeric_limits<double>::infinity();
    std::vector<double> level_max;  // per level, max over pairs of the top eigenvalue
    double omega_tilde = 1.0;
};

IndicatorReport condition_indicator(const std::vector<std::vector<PairEigenReport>>& levels, double tau);

// ------------------------------------------------------------------ setup

struct JagSpec {
    Index s = 0;
    Index t = 0;
    int amplitude = 1;
    int period = 2;
};

struct LevelPlan {
    int kx = 1;
    int ky = 1;
    std::optional<JagSpec> jag;
};

enum class ConstraintMode { corners, corners_and_edges, adaptive };

struct SetupOptions {
    ConstraintMode mode = ConstraintMode::corners;
    double tau = std::numeric_limits<double>::infinity();
    Scaling scaling = Scaling::stiffness;
    bool promote_corners = true;
    bool compute_spectra = false;  // pair spectra in non-adaptive modes
};

struct PairSpectrum {
    SubstructurePair pair;
    Vector values;  // descending
};

struct LevelReport {
    int level = 1;
    Partition partition;
    Index num_substructures = 0;
    Index num_dofs = 0;
    Index initial_coarse_dofs = 0;
    Index adaptive_coarse_dofs = 0;
    Index coarse_dofs = 0;
    std::vector<PairSpectrum> spectra;       // before augmentation
    std::vector<PairEigenReport> recomputed; // after augmentation
    std::vector<std::string> warnings;
};

struct SetupResult {
    MultilevelBddc preconditioner;
    std::vector<LevelReport> levels;
    std::optional<IndicatorReport> indicator;
};

/// Setup of the multilevel hierarchy: one plan per level l = 1..L-1.
SetupResult setup_multilevel_bddc(const LevelSystem& fine, const std::vector<LevelPlan>& plans,
                                  const SetupOptions& options);

}  // namespace ambddc

#endif  // AMBDDC_ADAPTIVE_HPP
