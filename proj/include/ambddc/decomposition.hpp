/// @file decomposition.hpp
/// @brief Substructuring on every level of the hierarchy: the per-level
/// finite element structure, grid partitions with the jag operator,
/// interface globs and initial corner selection.
///
/// A level is described by a LevelSystem. On level 1 its elements are the Q1
/// quads and its nodes the free mesh nodes. On level l > 1 the elements are
/// level l-1 substructures (element matrices are their coarse stiffness) and
/// the nodes are level l-1 globs carrying a variable number of coarse dofs.

#ifndef AMBDDC_DECOMPOSITION_HPP
#define AMBDDC_DECOMPOSITION_HPP

#include "ambddc/common.hpp"
#include "ambddc/fem.hpp"

#include <compare>
#include <vector>

namespace ambddc {

struct LevelNode {
    double x = 0.0;
    double y = 0.0;
    std::vector<Index> dofs;
};

struct LevelElement {
    std::vector<Index> nodes;  // sorted
    std::vector<Index> dofs;   // ordering of the element matrix
    Matrix stiffness;
};

struct LevelSystem {
    int level = 1;
    Index num_dofs = 0;
    std::vector<LevelNode> nodes;
    std::vector<Index> dof_node;
    std::vector<int> dof_component;  // 0 = x, 1 = y, -1 = untagged
    std::vector<LevelElement> elements;
    int grid_nx = 0;  // elements form a logical grid_nx x grid_ny grid, row-major
    int grid_ny = 0;
    double element_size = 0.0;  // H_{l-1}; h on level 1
};

/// Level 1 structure of the boundary-eliminated Q1 problem. Dof numbering
/// matches apply_dirichlet and build_rhs.
LevelSystem fine_level_system(const Mesh& mesh, const ElasticMaterial& material);

SparseSymmetricMatrix assemble(const LevelSystem& system);

struct Partition {
    int level = 1;
    int grid_nx = 0;
    int grid_ny = 0;
    int kx = 0;
    int ky = 0;
    std::vector<Index> owner;  // element -> substructure
    double size = 0.0;         // H_l

    Index count() const { return static_cast<Index>(kx) * ky; }
    int block_width() const { return grid_nx / kx; }
    int block_height() const { return grid_ny / ky; }
    std::vector<Index> elements_of(Index substructure) const;
};

/// kx*ky rectangular substructures numbered bx + by*kx.
Partition partition_regular_grid(int grid_nx, int grid_ny, int kx, int ky, double element_size = 1.0,
                                 int level = 1);
Partition partition_regular_grid(const Mesh& mesh, int kx, int ky);

/// Sawtooth reassignment of the elements along the straight edge shared by
/// s and t. Blocks of `period` elements along the edge alternately move
/// `amplitude` element layers across it; blocks touching an interior
/// cross-point are left alone so the partition stays conforming.
Partition jag_interface_edge(const Partition& partition, Index s, Index t, int amplitude, int period = 2);

/// Level l+1 partition whose elements are the level l substructures.
Partition agglomerate(const Partition& partition, int kx, int ky);

/// Fine element -> level l substructure for a chain of partitions.
std::vector<Index> composite_owner(const std::vector<Partition>& chain);

bool is_edge_connected(const Partition& partition, Index substructure);

struct SubstructurePair {
    Index s = 0;
    Index t = 0;
    auto operator<=>(const SubstructurePair&) const = default;
};

struct Substructure {
    Index id = 0;
    std::vector<Index> elements;
    std::vector<Index> dofs;  // sorted; row k of R^s selects global dof dofs[k]
    std::vector<Index> nodes;
    std::vector<Index> interior;   // local indices
    std::vector<Index> interface;  // local indices
    Matrix stiffness;

    Index local_index(Index global_dof) const;  // -1 if absent
    Index size() const { return static_cast<Index>(dofs.size()); }
};

std::vector<Substructure> build_substructures(const LevelSystem& system, const Partition& partition);

enum class GlobKind { corner, edge };

struct Glob {
    GlobKind kind = GlobKind::corner;
    std::vector<Index> nodes;          // sorted
    std::vector<Index> substructures;  // sorted
    std::vector<Index> dofs;           // sorted
    bool promoted = false;             // edge node promoted to a corner
};

struct GlobSet {
    std::vector<Glob> globs;
    std::vector<Index> node_glob;  // -1 for nodes not on the interface
    std::vector<SubstructurePair> adjacent_pairs;

    /// Edge glob shared by the pair, or -1.
    Index edge_of(SubstructurePair pair) const;
    /// Globs shared by both substructures of the pair.
    std::vector<Index> shared_globs(SubstructurePair pair) const;
    Index interface_dof_count() const;
};

/// Nodes shared by three or more substructures become corners; nodes shared
/// by exactly one pair form that pair's edge.
GlobSet classify_globs(const Partition& partition, const LevelSystem& system);

struct CornerSelection {
    GlobSet globs;
    std::vector<SubstructurePair> promoted_pairs;  // pairs that had fewer than two shared corners
};

/// Every cross-point is a corner. A pair sharing fewer than two corners gets
/// its edge endpoints promoted (the edge node farthest from the shared
/// corner, or the two mutually farthest edge nodes when there is none).
CornerSelection select_initial_corners(const GlobSet& globs, const LevelSystem& system, bool promote = true);

/// Everything about one level that does not depend on the coarse space.
struct LevelDecomposition {
    LevelSystem system;
    Partition partition;
    std::vector<Substructure> substructures;
    GlobSet globs;
    std::vector<SubstructurePair> promoted_pairs;

    int level() const { return system.level; }
};

LevelDecomposition decompose(LevelSystem system, Partition partition, bool promote_corners = true);

}  // namespace ambddc

#endif  // AMBDDC_DECOMPOSITION_HPP
