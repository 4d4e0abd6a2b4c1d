/// @file fem.hpp
/// @brief Structured Q1 plane-strain elasticity on the unit square.

#ifndef AMBDDC_FEM_HPP
#define AMBDDC_FEM_HPP

#include "ambddc/common.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ambddc {

/// Uniform quadrilateral mesh of [0,1]^2. Nodes are numbered row-major
/// (i + j*(nx+1)); element e = i + j*nx has nodes in counterclockwise order.
struct Mesh {
    int nx = 0;
    int ny = 0;
    std::vector<std::array<double, 2>> coords;
    std::vector<std::array<Index, 4>> elements;
    std::vector<bool> on_boundary;

    Index num_nodes() const { return static_cast<Index>(coords.size()); }
    Index num_elements() const { return static_cast<Index>(elements.size()); }
    double hx() const { return 1.0 / nx; }
    double hy() const { return 1.0 / ny; }
};

struct ElasticMaterial {
    double lame_lambda = 1.0;
    double lame_mu = 2.0;
};

/// Symmetric sparse matrix; only the lower triangle is stored.
class SparseSymmetricMatrix {
public:
    SparseSymmetricMatrix() = default;
    /// Takes ownership of a lower-triangular CSC matrix.
    explicit SparseSymmetricMatrix(Eigen::SparseMatrix<double> lower);

    Index rows() const { return lower_.rows(); }
    const Eigen::SparseMatrix<double>& lower() const { return lower_; }

    Vector operator*(const Vector& x) const;
    Eigen::SparseMatrix<double> full() const;
    Matrix dense() const;
    double coeff(Index i, Index j) const;

private:
    Eigen::SparseMatrix<double> lower_;
};

/// Boundary-eliminated system over the free dofs.
struct FreeDofSystem {
    SparseSymmetricMatrix matrix;
    std::vector<Index> free_to_full;
    std::vector<Index> full_to_free;  // -1 for constrained dofs
};

using BodyForce = std::function<std::array<double, 2>(double, double)>;

Mesh build_unit_square_mesh(int nx, int ny);

/// Closed-form Q1 plane-strain stiffness of an hx-by-hy rectangle.
/// Dofs are (u_x, u_y) per node, nodes counterclockwise from the lower left.
Eigen::Matrix<double, 8, 8> element_stiffness_q1(const ElasticMaterial& material, double hx, double hy);
inline Eigen::Matrix<double, 8, 8> element_stiffness_q1(const ElasticMaterial& material, double h) {
    return element_stiffness_q1(material, h, h);
}

/// Global matrix over all 2*(nx+1)*(ny+1) dofs, elements summed in the given order.
SparseSymmetricMatrix assemble_stiffness(const Mesh& mesh, const ElasticMaterial& material,
                                         bool reverse_element_order = false);

FreeDofSystem apply_dirichlet(const SparseSymmetricMatrix& matrix, const Mesh& mesh);

/// Consistent load over free dofs. Defaults to a uniform unit force.
Vector build_rhs(const Mesh& mesh, const BodyForce& body_force = {});

/// Matrix Market "coordinate real symmetric" (lower triangle, 1-based).
void write_matrix_market(std::ostream& out, const SparseSymmetricMatrix& matrix);
void write_matrix_market(const std::string& path, const SparseSymmetricMatrix& matrix);
/// General coordinate format for rectangular sparse matrices.
void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& matrix);

}  // namespace ambddc

#endif  // AMBDDC_FEM_HPP
