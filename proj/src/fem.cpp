#include "ambddc/fem.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace ambddc {

SparseSymmetricMatrix::SparseSymmetricMatrix(Eigen::SparseMatrix<double> lower) : lower_(std::move(lower)) {
    if (lower_.rows() != lower_.cols()) throw std::invalid_argument("SparseSymmetricMatrix: matrix is not square");
    lower_.makeCompressed();
}

Vector SparseSymmetricMatrix::operator*(const Vector& x) const {
    Vector y = lower_.selfadjointView<Eigen::Lower>() * x;
    return y;
}

Eigen::SparseMatrix<double> SparseSymmetricMatrix::full() const {
    Eigen::SparseMatrix<double> m = lower_.selfadjointView<Eigen::Lower>();
    return m;
}

Matrix SparseSymmetricMatrix::dense() const { return Matrix(full()); }

double SparseSymmetricMatrix::coeff(Index i, Index j) const {
    return i >= j ? lower_.coeff(i, j) : lower_.coeff(j, i);
}

Mesh build_unit_square_mesh(int nx, int ny) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("build_unit_square_mesh: nx and ny must be at least 2");
    Mesh mesh;
    mesh.nx = nx;
    mesh.ny = ny;
    const Index nodes_x = nx + 1;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            mesh.coords.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});
            mesh.on_boundary.push_back(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Index n0 = i + j * nodes_x;
            mesh.elements.push_back({n0, n0 + 1, n0 + 1 + nodes_x, n0 + nodes_x});
        }
    }
    return mesh;
}

Eigen::Matrix<double, 8, 8> element_stiffness_q1(const ElasticMaterial& material, double hx, double hy) {
    if (!(hx > 0.0) || !(hy > 0.0)) throw std::invalid_argument("element_stiffness_q1: element size must be positive");
    if (!(material.lame_mu > 0.0) || material.lame_lambda < 0.0)
        throw std::invalid_argument("element_stiffness_q1: require mu > 0 and lambda >= 0");

    // N_i = phi_i(x) psi_i(y); sx, sy are the signs of phi_i', psi_i'.
    constexpr std::array<int, 4> sx{-1, 1, 1, -1};
    constexpr std::array<int, 4> sy{-1, -1, 1, 1};
    const double lam = material.lame_lambda;
    const double mu = material.lame_mu;

    Eigen::Matrix<double, 8, 8> k;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double int_psi = (sy[i] == sy[j]) ? hy / 3.0 : hy / 6.0;
            const double int_phi = (sx[i] == sx[j]) ? hx / 3.0 : hx / 6.0;
            const double dxdx = sx[i] * sx[j] / hx * int_psi;
            const double dydy = sy[i] * sy[j] / hy * int_phi;
            const double dxdy = sx[i] * sy[j] / 4.0;  // int dN_i/dx dN_j/dy
            const double dydx = sy[i] * sx[j] / 4.0;  // int dN_i/dy dN_j/dx
            k(2 * i, 2 * j) = (lam + 2.0 * mu) * dxdx + mu * dydy;
            k(2 * i + 1, 2 * j + 1) = (lam + 2.0 * mu) * dydy + mu * dxdx;
            k(2 * i, 2 * j + 1) = lam * dxdy + mu * dydx;
            k(2 * i + 1, 2 * j) = lam * dydx + mu * dxdy;
        }
    }
    return k;
}

SparseSymmetricMatrix assemble_stiffness(const Mesh& mesh, const ElasticMaterial& material,
                                         bool reverse_element_order) {
    const auto ke = element_stiffness_q1(material, mesh.hx(), mesh.hy());
    const Index n = 2 * mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * 36);
    const Index ne = mesh.num_elements();
    for (Index step = 0; step < ne; ++step) {
        const Index e = reverse_element_order ? ne - 1 - step : step;
        const auto& nodes = mesh.elements[static_cast<std::size_t>(e)];
        for (int a = 0; a < 8; ++a) {
            const Index ga = 2 * nodes[static_cast<std::size_t>(a / 2)] + a % 2;
            for (int b = 0; b < 8; ++b) {
                const Index gb = 2 * nodes[static_cast<std::size_t>(b / 2)] + b % 2;
                if (ga >= gb) triplets.emplace_back(ga, gb, ke(a, b));
            }
        }
    }
    Eigen::SparseMatrix<double> lower(n, n);
    lower.setFromTriplets(triplets.begin(), triplets.end());
    return SparseSymmetricMatrix(std::move(lower));
}

FreeDofSystem apply_dirichlet(const SparseSymmetricMatrix& matrix, const Mesh& mesh) {
    const Index n = matrix.rows();
    if (n != 2 * mesh.num_nodes()) throw std::invalid_argument("apply_dirichlet: matrix does not match mesh");
    FreeDofSystem sys;
    sys.full_to_free.assign(static_cast<std::size_t>(n), -1);
    for (Index node = 0; node < mesh.num_nodes(); ++node) {
        if (mesh.on_boundary[static_cast<std::size_t>(node)]) continue;
        for (int c = 0; c < 2; ++c) {
            sys.full_to_free[static_cast<std::size_t>(2 * node + c)] = static_cast<Index>(sys.free_to_full.size());
            sys.free_to_full.push_back(2 * node + c);
        }
    }
    if (sys.free_to_full.empty()) throw std::invalid_argument("apply_dirichlet: every dof is constrained");

    std::vector<Eigen::Triplet<double>> triplets;
    const auto& lower = matrix.lower();
    for (Index col = 0; col < lower.outerSize(); ++col) {
        const Index fc = sys.full_to_free[static_cast<std::size_t>(col)];
        if (fc < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(lower, col); it; ++it) {
            const Index fr = sys.full_to_free[static_cast<std::size_t>(it.row())];
            if (fr >= 0) triplets.emplace_back(fr, fc, it.value());
        }
    }
    const auto nf = static_cast<Index>(sys.free_to_full.size());
    Eigen::SparseMatrix<double> reduced(nf, nf);
    reduced.setFromTriplets(triplets.begin(), triplets.end());
    sys.matrix = SparseSymmetricMatrix(std::move(reduced));
    return sys;
}

Vector build_rhs(const Mesh& mesh, const BodyForce& body_force) {
    const BodyForce force = body_force ? body_force : [](double, double) { return std::array<double, 2>{1.0, 1.0}; };
    const double hx = mesh.hx();
    const double hy = mesh.hy();
    const double g = 1.0 / std::sqrt(3.0);
    constexpr std::array<double, 4> xi{-1, 1, 1, -1};
    constexpr std::array<double, 4> eta{-1, -1, 1, 1};

    Vector full = Vector::Zero(2 * mesh.num_nodes());
    for (const auto& nodes : mesh.elements) {
        const auto& origin = mesh.coords[static_cast<std::size_t>(nodes[0])];
        for (double gx : {-g, g}) {
            for (double gy : {-g, g}) {
                const double x = origin[0] + 0.5 * (1.0 + gx) * hx;
                const double y = origin[1] + 0.5 * (1.0 + gy) * hy;
                const auto f = force(x, y);
                const double weight = 0.25 * hx * hy;
                for (std::size_t a = 0; a < 4; ++a) {
                    const double shape = 0.25 * (1.0 + xi[a] * gx) * (1.0 + eta[a] * gy);
                    full(2 * nodes[a]) += weight * shape * f[0];
                    full(2 * nodes[a] + 1) += weight * shape * f[1];
                }
            }
        }
    }
    std::vector<double> free;
    for (Index node = 0; node < mesh.num_nodes(); ++node) {
        if (mesh.on_boundary[static_cast<std::size_t>(node)]) continue;
        free.push_back(full(2 * node));
        free.push_back(full(2 * node + 1));
    }
    return Eigen::Map<Vector>(free.data(), static_cast<Index>(free.size()));
}

void write_matrix_market(std::ostream& out, const SparseSymmetricMatrix& matrix) {
    const auto& lower = matrix.lower();
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << lower.rows() << ' ' << lower.cols() << ' ' << lower.nonZeros() << '\n';
    out << std::setprecision(17);
    for (Index col = 0; col < lower.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(lower, col); it; ++it)
            out << it.row() + 1 << ' ' << col + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(const std::string& path, const SparseSymmetricMatrix& matrix) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    write_matrix_market(out, matrix);
}

void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& matrix) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
    out << std::setprecision(17);
    for (Index col = 0; col < matrix.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, col); it; ++it)
            out << it.row() + 1 << ' ' << col + 1 << ' ' << it.value() << '\n';
}

}  // namespace ambddc
