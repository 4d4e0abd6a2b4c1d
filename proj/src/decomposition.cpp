#include "ambddc/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ambddc {

namespace {

template <class T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

bool contains(const std::vector<Index>& sorted, Index value) {
    return std::binary_search(sorted.begin(), sorted.end(), value);
}

// Substructures touching each node, sorted.
std::vector<std::vector<Index>> node_substructures(const LevelSystem& system, const Partition& partition) {
    std::vector<std::vector<Index>> subs(system.nodes.size());
    for (std::size_t e = 0; e < system.elements.size(); ++e)
        for (Index node : system.elements[e].nodes)
            subs[static_cast<std::size_t>(node)].push_back(partition.owner[e]);
    for (auto& s : subs) sort_unique(s);
    return subs;
}

std::vector<std::vector<Index>> node_elements(const LevelSystem& system) {
    std::vector<std::vector<Index>> elems(system.nodes.size());
    for (std::size_t e = 0; e < system.elements.size(); ++e)
        for (Index node : system.elements[e].nodes) elems[static_cast<std::size_t>(node)].push_back(static_cast<Index>(e));
    return elems;
}

void fill_glob_dofs(Glob& glob, const LevelSystem& system) {
    glob.dofs.clear();
    for (Index node : glob.nodes) {
        const auto& d = system.nodes[static_cast<std::size_t>(node)].dofs;
        glob.dofs.insert(glob.dofs.end(), d.begin(), d.end());
    }
    std::sort(glob.dofs.begin(), glob.dofs.end());
}

// Corners first (by node), then edges (by pair); rebuilds node_glob and pairs.
void normalize(GlobSet& set, std::size_t num_nodes) {
    std::stable_sort(set.globs.begin(), set.globs.end(), [](const Glob& a, const Glob& b) {
        if (a.kind != b.kind) return a.kind == GlobKind::corner;
        if (a.kind == GlobKind::corner) return a.nodes.front() < b.nodes.front();
        return a.substructures < b.substructures;
    });
    set.node_glob.assign(num_nodes, -1);
    set.adjacent_pairs.clear();
    for (std::size_t g = 0; g < set.globs.size(); ++g) {
        for (Index node : set.globs[g].nodes) set.node_glob[static_cast<std::size_t>(node)] = static_cast<Index>(g);
        const auto& subs = set.globs[g].substructures;
        if (set.globs[g].kind == GlobKind::edge) set.adjacent_pairs.push_back({subs[0], subs[1]});
    }
}

double distance(const LevelNode& a, const LevelNode& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

LevelSystem fine_level_system(const Mesh& mesh, const ElasticMaterial& material) {
    LevelSystem sys;
    sys.level = 1;
    sys.grid_nx = mesh.nx;
    sys.grid_ny = mesh.ny;
    sys.element_size = mesh.hx();

    std::vector<Index> node_id(static_cast<std::size_t>(mesh.num_nodes()), -1);
    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        if (mesh.on_boundary[static_cast<std::size_t>(n)]) continue;
        const auto k = static_cast<Index>(sys.nodes.size());
        node_id[static_cast<std::size_t>(n)] = k;
        const auto& c = mesh.coords[static_cast<std::size_t>(n)];
        sys.nodes.push_back({c[0], c[1], {2 * k, 2 * k + 1}});
        sys.dof_node.insert(sys.dof_node.end(), {k, k});
        sys.dof_component.insert(sys.dof_component.end(), {0, 1});
    }
    sys.num_dofs = static_cast<Index>(sys.dof_node.size());

    const Matrix ke = element_stiffness_q1(material, mesh.hx(), mesh.hy());
    for (const auto& quad : mesh.elements) {
        LevelElement el;
        std::vector<Index> local;
        for (int a = 0; a < 4; ++a) {
            const Index k = node_id[static_cast<std::size_t>(quad[static_cast<std::size_t>(a)])];
            if (k < 0) continue;
            el.nodes.push_back(k);
            for (int c = 0; c < 2; ++c) {
                el.dofs.push_back(2 * k + c);
                local.push_back(2 * a + c);
            }
        }
        std::sort(el.nodes.begin(), el.nodes.end());
        const auto m = static_cast<Index>(local.size());
        el.stiffness.resize(m, m);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                el.stiffness(i, j) = ke(local[static_cast<std::size_t>(i)], local[static_cast<std::size_t>(j)]);
        sys.elements.push_back(std::move(el));
    }
    return sys;
}

SparseSymmetricMatrix assemble(const LevelSystem& system) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& el : system.elements) {
        const auto m = static_cast<Index>(el.dofs.size());
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j) {
                const Index gi = el.dofs[static_cast<std::size_t>(i)];
                const Index gj = el.dofs[static_cast<std::size_t>(j)];
                if (gi >= gj) triplets.emplace_back(gi, gj, el.stiffness(i, j));
            }
    }
    Eigen::SparseMatrix<double> lower(system.num_dofs, system.num_dofs);
    lower.setFromTriplets(triplets.begin(), triplets.end());
    return SparseSymmetricMatrix(std::move(lower));
}

std::vector<Index> Partition::elements_of(Index substructure) const {
    std::vector<Index> out;
    for (std::size_t e = 0; e < owner.size(); ++e)
        if (owner[e] == substructure) out.push_back(static_cast<Index>(e));
    return out;
}

Partition partition_regular_grid(int grid_nx, int grid_ny, int kx, int ky, double element_size, int level) {
    if (kx < 1 || ky < 1 || grid_nx % kx != 0 || grid_ny % ky != 0) {
        std::ostringstream os;
        os << "partition_regular_grid: " << kx << "x" << ky << " does not divide the " << grid_nx << "x" << grid_ny
           << " element grid";
        throw std::invalid_argument(os.str());
    }
    Partition p;
    p.level = level;
    p.grid_nx = grid_nx;
    p.grid_ny = grid_ny;
    p.kx = kx;
    p.ky = ky;
    p.size = element_size * (grid_nx / kx);
    const int w = grid_nx / kx;
    const int h = grid_ny / ky;
    p.owner.resize(static_cast<std::size_t>(grid_nx) * grid_ny);
    for (int j = 0; j < grid_ny; ++j)
        for (int i = 0; i < grid_nx; ++i)
            p.owner[static_cast<std::size_t>(i + j * grid_nx)] = (i / w) + static_cast<Index>(j / h) * kx;
    return p;
}

Partition partition_regular_grid(const Mesh& mesh, int kx, int ky) {
    return partition_regular_grid(mesh.nx, mesh.ny, kx, ky, mesh.hx(), 1);
}

bool is_edge_connected(const Partition& partition, Index substructure) {
    const auto members = partition.elements_of(substructure);
    if (members.empty()) return false;
    std::vector<char> seen(partition.owner.size(), 0);
    std::deque<Index> queue{members.front()};
    seen[static_cast<std::size_t>(members.front())] = 1;
    std::size_t reached = 0;
    while (!queue.empty()) {
        const Index e = queue.front();
        queue.pop_front();
        ++reached;
        const int i = static_cast<int>(e % partition.grid_nx);
        const int j = static_cast<int>(e / partition.grid_nx);
        const int di[] = {1, -1, 0, 0};
        const int dj[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int ni = i + di[k];
            const int nj = j + dj[k];
            if (ni < 0 || nj < 0 || ni >= partition.grid_nx || nj >= partition.grid_ny) continue;
            const auto ne = static_cast<std::size_t>(ni + nj * partition.grid_nx);
            if (seen[ne] || partition.owner[ne] != substructure) continue;
            seen[ne] = 1;
            queue.push_back(static_cast<Index>(ne));
        }
    }
    return reached == members.size();
}

Partition jag_interface_edge(const Partition& partition, Index s, Index t, int amplitude, int period) {
    if (amplitude < 0 || period < 1) throw std::invalid_argument("jag_interface_edge: invalid amplitude or period");
    if (amplitude == 0) return partition;
    if (s > t) std::swap(s, t);
    const int sx = static_cast<int>(s % partition.kx), sy = static_cast<int>(s / partition.kx);
    const int tx = static_cast<int>(t % partition.kx), ty = static_cast<int>(t / partition.kx);
    const bool vertical = (ty == sy && tx == sx + 1);    // s left of t
    const bool horizontal = (tx == sx && ty == sy + 1);  // s below t
    if (!vertical && !horizontal) throw std::invalid_argument("jag_interface_edge: substructures are not adjacent");

    const int w = partition.block_width();
    const int h = partition.block_height();
    const int across = vertical ? w : h;
    if (amplitude >= across) throw std::invalid_argument("jag_interface_edge: amplitude exceeds substructure width");

    const int length = vertical ? h : w;
    const int line = vertical ? tx * w : ty * h;  // first element layer of t
    const int start = vertical ? sy * h : sx * w;
    const bool low_end_interior = vertical ? sy > 0 : sx > 0;
    const bool high_end_interior = vertical ? sy < partition.ky - 1 : sx < partition.kx - 1;
    const int blocks = (length + period - 1) / period;

    Partition out = partition;
    for (int b = 0; b < blocks; ++b) {
        if ((b == 0 && low_end_interior) || (b == blocks - 1 && high_end_interior)) continue;
        const bool into_s = (b % 2 == 1);
        for (int a = b * period; a < std::min(length, (b + 1) * period); ++a) {
            for (int d = 0; d < amplitude; ++d) {
                const int layer = into_s ? line + d : line - 1 - d;
                const int i = vertical ? layer : start + a;
                const int j = vertical ? start + a : layer;
                auto& owner = out.owner[static_cast<std::size_t>(i + j * partition.grid_nx)];
                if (into_s && owner == t) owner = s;
                else if (!into_s && owner == s) owner = t;
            }
        }
    }
    if (!is_edge_connected(out, s) || !is_edge_connected(out, t))
        throw std::invalid_argument("jag_interface_edge: amplitude disconnects a substructure");
    return out;
}

Partition agglomerate(const Partition& partition, int kx, int ky) {
    return partition_regular_grid(partition.kx, partition.ky, kx, ky, partition.size, partition.level + 1);
}

std::vector<Index> composite_owner(const std::vector<Partition>& chain) {
    if (chain.empty()) return {};
    std::vector<Index> owner = chain.front().owner;
    for (std::size_t l = 1; l < chain.size(); ++l)
        for (auto& o : owner) o = chain[l].owner[static_cast<std::size_t>(o)];
    return owner;
}

Index Substructure::local_index(Index global_dof) const {
    const auto it = std::lower_bound(dofs.begin(), dofs.end(), global_dof);
    if (it == dofs.end() || *it != global_dof) return -1;
    return static_cast<Index>(it - dofs.begin());
}

std::vector<Substructure> build_substructures(const LevelSystem& system, const Partition& partition) {
    if (partition.owner.size() != system.elements.size())
        throw std::invalid_argument("build_substructures: partition does not match the level system");
    std::vector<Substructure> subs(static_cast<std::size_t>(partition.count()));
    for (std::size_t s = 0; s < subs.size(); ++s) subs[s].id = static_cast<Index>(s);
    for (std::size_t e = 0; e < system.elements.size(); ++e) {
        auto& sub = subs[static_cast<std::size_t>(partition.owner[e])];
        sub.elements.push_back(static_cast<Index>(e));
        const auto& el = system.elements[e];
        sub.dofs.insert(sub.dofs.end(), el.dofs.begin(), el.dofs.end());
        sub.nodes.insert(sub.nodes.end(), el.nodes.begin(), el.nodes.end());
    }
    const auto node_subs = node_substructures(system, partition);
    for (auto& sub : subs) {
        sort_unique(sub.dofs);
        sort_unique(sub.nodes);
        const Index n = sub.size();
        sub.stiffness = Matrix::Zero(n, n);
        for (Index e : sub.elements) {
            const auto& el = system.elements[static_cast<std::size_t>(e)];
            std::vector<Index> map;
            for (Index d : el.dofs) map.push_back(sub.local_index(d));
            for (std::size_t i = 0; i < map.size(); ++i)
                for (std::size_t j = 0; j < map.size(); ++j)
                    sub.stiffness(map[i], map[j]) += el.stiffness(static_cast<Index>(i), static_cast<Index>(j));
        }
        for (Index k = 0; k < n; ++k) {
            const Index node = system.dof_node[static_cast<std::size_t>(sub.dofs[static_cast<std::size_t>(k)])];
            if (node_subs[static_cast<std::size_t>(node)].size() >= 2) sub.interface.push_back(k);
            else sub.interior.push_back(k);
        }
    }
    return subs;
}

Index GlobSet::edge_of(SubstructurePair pair) const {
    for (std::size_t g = 0; g < globs.size(); ++g)
        if (globs[g].kind == GlobKind::edge && globs[g].substructures[0] == pair.s && globs[g].substructures[1] == pair.t)
            return static_cast<Index>(g);
    return -1;
}

std::vector<Index> GlobSet::shared_globs(SubstructurePair pair) const {
    std::vector<Index> out;
    for (std::size_t g = 0; g < globs.size(); ++g)
        if (contains(globs[g].substructures, pair.s) && contains(globs[g].substructures, pair.t))
            out.push_back(static_cast<Index>(g));
    return out;
}

Index GlobSet::interface_dof_count() const {
    Index n = 0;
    for (const auto& g : globs) n += static_cast<Index>(g.dofs.size());
    return n;
}

GlobSet classify_globs(const Partition& partition, const LevelSystem& system) {
    const auto node_subs = node_substructures(system, partition);
    GlobSet set;
    std::map<SubstructurePair, std::vector<Index>> edges;
    for (std::size_t n = 0; n < node_subs.size(); ++n) {
        const auto& subs = node_subs[n];
        if (subs.size() >= 3) {
            Glob g;
            g.kind = GlobKind::corner;
            g.nodes = {static_cast<Index>(n)};
            g.substructures = subs;
            set.globs.push_back(std::move(g));
        } else if (subs.size() == 2) {
            edges[{subs[0], subs[1]}].push_back(static_cast<Index>(n));
        }
    }

    const auto elems = node_elements(system);
    for (auto& [pair, nodes] : edges) {
        // Conforming partitions share one connected edge per pair.
        std::vector<char> seen(nodes.size(), 0);
        std::deque<std::size_t> queue{0};
        seen[0] = 1;
        std::size_t reached = 0;
        while (!queue.empty()) {
            const std::size_t k = queue.front();
            queue.pop_front();
            ++reached;
            for (Index e : elems[static_cast<std::size_t>(nodes[k])]) {
                for (Index other : system.elements[static_cast<std::size_t>(e)].nodes) {
                    const auto it = std::lower_bound(nodes.begin(), nodes.end(), other);
                    if (it == nodes.end() || *it != other) continue;
                    const auto idx = static_cast<std::size_t>(it - nodes.begin());
                    if (!seen[idx]) {
                        seen[idx] = 1;
                        queue.push_back(idx);
                    }
                }
            }
        }
        if (reached != nodes.size()) {
            std::ostringstream os;
            os << "classify_globs: non-conforming partition, interface of substructures " << pair.s << " and "
               << pair.t << " is disconnected";
            throw std::runtime_error(os.str());
        }
        Glob g;
        g.kind = GlobKind::edge;
        g.nodes = nodes;
        g.substructures = {pair.s, pair.t};
        set.globs.push_back(std::move(g));
    }
    for (auto& g : set.globs) fill_glob_dofs(g, system);
    normalize(set, system.nodes.size());
    return set;
}

CornerSelection select_initial_corners(const GlobSet& globs, const LevelSystem& system, bool promote) {
    CornerSelection out;
    out.globs = globs;
    if (!promote) return out;
    auto& set = out.globs;
    const auto pairs = globs.adjacent_pairs;
    for (const auto& pair : pairs) {
        std::vector<Index> corner_nodes;
        for (Index g : set.shared_globs(pair))
            if (set.globs[static_cast<std::size_t>(g)].kind == GlobKind::corner)
                corner_nodes.push_back(set.globs[static_cast<std::size_t>(g)].nodes.front());
        if (corner_nodes.size() >= 2) continue;
        const Index eg = set.edge_of(pair);
        if (eg < 0) continue;
        out.promoted_pairs.push_back(pair);
        auto& edge_nodes = set.globs[static_cast<std::size_t>(eg)].nodes;

        auto node_at = [&](Index n) -> const LevelNode& { return system.nodes[static_cast<std::size_t>(n)]; };
        std::vector<Index> promoted;
        if (corner_nodes.size() == 1) {
            Index best = edge_nodes.front();
            double best_d = -1.0;
            for (Index n : edge_nodes) {
                const double d = distance(node_at(n), node_at(corner_nodes.front()));
                if (d > best_d + 1e-14) {
                    best_d = d;
                    best = n;
                }
            }
            promoted.push_back(best);
        } else if (edge_nodes.size() == 1) {
            promoted.push_back(edge_nodes.front());
        } else {
            std::pair<Index, Index> best{edge_nodes[0], edge_nodes[1]};
            double best_d = -1.0;
            for (std::size_t a = 0; a < edge_nodes.size(); ++a)
                for (std::size_t b = a + 1; b < edge_nodes.size(); ++b) {
                    const double d = distance(node_at(edge_nodes[a]), node_at(edge_nodes[b]));
                    if (d > best_d + 1e-14) {
                        best_d = d;
                        best = {edge_nodes[a], edge_nodes[b]};
                    }
                }
            promoted = {best.first, best.second};
        }
        for (Index n : promoted) {
            edge_nodes.erase(std::find(edge_nodes.begin(), edge_nodes.end(), n));
            Glob c;
            c.kind = GlobKind::corner;
            c.nodes = {n};
            c.substructures = {pair.s, pair.t};
            c.promoted = true;
            fill_glob_dofs(c, system);
            set.globs.push_back(std::move(c));
        }
    }
    // Edges emptied by promotion disappear; their pairs stay adjacent through the corners.
    std::vector<SubstructurePair> before = globs.adjacent_pairs;
    for (auto& g : set.globs) fill_glob_dofs(g, system);
    set.globs.erase(std::remove_if(set.globs.begin(), set.globs.end(),
                                   [](const Glob& g) { return g.nodes.empty(); }),
                    set.globs.end());
    normalize(set, system.nodes.size());
    set.adjacent_pairs = before;
    return out;
}

LevelDecomposition decompose(LevelSystem system, Partition partition, bool promote_corners) {
    LevelDecomposition d;
    d.substructures = build_substructures(system, partition);
    auto selection = select_initial_corners(classify_globs(partition, system), system, promote_corners);
    d.globs = std::move(selection.globs);
    d.promoted_pairs = std::move(selection.promoted_pairs);
    d.system = std::move(system);
    d.partition = std::move(partition);
    return d;
}

}  // namespace ambddc
