// Small problems shared by the test suites.

#ifndef AMBDDC_TESTS_FIXTURES_HPP
#define AMBDDC_TESTS_FIXTURES_HPP

#include "ambddc/adaptive.hpp"
#include "ambddc/bddc.hpp"
#include "ambddc/decomposition.hpp"
#include "ambddc/fem.hpp"

#include <memory>
#include <optional>

namespace fixture {

using namespace ambddc;

struct Level1 {
    Mesh mesh;
    LevelSystem system;
    SparseSymmetricMatrix matrix;
    std::shared_ptr<const LevelDecomposition> decomposition;
    std::optional<LevelContext> context;
};

inline Level1 level1(int n, int k, ConstraintKind kind = ConstraintKind::corners, int jag_amplitude = 0,
                     Index jag_s = 0, Index jag_t = 1) {
    Level1 f;
    f.mesh = build_unit_square_mesh(n, n);
    f.system = fine_level_system(f.mesh, ElasticMaterial{1.0, 2.0});
    f.matrix = assemble(f.system);
    Partition p = partition_regular_grid(f.mesh, k, k);
    if (jag_amplitude > 0) p = jag_interface_edge(p, jag_s, jag_t, jag_amplitude, 2);
    f.decomposition = std::make_shared<const LevelDecomposition>(decompose(f.system, p));
    f.context.emplace(f.decomposition, build_averaging(*f.decomposition), build_constraints(*f.decomposition, kind));
    return f;
}

}  // namespace fixture

#endif
