#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace podgp;
using testutil::ScratchDir;

namespace {

// synthetic basis whose modes are arbitrary nodal rows (not orthonormal;
// projection formulas must hold for any rows)
PODBasis rows_as_basis(const Eigen::MatrixXd& rows) {
    PODBasis b;
    b.d = rows.rows();
    b.u = rows;
    b.eigvals = Eigen::VectorXd::Ones(b.d);
    b.total_energy = static_cast<double>(b.d);
    return b;
}

// element mass matrix from the closed form rho*c_s*detJ*(1+delta_ij)/120,
// assembled without any quadrature machinery
Eigen::MatrixXd brute_mass(const TetMesh& mesh, const JacobianCache& cache,
                           const MaterialField& mat) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mesh.num_dofs(), mesh.num_dofs());
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        const double s = mat.rho_cs(mesh.material_tag(c)) * cache.det_J(c) / 120.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                m(mesh.dof(c, i), mesh.dof(c, j)) += s * (i == j ? 2.0 : 1.0);
    }
    return m;
}

// element stiffness via an independent route: P1 shape coefficients from a
// 4x4 solve against [1 x y z] at the cell corners
Eigen::MatrixXd brute_stiffness(const TetMesh& mesh, const JacobianCache& cache,
                                const MaterialField& mat) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(mesh.num_dofs(), mesh.num_dofs());
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        Eigen::Matrix4d vand;
        for (int i = 0; i < 4; ++i) {
            vand(i, 0) = 1.0;
            vand.row(i).tail<3>() = mesh.vertex(mesh.cells(c, i)).transpose();
        }
        // column j = coefficients (a, bx, by, bz) of N_j
        const Eigen::Matrix4d coeff = vand.inverse();
        const double kv = mat.at(mesh.material_tag(c)).kappa * cell_volume(cache, c);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                k(mesh.dof(c, i), mesh.dof(c, j)) +=
                    kv * coeff.col(i).tail<3>().dot(coeff.col(j).tail<3>());
    }
    return k;
}

// Robin surface mass from the exact identity integral(l_i l_j) = A(1+d_ij)/12
Eigen::MatrixXd brute_surface_mass(const TetMesh& mesh, const BoundaryFacetSet& bfacets,
                                   const BoundaryCondition& bc) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mesh.num_dofs(), mesh.num_dofs());
    for (const BoundaryFacet& f : bfacets.facets) {
        const SurfaceBC sbc = bc.at(f.tag);
        if (sbc.kind != SurfaceBC::Kind::robin || sbc.h <= 0.0) continue;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                m(f.verts[i], f.verts[j]) += sbc.h * f.area * (i == j ? 2.0 : 1.0) / 12.0;
    }
    return m;
}

MaterialField two_tag_material() {
    MaterialField mat;
    mat.regions[0] = {130.0, 2330.0, 712.0}; // silicon-like
    mat.regions[1] = {1.4, 2200.0, 745.0};   // oxide-like
    return mat;
}

PowerMap aligned_box_map(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                         const Eigen::VectorXd& times, const Eigen::RowVectorXd& trace) {
    PowerMap pm;
    pm.regions.push_back({lo, hi});
    pm.times = times;
    pm.traces = trace;
    return pm;
}

} // namespace

TEST_CASE("capacity matrix equals the exact mass projection U M U^T", "[galerkin]") {
    TetMesh mesh = make_box_mesh(3, 2, 2, {0, 0, 0}, {1.5, 1.0, 0.5});
    // split tags so both materials participate
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c)
        mesh.material_tag(c) = mesh.cell_centroid(c).z() < 0.25 ? 1 : 0;
    const JacobianCache cache = compute_jacobians(mesh);
    const MaterialField mat = two_tag_material();

    const Eigen::MatrixXd fields = testutil::smooth_fields(mesh, 5, 41);
    const PODBasis basis = rows_as_basis(fields);
    const Eigen::MatrixXd oracle = basis.u * brute_mass(mesh, cache, mat) * basis.u.transpose();

    for (int degree : {2, 3, 4}) { // degree-2 products need degree >= 2 exactness
        const Eigen::MatrixXd c = capacity_matrix(basis, mesh, cache, quad_rule(degree), mat);
        REQUIRE((c - oracle).norm() < 1e-12 * oracle.norm());
        REQUIRE((c - c.transpose()).norm() == 0.0);
    }
}

TEST_CASE("conductance matrix equals the exact stiffness projection", "[galerkin]") {
    TetMesh mesh = make_box_mesh(2, 3, 2, {0, 0, 0}, {1.0, 1.2, 0.8});
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c)
        mesh.material_tag(c) = mesh.cell_centroid(c).y() < 0.6 ? 0 : 1;
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const MaterialField mat = two_tag_material();
    const BoundaryCondition adiabatic;

    const PODBasis basis = rows_as_basis(testutil::smooth_fields(mesh, 4, 43));
    const Eigen::MatrixXd oracle =
        basis.u * brute_stiffness(mesh, cache, mat) * basis.u.transpose();
    const Eigen::MatrixXd g =
        conductance_matrix(basis, mesh, cache, quad_rule(2), mat, bfacets, adiabatic);
    REQUIRE((g - oracle).norm() < 1e-10 * oracle.norm());
}

TEST_CASE("single-tet stiffness reproduces the hand computation", "[galerkin]") {
    const TetMesh mesh = make_reference_tet();
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const MaterialField mat = testutil::unit_material();

    const PODBasis nodal = rows_as_basis(Eigen::MatrixXd::Identity(4, 4));
    const Eigen::MatrixXd g =
        conductance_matrix(nodal, mesh, cache, quad_rule(2), mat, bfacets, BoundaryCondition{});
    Eigen::Matrix4d expected;
    const double t = 1.0 / 6.0;
    expected << 3 * t, -t, -t, -t, -t, t, 0, 0, -t, 0, t, 0, -t, 0, 0, t;
    REQUIRE((g - expected).norm() < 1e-14);

    // constant field is in the stiffness null space
    REQUIRE((g * Eigen::Vector4d::Ones()).norm() < 1e-14);

    const Eigen::MatrixXd c =
        capacity_matrix(nodal, mesh, cache, quad_rule(2), mat);
    Eigen::Matrix4d mass;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) mass(i, j) = (i == j ? 2.0 : 1.0) / 120.0;
    REQUIRE((c - mass).norm() < 1e-15);
}

TEST_CASE("Robin term adds exactly the projected surface mass", "[galerkin]") {
    const TetMesh mesh = make_box_mesh(2, 2, 2, {0, 0, 0}, {1, 1, 1});
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const MaterialField mat = testutil::unit_material();

    BoundaryCondition bc;
    bc.set(Surface::zmax, {SurfaceBC::Kind::robin, 35.0, 300.0});
    bc.set(Surface::xmin, {SurfaceBC::Kind::robin, 10.0, 300.0});

    const PODBasis basis = rows_as_basis(testutil::smooth_fields(mesh, 4, 47));
    const Eigen::MatrixXd g_rob =
        conductance_matrix(basis, mesh, cache, quad_rule(2), mat, bfacets, bc);
    const Eigen::MatrixXd g_adi =
        conductance_matrix(basis, mesh, cache, quad_rule(2), mat, bfacets, BoundaryCondition{});
    const Eigen::MatrixXd oracle =
        basis.u * brute_surface_mass(mesh, bfacets, bc) * basis.u.transpose();
    REQUIRE((g_rob - g_adi - oracle).norm() < 1e-12 * oracle.norm());

    // h = 0 Robin behaves as adiabatic
    BoundaryCondition zero;
    zero.set(Surface::zmax, {SurfaceBC::Kind::robin, 0.0, 300.0});
    const Eigen::MatrixXd g_zero =
        conductance_matrix(basis, mesh, cache, quad_rule(2), mat, bfacets, zero);
    REQUIRE(g_zero == g_adi);
    REQUIRE_FALSE(zero.any_robin());
    REQUIRE_THROWS_AS(zero.set(Surface::zmin, {SurfaceBC::Kind::robin, -1.0, 300.0}),
                      validation_error);
}

TEST_CASE("definiteness: C is SPD, G is PSD, Robin makes G PD", "[galerkin]") {
    const TetMesh mesh = make_box_mesh(3, 3, 2, {0, 0, 0}, {1, 1, 0.5});
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const MaterialField mat = two_tag_material();
    const QuadRule rule = quad_rule(2);

    SnapshotSeries rise;
    rise.fields = testutil::smooth_fields(mesh, 8, 53);
    rise.times = Eigen::VectorXd::LinSpaced(8, 0.1, 0.8);
    rise.t_amb = 0.0;
    const CorrelationMatrix a = correlation_matrix(rise, mesh, cache, rule);
    const PODBasis basis = pod_modes(a, rise, mesh, cache, rule, 5);

    const Eigen::MatrixXd c = capacity_matrix(basis, mesh, cache, rule, mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(c);
    REQUIRE(ec.eigenvalues().minCoeff() > 0.0);

    const Eigen::MatrixXd g_adi =
        conductance_matrix(basis, mesh, cache, rule, mat, bfacets, BoundaryCondition{});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(g_adi);
    REQUIRE(eg.eigenvalues().minCoeff() > -1e-12 * eg.eigenvalues().maxCoeff());

    BoundaryCondition bc;
    bc.set(Surface::zmin, {SurfaceBC::Kind::robin, 50.0, 300.0});
    const Eigen::MatrixXd g_rob = conductance_matrix(basis, mesh, cache, rule, mat, bfacets, bc);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(g_rob);
    REQUIRE(er.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("forcing from a cell-aligned box has the closed form", "[galerkin]") {
    const TetMesh mesh = make_box_mesh(4, 4, 2, {0, 0, 0}, {1, 1, 0.5});
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);

    // box spans whole cells, so the quad-point indicator is exact
    const Eigen::Vector3d lo(0.25, 0.25, 0.0);
    const Eigen::Vector3d hi(0.75, 0.75, 0.25);
    Eigen::VectorXd times(3);
    times << 0.0, 1.0, 2.0;
    Eigen::RowVectorXd trace(3);
    trace << 2e5, 5e5, 1e5;
    const PowerMap pmap = aligned_box_map(lo, hi, times, trace);

    // constant mode: P(t) = trace(t) * box volume
    Eigen::MatrixXd rows = Eigen::MatrixXd::Ones(2, mesh.num_dofs());
    rows.row(1) = testutil::smooth_fields(mesh, 1, 59);
    const PODBasis basis = rows_as_basis(rows);

    const double box_volume = 0.5 * 0.5 * 0.25;
    Eigen::MatrixXd p_ref;
    for (int degree : {1, 2, 3, 4}) {
        const auto [p, p_times] = forcing_series(basis, mesh, cache, quad_rule(degree), pmap,
                                                 BoundaryCondition{}, bfacets, 300.0);
        REQUIRE(p_times == times);
        for (Eigen::Index t = 0; t < 3; ++t)
            REQUIRE(p(t, 0) == Catch::Approx(trace(t) * box_volume).epsilon(1e-13));
        if (p_ref.size() == 0)
            p_ref = p;
        else // aligned box: every degree integrates the same P1 integrand exactly
            REQUIRE((p - p_ref).cwiseAbs().maxCoeff() < 1e-13 * p_ref.cwiseAbs().maxCoeff());
    }

    // second region sums: duplicate the box, double the load
    PowerMap two = pmap;
    two.regions.push_back(two.regions[0]);
    two.traces.conservativeResize(2, Eigen::NoChange);
    two.traces.row(1) = trace;
    const auto [p2, p2_times] = forcing_series(basis, mesh, cache, quad_rule(2), two,
                                               BoundaryCondition{}, bfacets, 300.0);
    REQUIRE((p2 - 2.0 * p_ref).cwiseAbs().maxCoeff() < 1e-13 * p_ref.cwiseAbs().maxCoeff());
}

TEST_CASE("Robin forcing adds h (t_ref - T_amb) times the surface integral", "[galerkin]") {
    const TetMesh mesh = make_box_mesh(2, 2, 2, {0, 0, 0}, {2.0, 1.0, 1.0});
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);

    const PODBasis ones = rows_as_basis(Eigen::MatrixXd::Ones(1, mesh.num_dofs()));
    PowerMap pmap = aligned_box_map({0, 0, 0}, {2.0, 1.0, 1.0}, Eigen::VectorXd::Zero(1),
                                    Eigen::RowVectorXd::Zero(1));

    BoundaryCondition bc;
    const double h = 12.5, t_ref = 350.0, t_amb = 300.0;
    bc.set(Surface::zmax, {SurfaceBC::Kind::robin, h, t_ref});

    const auto [p, p_times] =
        forcing_series(ones, mesh, cache, quad_rule(2), pmap, bc, bfacets, t_amb);
    const double area_zmax = 2.0;
    REQUIRE(p(0, 0) == Catch::Approx(h * (t_ref - t_amb) * area_zmax).epsilon(1e-13));

    // t_ref equal to ambient kills the term (rise formulation)
    bc.set(Surface::zmax, {SurfaceBC::Kind::robin, h, t_amb});
    const auto [p0, p0_times] =
        forcing_series(ones, mesh, cache, quad_rule(2), pmap, bc, bfacets, t_amb);
    REQUIRE(p0(0, 0) == 0.0);
}

TEST_CASE("reduced system round trip preserves matrices and boundary data", "[galerkin]") {
    ScratchDir dir("sys");
    const TetMesh mesh = make_box_mesh(2, 2, 2, {0, 0, 0}, {1, 1, 1});
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const MaterialField mat = testutil::unit_material();

    BoundaryCondition bc;
    bc.set(Surface::zmin, {SurfaceBC::Kind::robin, 7.25, 312.5});
    bc.set(Surface::xmax, {SurfaceBC::Kind::adiabatic, 0.0, 0.0});

    Eigen::VectorXd times(2);
    times << 0.0, 1.5;
    Eigen::RowVectorXd trace(2);
    trace << 1e5, 3e5;
    const PowerMap pmap = aligned_box_map({0, 0, 0.5}, {1, 1, 1}, times, trace);

    const PODBasis basis = rows_as_basis(testutil::smooth_fields(mesh, 3, 61));
    const ReducedSystem sys =
        assemble_reduced_system(basis, mesh, cache, quad_rule(2), mat, bfacets, bc, pmap, 300.0);
    REQUIRE(sys.d() == 3);

    const std::string path = dir.file("sys.podr");
    save_reduced_system(sys, path);
    const ReducedSystem r = load_reduced_system(path);
    REQUIRE(r.c == sys.c);
    REQUIRE(r.g == sys.g);
    REQUIRE(r.p == sys.p);
    REQUIRE(r.p_times == sys.p_times);
    REQUIRE(r.bc.by_tag.size() == 2);
    REQUIRE(r.bc.at(Surface::zmin).kind == SurfaceBC::Kind::robin);
    REQUIRE(r.bc.at(Surface::zmin).h == 7.25);
    REQUIRE(r.bc.at(Surface::zmin).t_ref == 312.5);
    REQUIRE(r.bc.at(Surface::xmax).kind == SurfaceBC::Kind::adiabatic);

    const std::string path2 = dir.file("sys2.podr");
    save_reduced_system(r, path2);
    REQUIRE(testutil::same_file_bytes(path, path2));
}

TEST_CASE("assembly rejects mismatched inputs", "[galerkin]") {
    const TetMesh mesh = make_box_mesh(2, 2, 2, {0, 0, 0}, {1, 1, 1});
    const JacobianCache cache = compute_jacobians(mesh);
    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const MaterialField mat = testutil::unit_material();

    const PODBasis wrong = rows_as_basis(Eigen::MatrixXd::Ones(2, mesh.num_dofs() + 1));
    REQUIRE_THROWS_WITH(capacity_matrix(wrong, mesh, cache, quad_rule(2), mat),
                        Catch::Matchers::ContainsSubstring("does not match mesh"));

    // power box outside the mesh
    const PODBasis basis = rows_as_basis(Eigen::MatrixXd::Ones(1, mesh.num_dofs()));
    const PowerMap outside = aligned_box_map({0, 0, 0}, {2, 1, 1}, Eigen::VectorXd::Zero(1),
                                             Eigen::RowVectorXd::Ones(1));
    REQUIRE_THROWS_WITH(forcing_series(basis, mesh, cache, quad_rule(2), outside,
                                       BoundaryCondition{}, bfacets, 300.0),
                        Catch::Matchers::ContainsSubstring("outside the mesh bounding box"));

    // unknown material tag
    TetMesh tagged = mesh;
    tagged.material_tag(0) = 9;
    const JacobianCache tcache = compute_jacobians(tagged);
    REQUIRE_THROWS_AS(capacity_matrix(basis, tagged, tcache, quad_rule(2), mat),
                      validation_error);
}
