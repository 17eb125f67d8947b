#pragma once

#include "podgp/galerkin.hpp"
#include "podgp/mesh.hpp"
#include "podgp/quadrature.hpp"
#include "podgp/snapshot.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <vector>

// Full-order reference solver. Exact closed-form P1 element matrices
// (constant-gradient tets) assembled sparsely, implicit Euler stepping with
// the system matrix factored once. Serves both as the snapshot generator
// and as the ground truth for accuracy checks.

namespace podgp {

struct ReferenceMatrices {
    Eigen::SparseMatrix<double> mass;      // M_ij = integral( rho c_s N_i N_j )
    Eigen::SparseMatrix<double> stiffness; // K_ij = integral( kappa grad N_i . grad N_j )
    Eigen::SparseMatrix<double> surface;   // S_ij = sum_robin integral_S( h N_i N_j )
    Eigen::VectorXd surface_load;          // L_i  = sum_robin integral_S( h t_ref N_i )
};

/// Exact P1 matrices: M_e = rho c_s det_J (1 + delta_ij)/120,
/// K_e = kappa V g g^T with g the constant shape gradients, and the Robin
/// surface mass h Area (1 + delta_ij)/12 with load h t_ref Area / 3.
inline ReferenceMatrices assemble_reference_matrices(const TetMesh& mesh,
                                                     const JacobianCache& cache,
                                                     const MaterialField& mat,
                                                     const BoundaryFacetSet& bfacets,
                                                     const BoundaryCondition& bc) {
    mat.validate(mesh);
    const ShapeTable table = shape_table(quad_rule(2));
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> tm, tk, ts;
    tm.reserve(static_cast<std::size_t>(mesh.num_cells()) * 16);
    tk.reserve(static_cast<std::size_t>(mesh.num_cells()) * 16);

    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        const Material& m = mat.at(mesh.material_tag(c));
        const double mass_scale = m.rho * m.c_s * cache.det_J(c) / 120.0;
        const Eigen::Matrix<double, 4, 3> grads = physical_gradients(c, cache, table);
        const Eigen::Matrix4d ke = m.kappa * cell_volume(cache, c) * grads * grads.transpose();
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                tm.emplace_back(mesh.dof(c, i), mesh.dof(c, j),
                                mass_scale * (i == j ? 2.0 : 1.0));
                tk.emplace_back(mesh.dof(c, i), mesh.dof(c, j), ke(i, j));
            }
        }
    }

    ReferenceMatrices ref;
    ref.surface_load = Eigen::VectorXd::Zero(mesh.num_dofs());
    for (const BoundaryFacet& f : bfacets.facets) {
        const SurfaceBC sbc = bc.at(f.tag);
        if (sbc.kind != SurfaceBC::Kind::robin || sbc.h <= 0.0) continue;
        const double mass_scale = sbc.h * f.area / 12.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j)
                ts.emplace_back(f.verts[i], f.verts[j], mass_scale * (i == j ? 2.0 : 1.0));
            ref.surface_load(f.verts[i]) += sbc.h * sbc.t_ref * f.area / 3.0;
        }
    }

    const Eigen::Index n = mesh.num_dofs();
    ref.mass.resize(n, n);
    ref.stiffness.resize(n, n);
    ref.surface.resize(n, n);
    ref.mass.setFromTriplets(tm.begin(), tm.end());
    ref.stiffness.setFromTriplets(tk.begin(), tk.end());
    ref.surface.setFromTriplets(ts.begin(), ts.end());
    return ref;
}

/// Volumetric load F_i(t) = integral( N_i P_d(r,t) ), evaluated with the
/// same quadrature rule used elsewhere so projected systems agree exactly.
inline Eigen::VectorXd dns_load_vector(const TetMesh& mesh, const JacobianCache& cache,
                                       const QuadRule& rule, const PowerMap& pmap, double t) {
    const ShapeTable table = shape_table(rule);
    const auto k = static_cast<Eigen::Index>(rule.size());
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.num_dofs());
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = cell_quad_points(mesh, c, table);
        for (Eigen::Index q = 0; q < k; ++q) {
            const double p = power_at(pmap, pts.row(q).transpose(), t);
            if (p == 0.0) continue;
            const double w = rule.weights[static_cast<std::size_t>(q)] * cache.det_J(c) * p;
            for (int j = 0; j < 4; ++j) f(mesh.dof(c, j)) += w * table.values(q, j);
        }
    }
    return f;
}

constexpr Eigen::Index kDnsMaxDofs = 200000;

/// Implicit Euler on M dT/dt + (K + S) T = F(t) + L, T(0) = t_amb:
///   (M + dt (K + S)) T_{n+1} = M T_n + dt (F(t_{n+1}) + L)
/// The returned series holds the n_steps states after the initial one
/// (t = dt .. n_steps*dt), absolute temperatures, t_amb recorded.
inline SnapshotSeries dns_simulate(const TetMesh& mesh, const JacobianCache& cache,
                                   const MaterialField& mat, const BoundaryCondition& bc,
                                   const PowerMap& pmap, double t_amb, double dt,
                                   Eigen::Index n_steps, const QuadRule& rule,
                                   Eigen::Index keep_every = 1) {
    if (mesh.num_dofs() > kDnsMaxDofs)
        throw validation_error("reference solver guard: " + std::to_string(mesh.num_dofs()) +
                               " DoFs exceeds the " + std::to_string(kDnsMaxDofs) + " limit");
    if (!(dt > 0.0)) throw validation_error("time step must be positive");
    if (n_steps < 1) throw validation_error("need at least one time step");
    if (keep_every < 1 || n_steps % keep_every != 0)
        throw validation_error("keep_every must divide n_steps");
    require_power_map_inside(pmap, mesh);

    const BoundaryFacetSet bfacets = find_boundary_facets(mesh);
    const ReferenceMatrices ref = assemble_reference_matrices(mesh, cache, mat, bfacets, bc);
    const Eigen::SparseMatrix<double> lhs = ref.mass + dt * (ref.stiffness + ref.surface);
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(lhs);
    if (solver.info() != Eigen::Success)
        throw numeric_error("implicit Euler system factorization failed");

    const Eigen::Index n_keep = n_steps / keep_every;
    SnapshotSeries out;
    out.t_amb = t_amb;
    out.times.resize(n_keep);
    out.fields.resize(n_keep, mesh.num_dofs());

    Eigen::VectorXd temp = Eigen::VectorXd::Constant(mesh.num_dofs(), t_amb);
    for (Eigen::Index step = 1; step <= n_steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        const Eigen::VectorXd load = dns_load_vector(mesh, cache, rule, pmap, t);
        temp = solver.solve(ref.mass * temp + dt * (load + ref.surface_load));
        if (!temp.allFinite()) throw numeric_error("reference solve produced non-finite state");
        if (step % keep_every == 0) {
            const Eigen::Index k = step / keep_every - 1;
            out.times(k) = t;
            out.fields.row(k) = temp.transpose();
        }
    }
    return out;
}

} // namespace podgp
