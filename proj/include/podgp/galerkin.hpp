#pragma once

#include "podgp/binio.hpp"
#include "podgp/pod.hpp"
#include "podgp/sampling.hpp"
#include "podgp/snapshot.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

// Galerkin projection of the heat equation onto the POD basis, in the
// temperature-rise formulation:
//   C db/dt + G b = P(t)
//   C_ij = integral( rho c_s eta_i eta_j )
//   G_ij = integral( kappa grad eta_i . grad eta_j ) + sum_robin integral_S( h eta_i eta_j )
//   P_i(t) = integral( eta_i P_d(r,t) ) + sum_robin integral_S( h (t_ref - T_amb) eta_i )
// Adiabatic surfaces contribute nothing; Robin surfaces use the degree-2
// triangle rule. All assemblies symmetrize (X + X^T)/2.

namespace podgp {

struct SurfaceBC {
    enum class Kind { adiabatic, robin };
    Kind kind = Kind::adiabatic;
    double h = 0.0;     // W/(m^2 K), >= 0
    double t_ref = 0.0; // K
};

struct BoundaryCondition {
    std::map<int, SurfaceBC> by_tag; // key: Surface enum value; missing tags are adiabatic

    SurfaceBC at(Surface s) const {
        auto it = by_tag.find(static_cast<int>(s));
        return it == by_tag.end() ? SurfaceBC{} : it->second;
    }

    void set(Surface s, SurfaceBC bc) {
        if (bc.kind == SurfaceBC::Kind::robin && bc.h < 0.0)
            throw validation_error("Robin coefficient h must be >= 0");
        by_tag[static_cast<int>(s)] = bc;
    }

    bool any_robin() const {
        for (const auto& [tag, bc] : by_tag)
            if (bc.kind == SurfaceBC::Kind::robin && bc.h > 0.0) return true;
        return false;
    }
};

struct ReducedSystem {
    Eigen::MatrixXd c;       // d x d, SPD
    Eigen::MatrixXd g;       // d x d, symmetric
    Eigen::MatrixXd p;       // n_t x d forcing samples
    Eigen::VectorXd p_times; // forcing timestamps
    BoundaryCondition bc;

    Eigen::Index d() const { return c.rows(); }
};

namespace detail {

inline std::vector<Eigen::Index> robin_facets(const BoundaryFacetSet& bfacets,
                                              const BoundaryCondition& bc,
                                              Eigen::VectorXd* scale_h) {
    std::vector<Eigen::Index> ids;
    if (scale_h) scale_h->resize(static_cast<Eigen::Index>(bfacets.facets.size()));
    for (std::size_t i = 0; i < bfacets.facets.size(); ++i) {
        const SurfaceBC sbc = bc.at(bfacets.facets[i].tag);
        if (sbc.kind == SurfaceBC::Kind::robin && sbc.h > 0.0) {
            ids.push_back(static_cast<Eigen::Index>(i));
            if (scale_h) (*scale_h)(static_cast<Eigen::Index>(i)) = sbc.h;
        }
    }
    return ids;
}

} // namespace detail

/// C_ij = integral( rho c_s eta_i eta_j ), symmetrized.
inline Eigen::MatrixXd capacity_matrix(const PODBasis& basis, const TetMesh& mesh,
                                       const JacobianCache& cache, const QuadRule& rule,
                                       const MaterialField& mat) {
    if (basis.n_dof() != mesh.num_dofs())
        throw validation_error("basis DoF count does not match mesh");
    mat.validate(mesh);
    Eigen::VectorXd rho_cs(mesh.num_cells());
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c)
        rho_cs(c) = mat.rho_cs(mesh.material_tag(c));
    const ShapeTable table = shape_table(rule);
    const Eigen::MatrixXd c =
        l2_sampler(mesh, cache, rule, table, rho_cs).gram(basis.u.transpose());
    return 0.5 * (c + c.transpose()).eval();
}

/// G_ij = integral( kappa grad eta_i . grad eta_j ) plus the Robin surface
/// term; symmetrized.
inline Eigen::MatrixXd conductance_matrix(const PODBasis& basis, const TetMesh& mesh,
                                          const JacobianCache& cache, const QuadRule& rule,
                                          const MaterialField& mat,
                                          const BoundaryFacetSet& bfacets,
                                          const BoundaryCondition& bc) {
    if (basis.n_dof() != mesh.num_dofs())
        throw validation_error("basis DoF count does not match mesh");
    mat.validate(mesh);
    Eigen::VectorXd kappa(mesh.num_cells());
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c)
        kappa(c) = mat.at(mesh.material_tag(c)).kappa;

    const ShapeTable table = shape_table(rule);
    const SampleOperator grad = gradient_sampler(mesh, cache, table, kappa);
    const Eigen::MatrixXd wg = grad * basis.u.transpose();
    Eigen::MatrixXd g = wg.transpose() * wg;

    Eigen::VectorXd scale_h;
    const std::vector<Eigen::Index> robin = detail::robin_facets(bfacets, bc, &scale_h);
    if (!robin.empty()) {
        const SampleOperator surf = surface_sampler(mesh, bfacets, robin, scale_h);
        const Eigen::MatrixXd ws = surf * basis.u.transpose();
        g += ws.transpose() * ws;
    }
    return 0.5 * (g + g.transpose()).eval();
}

/// P_i(t_k) at the power map's timestamps. The box indicator is evaluated
/// pointwise at quadrature points; densities are uniform per region, so
/// each region contributes trace_r(t_k) * integral_over_box( eta_i ).
/// With t_ref = T_amb the Robin surface term vanishes (rise formulation).
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> forcing_series(
    const PODBasis& basis, const TetMesh& mesh, const JacobianCache& cache, const QuadRule& rule,
    const PowerMap& pmap, const BoundaryCondition& bc, const BoundaryFacetSet& bfacets,
    double t_amb) {
    if (basis.n_dof() != mesh.num_dofs())
        throw validation_error("basis DoF count does not match mesh");
    require_power_map_inside(pmap, mesh);
    const ShapeTable table = shape_table(rule);
    const auto k = static_cast<Eigen::Index>(rule.size());

    // nodal load per region: z_r[dof] = sum_q w_q det_J N_j(q) [x_q in box_r]
    Eigen::MatrixXd region_loads = Eigen::MatrixXd::Zero(mesh.num_dofs(), pmap.n_regions());
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = cell_quad_points(mesh, c, table);
        for (Eigen::Index q = 0; q < k; ++q) {
            const Eigen::Vector3d x = pts.row(q).transpose();
            const double w = rule.weights[static_cast<std::size_t>(q)] * cache.det_J(c);
            for (Eigen::Index r = 0; r < pmap.n_regions(); ++r) {
                if (!pmap.regions[static_cast<std::size_t>(r)].contains(x)) continue;
                for (int j = 0; j < 4; ++j)
                    region_loads(mesh.dof(c, j), r) += w * table.values(q, j);
            }
        }
    }
    const Eigen::MatrixXd modal_loads = basis.u * region_loads; // d x n_regions

    // constant Robin surface load, folded into every sample
    Eigen::VectorXd surface_load = Eigen::VectorXd::Zero(basis.d);
    Eigen::VectorXd scale_h;
    const std::vector<Eigen::Index> robin = detail::robin_facets(bfacets, bc, &scale_h);
    if (!robin.empty()) {
        const TriRule tri = tri_rule_degree2();
        Eigen::VectorXd nodal = Eigen::VectorXd::Zero(mesh.num_dofs());
        for (const Eigen::Index id : robin) {
            const BoundaryFacet& f = bfacets.facets[static_cast<std::size_t>(id)];
            const SurfaceBC sbc = bc.at(f.tag);
            const double coeff = sbc.h * (sbc.t_ref - t_amb) * f.area;
            for (int q = 0; q < 3; ++q)
                for (int j = 0; j < 3; ++j)
                    nodal(f.verts[j]) += coeff * tri.weights(q) * tri.bary(q, j);
        }
        surface_load = basis.u * nodal;
    }

    Eigen::MatrixXd p(pmap.n_times(), basis.d);
    for (Eigen::Index t = 0; t < pmap.n_times(); ++t)
        p.row(t) = (modal_loads * pmap.traces.col(t) + surface_load).transpose();
    return {p, pmap.times};
}

inline ReducedSystem assemble_reduced_system(const PODBasis& basis, const TetMesh& mesh,
                                             const JacobianCache& cache, const QuadRule& rule,
                                             const MaterialField& mat,
                                             const BoundaryFacetSet& bfacets,
                                             const BoundaryCondition& bc, const PowerMap& pmap,
                                             double t_amb) {
    ReducedSystem sys;
    sys.c = capacity_matrix(basis, mesh, cache, rule, mat);
    sys.g = conductance_matrix(basis, mesh, cache, rule, mat, bfacets, bc);
    std::tie(sys.p, sys.p_times) = forcing_series(basis, mesh, cache, rule, pmap, bc, bfacets, t_amb);
    sys.bc = bc;
    return sys;
}

inline void save_reduced_system(const ReducedSystem& sys, const std::string& path) {
    BinWriter w(path);
    w.magic("PODR");
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(sys.d()));
    w.u64(static_cast<std::uint64_t>(sys.p.rows()));
    auto write_dense = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const Eigen::VectorXd row = m.row(i).transpose();
            w.f64_array(row.data(), static_cast<std::size_t>(row.size()));
        }
    };
    write_dense(sys.c);
    write_dense(sys.g);
    w.f64_array(sys.p_times.data(), static_cast<std::size_t>(sys.p_times.size()));
    write_dense(sys.p);
    w.u32(static_cast<std::uint32_t>(sys.bc.by_tag.size()));
    for (const auto& [tag, sbc] : sys.bc.by_tag) {
        w.i32(tag);
        w.u32(sbc.kind == SurfaceBC::Kind::robin ? 1u : 0u);
        w.f64(sbc.h);
        w.f64(sbc.t_ref);
    }
    w.close();
}

inline ReducedSystem load_reduced_system(const std::string& path) {
    BinReader r(path);
    r.expect_magic("PODR", "reduced system");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw validation_error(path + ": unsupported reduced-system version " +
                               std::to_string(version));
    const auto d = static_cast<Eigen::Index>(r.u64());
    const auto n_t = static_cast<Eigen::Index>(r.u64());
    if (d < 1 || n_t < 1) throw validation_error(path + ": empty reduced system");
    ReducedSystem sys;
    auto read_dense = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        std::vector<double> row(static_cast<std::size_t>(cols));
        for (Eigen::Index i = 0; i < rows; ++i) {
            r.f64_array(row.data(), row.size());
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
        }
        return m;
    };
    sys.c = read_dense(d, d);
    sys.g = read_dense(d, d);
    sys.p_times.resize(n_t);
    r.f64_array(sys.p_times.data(), static_cast<std::size_t>(n_t));
    sys.p = read_dense(n_t, d);
    const std::uint32_t n_bc = r.u32();
    for (std::uint32_t i = 0; i < n_bc; ++i) {
        const int tag = r.i32();
        SurfaceBC sbc;
        sbc.kind = r.u32() == 1u ? SurfaceBC::Kind::robin : SurfaceBC::Kind::adiabatic;
        sbc.h = r.f64();
        sbc.t_ref = r.f64();
        sys.bc.by_tag[tag] = sbc;
    }
    return sys;
}

} // namespace podgp
