#pragma once

#include "podgp/mesh.hpp"
#include "podgp/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <vector>

// Sparse sampling operators that turn cell-wise quadrature into batched
// linear algebra. Quadrature points are split by weight sign (the degree-3
// and degree-4 rules carry one negative weight) so each half factors as a
// square root:
//   integral(u v) ~= (P u).(P v) - (N u).(N v)
// with row scales sqrt(|w_q| det_J_c). Gram matrices then assemble from
// one or two products with a fixed, cell-ordered summation.

namespace podgp {

using SampleOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Signed quadrature sampling pair; `neg` is empty for rules whose weights
/// are all non-negative (degrees 1 and 2).
struct L2Sampler {
    SampleOperator pos;
    SampleOperator neg;

    /// cols is n_dof x m; result is the m x m matrix of pairwise integrals.
    Eigen::MatrixXd gram(const Eigen::MatrixXd& cols) const {
        const Eigen::MatrixXd wp = pos * cols;
        Eigen::MatrixXd g = wp.transpose() * wp;
        if (neg.rows() > 0) {
            const Eigen::MatrixXd wn = neg * cols;
            g -= wn.transpose() * wn;
        }
        return g;
    }

    /// Vector of integral(col_i * f) for each column.
    Eigen::VectorXd inner(const Eigen::MatrixXd& cols, const Eigen::VectorXd& f) const {
        Eigen::VectorXd r = (pos * cols).transpose() * (pos * f);
        if (neg.rows() > 0) r -= (neg * cols).transpose() * (neg * f);
        return r;
    }

    /// integral(u^2); clamped at zero against signed-rule rounding.
    double squared_norm(const Eigen::VectorXd& u) const {
        double v = (pos * u).squaredNorm();
        if (neg.rows() > 0) v -= (neg * u).squaredNorm();
        return std::max(v, 0.0);
    }
};

/// Rows = quadrature samples (cell-major, point-minor), scaled by
/// sqrt(|w_q| * det_J_c * cell_scale_c). Pass `cells` to restrict to a cell
/// subset (used by region-limited error metrics).
inline L2Sampler l2_sampler(const TetMesh& mesh, const JacobianCache& cache,
                            const QuadRule& rule, const ShapeTable& table,
                            const Eigen::VectorXd& cell_scale = Eigen::VectorXd(),
                            const std::vector<Eigen::Index>* cells = nullptr) {
    std::vector<std::size_t> q_pos, q_neg;
    for (std::size_t q = 0; q < rule.size(); ++q)
        (rule.weights[q] >= 0.0 ? q_pos : q_neg).push_back(q);
    const Eigen::Index nc = cells ? static_cast<Eigen::Index>(cells->size()) : mesh.num_cells();

    L2Sampler s;
    auto fill = [&](SampleOperator& out, const std::vector<std::size_t>& qs) {
        const auto k = static_cast<Eigen::Index>(qs.size());
        out.resize(nc * k, mesh.num_dofs());
        if (k == 0) return;
        out.reserve(Eigen::VectorXi::Constant(static_cast<int>(nc * k), 4));
        for (Eigen::Index i = 0; i < nc; ++i) {
            const Eigen::Index c = cells ? (*cells)[static_cast<std::size_t>(i)] : i;
            const double scale = cell_scale.size() ? cell_scale(c) : 1.0;
            for (Eigen::Index a = 0; a < k; ++a) {
                const auto q = static_cast<Eigen::Index>(qs[static_cast<std::size_t>(a)]);
                const double w = std::sqrt(std::abs(rule.weights[static_cast<std::size_t>(q)]) *
                                           cache.det_J(c) * scale);
                for (int j = 0; j < 4; ++j)
                    out.insert(i * k + a, mesh.dof(c, j)) = w * table.values(q, j);
            }
        }
        out.makeCompressed();
    };
    fill(s.pos, q_pos);
    fill(s.neg, q_neg);
    return s;
}

/// Rows = 3 gradient components per cell, scaled by sqrt(kappa_c * V_c),
/// so integral(kappa grad u . grad v) ~= (D u) . (D v).
inline SampleOperator gradient_sampler(const TetMesh& mesh, const JacobianCache& cache,
                                       const ShapeTable& table,
                                       const Eigen::VectorXd& cell_scale = Eigen::VectorXd()) {
    const Eigen::Index nc = mesh.num_cells();
    SampleOperator d(nc * 3, mesh.num_dofs());
    d.reserve(Eigen::VectorXi::Constant(static_cast<int>(nc * 3), 4));
    for (Eigen::Index c = 0; c < nc; ++c) {
        const Eigen::Matrix<double, 4, 3> grads = physical_gradients(c, cache, table);
        const double scale = cell_scale.size() ? cell_scale(c) : 1.0;
        const double w = std::sqrt(cell_volume(cache, c) * scale);
        for (int a = 0; a < 3; ++a)
            for (int j = 0; j < 4; ++j) d.insert(c * 3 + a, mesh.dof(c, j)) = w * grads(j, a);
    }
    d.makeCompressed();
    return d;
}

/// Rows = 3 triangle-quadrature samples per listed facet, scaled by
/// sqrt(w_q * area_f * facet_scale_f).
inline SampleOperator surface_sampler(const TetMesh& mesh, const BoundaryFacetSet& bfacets,
                                      const std::vector<Eigen::Index>& facet_ids,
                                      const Eigen::VectorXd& facet_scale = Eigen::VectorXd()) {
    const TriRule tri = tri_rule_degree2();
    const auto nf = static_cast<Eigen::Index>(facet_ids.size());
    SampleOperator s(nf * 3, mesh.num_dofs());
    s.reserve(Eigen::VectorXi::Constant(static_cast<int>(nf * 3), 3));
    for (Eigen::Index i = 0; i < nf; ++i) {
        const BoundaryFacet& f = bfacets.facets[static_cast<std::size_t>(facet_ids[i])];
        const double scale = facet_scale.size() ? facet_scale(facet_ids[i]) : 1.0;
        for (int q = 0; q < 3; ++q) {
            const double w = std::sqrt(tri.weights(q) * f.area * scale);
            for (int j = 0; j < 3; ++j) s.insert(i * 3 + q, f.verts[j]) = w * tri.bary(q, j);
        }
    }
    s.makeCompressed();
    return s;
}

/// Physical coordinates of a cell's quadrature points, row per point.
inline Eigen::Matrix<double, Eigen::Dynamic, 3> cell_quad_points(const TetMesh& mesh,
                                                                 Eigen::Index cell,
                                                                 const ShapeTable& table) {
    Eigen::Matrix<double, 4, 3> corners;
    for (int j = 0; j < 4; ++j) corners.row(j) = mesh.vertices.row(mesh.cells(cell, j));
    return table.values * corners;
}

/// Gram matrix of nodal fields (rows of `rows_nodal`) in the quadrature
/// L2 inner product.
inline Eigen::MatrixXd quadrature_gram(const Eigen::MatrixXd& rows_nodal, const TetMesh& mesh,
                                       const JacobianCache& cache, const QuadRule& rule) {
    const ShapeTable table = shape_table(rule);
    const Eigen::MatrixXd g = l2_sampler(mesh, cache, rule, table).gram(rows_nodal.transpose());
    return 0.5 * (g + g.transpose());
}

} // namespace podgp
