#pragma once

#include "podgp/errors.hpp"
#include "podgp/mesh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

// Gaussian quadrature on the reference tetrahedron (vertices 0, e_x, e_y,
// e_z) for polynomial degrees 1..4, P1 shape tables, and the degree-2
// triangle rule used for boundary terms. Weights are stored in reference
// measure (they sum to 1/6); physical integrals scale by det_J per cell.
// The exact point sets, chosen so independent implementations reproduce
// results bit-for-bit, are documented in docs/formats.md.

namespace podgp {

struct QuadRule {
    int degree = 0;
    std::vector<Eigen::Vector3d> points; // reference coordinates (x,y,z)
    std::vector<double> weights;         // sum to 1/6

    std::size_t size() const { return points.size(); }
};

struct ShapeTable {
    // values(q, j): P1 basis j at quadrature point q (barycentric lambda_j)
    Eigen::MatrixX4d values;
    // constant reference-space gradients, row j = grad lambda_j
    Eigen::Matrix<double, 4, 3> ref_gradients;
};

/// Standard rules: degree 1 -> 1 point, 2 -> 4, 3 -> 5, 4 -> 11 (Keast).
/// Degrees outside 1..4 are an error.
inline QuadRule quad_rule(int degree) {
    QuadRule rule;
    rule.degree = degree;
    auto add = [&](double x, double y, double z, double w) {
        rule.points.emplace_back(x, y, z);
        rule.weights.push_back(w);
    };
    switch (degree) {
        case 1:
            add(0.25, 0.25, 0.25, 1.0 / 6.0);
            break;
        case 2: {
            const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
            const double b = (5.0 - std::sqrt(5.0)) / 20.0;
            add(b, b, b, 1.0 / 24.0);
            add(a, b, b, 1.0 / 24.0);
            add(b, a, b, 1.0 / 24.0);
            add(b, b, a, 1.0 / 24.0);
            break;
        }
        case 3: {
            add(0.25, 0.25, 0.25, -2.0 / 15.0);
            const double s = 1.0 / 6.0;
            add(s, s, s, 3.0 / 40.0);
            add(0.5, s, s, 3.0 / 40.0);
            add(s, 0.5, s, 3.0 / 40.0);
            add(s, s, 0.5, 3.0 / 40.0);
            break;
        }
        case 4: {
            add(0.25, 0.25, 0.25, -74.0 / 5625.0);
            const double g = 1.0 / 14.0;
            add(g, g, g, 343.0 / 45000.0);
            add(11.0 * g, g, g, 343.0 / 45000.0);
            add(g, 11.0 * g, g, 343.0 / 45000.0);
            add(g, g, 11.0 * g, 343.0 / 45000.0);
            const double a = (1.0 + std::sqrt(5.0 / 14.0)) / 4.0;
            const double b = (1.0 - std::sqrt(5.0 / 14.0)) / 4.0;
            const double w = 56.0 / 2250.0;
            // barycentric (a,a,b,b) and permutations; coordinates are
            // (lambda_1, lambda_2, lambda_3)
            add(a, b, b, w);
            add(b, a, b, w);
            add(b, b, a, w);
            add(a, a, b, w);
            add(a, b, a, w);
            add(b, a, a, w);
            break;
        }
        default:
            throw validation_error("unsupported quadrature degree " + std::to_string(degree) +
                                   " (supported: 1..4)");
    }
    return rule;
}

/// P1 values and reference gradients at the rule's points.
inline ShapeTable shape_table(const QuadRule& rule) {
    ShapeTable table;
    const auto n = static_cast<Eigen::Index>(rule.size());
    table.values.resize(n, 4);
    for (Eigen::Index q = 0; q < n; ++q) {
        const Eigen::Vector3d& p = rule.points[static_cast<std::size_t>(q)];
        table.values(q, 0) = 1.0 - p.x() - p.y() - p.z();
        table.values(q, 1) = p.x();
        table.values(q, 2) = p.y();
        table.values(q, 3) = p.z();
    }
    table.ref_gradients << -1, -1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    return table;
}

/// Nodal-to-quadrature-point interpolation on one cell.
inline Eigen::VectorXd interpolate_cell(const Eigen::Vector4d& nodal, const ShapeTable& table) {
    return table.values * nodal;
}

/// Physical-space P1 gradients for a cell; constant over the cell.
inline Eigen::Matrix<double, 4, 3> physical_gradients(Eigen::Index cell,
                                                      const JacobianCache& cache,
                                                      const ShapeTable& table) {
    return table.ref_gradients * cache.inv_J_T[static_cast<std::size_t>(cell)].transpose();
}

/// Degree-2 rule on the reference triangle. Barycentric points with
/// weights summing to 1; physical integrals scale by facet area.
struct TriRule {
    Eigen::Matrix3d bary;    // row q = barycentric coordinates of point q
    Eigen::Vector3d weights; // sum to 1
};

inline TriRule tri_rule_degree2() {
    TriRule rule;
    const double a = 2.0 / 3.0, b = 1.0 / 6.0;
    rule.bary << a, b, b, b, a, b, b, b, a;
    rule.weights.setConstant(1.0 / 3.0);
    return rule;
}

} // namespace podgp
