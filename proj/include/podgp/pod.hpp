#pragma once

#include "podgp/binio.hpp"
#include "podgp/sampling.hpp"
#include "podgp/snapshot.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

// POD training by the method of snapshots: the N_t x N_t time correlation
// matrix, its dense symmetric eigendecomposition and the L2-orthonormal
// nodal modes built from the top eigenvectors.

namespace podgp {

/// Relative eigenvalue floor that defines usable snapshot rank.
inline constexpr double kRankEpsilon = 1e-12;

struct CorrelationMatrix {
    Eigen::MatrixXd a; // n_t x n_t, symmetric PSD
};

struct PODBasis {
    Eigen::Index d = 0;
    Eigen::MatrixXd u;       // d x n_dof nodal mode values
    Eigen::VectorXd eigvals; // top-d eigenvalues, descending
    double total_energy = 0; // sum of all n_t eigenvalues

    Eigen::Index n_dof() const { return u.cols(); }
};

/// A_ij = (1/N_t) integral( T_i T_j ), cell-wise quadrature on the rise
/// fields, symmetrized after assembly.
inline CorrelationMatrix correlation_matrix(const SnapshotSeries& rise, const TetMesh& mesh,
                                            const JacobianCache& cache, const QuadRule& rule) {
    if (rise.n_dof() != mesh.num_dofs())
        throw validation_error("snapshot DoF count does not match mesh");
    const ShapeTable table = shape_table(rule);
    const L2Sampler s = l2_sampler(mesh, cache, rule, table);
    CorrelationMatrix a;
    a.a = s.gram(rise.fields.transpose()) / static_cast<double>(rise.n_t());
    a.a = 0.5 * (a.a + a.a.transpose()).eval();
    return a;
}

inline Eigen::Index usable_rank(const Eigen::VectorXd& eigvals_desc) {
    if (eigvals_desc.size() == 0) return 0;
    const double floor = kRankEpsilon * std::max(eigvals_desc(0), 0.0);
    Eigen::Index r = 0;
    while (r < eigvals_desc.size() && eigvals_desc(r) > floor) ++r;
    return r;
}

/// Top-d modes via the method of snapshots:
///   u_k = (1 / sqrt(N_t lambda_k)) sum_j v_k[j] field_j
/// then renormalized to unit L2 norm under the given quadrature.
/// Sign convention: the entry of largest magnitude is positive (first
/// such entry on ties), making results platform-independent.
inline PODBasis pod_modes(const CorrelationMatrix& a, const SnapshotSeries& rise,
                          const TetMesh& mesh, const JacobianCache& cache, const QuadRule& rule,
                          Eigen::Index d) {
    const Eigen::Index n_t = a.a.rows();
    if (d < 1 || d > n_t)
        throw validation_error("requested mode count " + std::to_string(d) +
                               " outside 1..N_t (N_t = " + std::to_string(n_t) + ")");
    if (rise.n_t() != n_t) throw validation_error("correlation matrix does not match series");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.a);
    if (eig.info() != Eigen::Success) throw numeric_error("correlation eigensolve failed");

    // Eigen returns ascending order; flip to descending.
    Eigen::VectorXd lambda = eig.eigenvalues().reverse();
    Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();

    const Eigen::Index rank = usable_rank(lambda);
    if (d > rank)
        throw numeric_error("requested " + std::to_string(d) + " modes but only " +
                            std::to_string(rank) + " are above the rank floor (" +
                            std::to_string(kRankEpsilon) + " relative)");

    PODBasis basis;
    basis.d = d;
    basis.eigvals = lambda.head(d);
    basis.total_energy = lambda.sum();
    basis.u.resize(d, rise.n_dof());
    for (Eigen::Index k = 0; k < d; ++k) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(n_t) * lambda(k));
        basis.u.row(k) = scale * (vecs.col(k).transpose() * rise.fields);
    }

    // exact unit L2 norm under this module's quadrature
    const Eigen::MatrixXd gram = quadrature_gram(basis.u, mesh, cache, rule);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double norm = std::sqrt(gram(k, k));
        if (!(norm > 0.0)) throw numeric_error("mode " + std::to_string(k) + " has zero norm");
        basis.u.row(k) /= norm;
        Eigen::Index imax = 0;
        basis.u.row(k).cwiseAbs().maxCoeff(&imax);
        if (basis.u(k, imax) < 0.0) basis.u.row(k) = -basis.u.row(k);
    }
    return basis;
}

/// Captured fraction of total snapshot energy, in [0,1].
inline double energy_fraction(const PODBasis& basis) {
    if (!(basis.total_energy > 0.0))
        throw numeric_error("degenerate training data: total energy is zero");
    return basis.eigvals.sum() / basis.total_energy;
}

inline void save_basis(const PODBasis& basis, const std::string& path) {
    BinWriter w(path);
    w.magic("PODU");
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(basis.d));
    w.u64(static_cast<std::uint64_t>(basis.n_dof()));
    w.f64_array(basis.eigvals.data(), static_cast<std::size_t>(basis.d));
    w.f64(basis.total_energy);
    for (Eigen::Index k = 0; k < basis.d; ++k) {
        const Eigen::VectorXd row = basis.u.row(k).transpose();
        w.f64_array(row.data(), static_cast<std::size_t>(row.size()));
    }
    w.close();
}

inline PODBasis load_basis(const std::string& path) {
    BinReader r(path);
    r.expect_magic("PODU", "POD basis");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw validation_error(path + ": unsupported basis version " + std::to_string(version));
    PODBasis basis;
    basis.d = static_cast<Eigen::Index>(r.u64());
    const auto n_dof = static_cast<Eigen::Index>(r.u64());
    if (basis.d < 1 || n_dof < 1) throw validation_error(path + ": empty basis");
    basis.eigvals.resize(basis.d);
    r.f64_array(basis.eigvals.data(), static_cast<std::size_t>(basis.d));
    basis.total_energy = r.f64();
    basis.u.resize(basis.d, n_dof);
    std::vector<double> row(static_cast<std::size_t>(n_dof));
    for (Eigen::Index k = 0; k < basis.d; ++k) {
        r.f64_array(row.data(), row.size());
        for (Eigen::Index j = 0; j < n_dof; ++j) basis.u(k, j) = row[static_cast<std::size_t>(j)];
    }
    return basis;
}

} // namespace podgp
