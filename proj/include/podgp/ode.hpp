#pragma once

#include "podgp/binio.hpp"
#include "podgp/galerkin.hpp"
#include "podgp/timegrid.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <string>

// Time integration of C db/dt + G b = P(t) with classical fourth-order
// Runge-Kutta on a fixed step. C is factored once (LLT); P(t) is linearly
// interpolated between its samples.

namespace podgp {

struct CoefficientTrajectory {
    Eigen::VectorXd times; // output timestamps, strictly increasing
    Eigen::MatrixXd b;     // n_out x d coefficient rows

    Eigen::Index n_out() const { return times.size(); }
    Eigen::Index d() const { return b.cols(); }
};

/// Largest stable RK4 step for the homogeneous part: the real stability
/// interval is |dt * lambda| <= 2.785 with lambda the extreme eigenvalue
/// of the pencil (G, C).
inline double stability_dt_limit(const ReducedSystem& sys) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.g, sys.c);
    if (es.info() != Eigen::Success)
        throw numeric_error("generalized eigensolve failed on the reduced pencil");
    const double lam_max = es.eigenvalues().maxCoeff();
    if (lam_max <= 0.0) return std::numeric_limits<double>::infinity();
    return 2.785 / lam_max;
}

/// b(t0) minimizing the quadrature L2 distance to `field`: b = U W field
/// with W the diagonal quadrature weight operator (modes are orthonormal,
/// so no system solve is needed).
inline Eigen::VectorXd project_initial(const PODBasis& basis, const TetMesh& mesh,
                                       const JacobianCache& cache, const QuadRule& rule,
                                       const Eigen::VectorXd& field) {
    if (field.size() != basis.n_dof())
        throw validation_error("initial field DoF count does not match basis");
    const ShapeTable table = shape_table(rule);
    return l2_sampler(mesh, cache, rule, table).inner(basis.u.transpose(), field);
}

/// Integrate from t0 to t1 with step dt (final step shortened to land on
/// t1 exactly). Output rows are the accepted states at every step boundary,
/// including t0. Forcing outside [p_times.front(), p_times.back()] is a
/// validation error; non-finite states abort with a numeric error.
inline CoefficientTrajectory rk4_integrate(const ReducedSystem& sys, const Eigen::VectorXd& b0,
                                           double t0, double t1, double dt) {
    const Eigen::Index d = sys.d();
    if (b0.size() != d) throw validation_error("initial coefficient size does not match system");
    if (!(dt > 0.0)) throw validation_error("time step must be positive");
    if (!(t1 > t0)) throw validation_error("integration interval is empty");

    Eigen::LLT<Eigen::MatrixXd> llt(sys.c);
    if (llt.info() != Eigen::Success)
        throw numeric_error("capacity matrix is not positive definite");

    const auto forcing = [&](double t) -> Eigen::VectorXd {
        return interp_rows(sys.p_times, sys.p, t, "forcing");
    };
    const auto rhs = [&](double t, const Eigen::VectorXd& b) -> Eigen::VectorXd {
        return llt.solve(forcing(t) - sys.g * b);
    };

    const auto n_steps = static_cast<Eigen::Index>(std::ceil((t1 - t0) / dt - 1e-12));
    CoefficientTrajectory traj;
    traj.times.resize(n_steps + 1);
    traj.b.resize(n_steps + 1, d);
    traj.times(0) = t0;
    traj.b.row(0) = b0.transpose();

    Eigen::VectorXd b = b0;
    double t = t0;
    for (Eigen::Index step = 0; step < n_steps; ++step) {
        const double h = std::min(dt, t1 - t);
        const Eigen::VectorXd k1 = rhs(t, b);
        const Eigen::VectorXd k2 = rhs(t + 0.5 * h, b + 0.5 * h * k1);
        const Eigen::VectorXd k3 = rhs(t + 0.5 * h, b + 0.5 * h * k2);
        const Eigen::VectorXd k4 = rhs(t + h, b + h * k3);
        b += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = (step + 1 == n_steps) ? t1 : t0 + static_cast<double>(step + 1) * dt;
        if (!b.allFinite())
            throw numeric_error("integration diverged at t = " + std::to_string(t) +
                                "; reduce dt below the stability estimate");
        traj.times(step + 1) = t;
        traj.b.row(step + 1) = b.transpose();
    }
    return traj;
}

inline void save_trajectory(const CoefficientTrajectory& traj, const std::string& path) {
    BinWriter w(path);
    w.magic("PODB");
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(traj.n_out()));
    w.u64(static_cast<std::uint64_t>(traj.d()));
    w.f64_array(traj.times.data(), static_cast<std::size_t>(traj.times.size()));
    for (Eigen::Index i = 0; i < traj.n_out(); ++i) {
        const Eigen::VectorXd row = traj.b.row(i).transpose();
        w.f64_array(row.data(), static_cast<std::size_t>(row.size()));
    }
    w.close();
}

inline CoefficientTrajectory load_trajectory(const std::string& path) {
    BinReader r(path);
    r.expect_magic("PODB", "coefficient trajectory");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw validation_error(path + ": unsupported trajectory version " +
                               std::to_string(version));
    const auto n_out = static_cast<Eigen::Index>(r.u64());
    const auto d = static_cast<Eigen::Index>(r.u64());
    if (n_out < 1 || d < 1) throw validation_error(path + ": empty trajectory");
    CoefficientTrajectory traj;
    traj.times.resize(n_out);
    r.f64_array(traj.times.data(), static_cast<std::size_t>(n_out));
    traj.b.resize(n_out, d);
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n_out; ++i) {
        r.f64_array(row.data(), row.size());
        for (Eigen::Index j = 0; j < d; ++j) traj.b(i, j) = row[static_cast<std::size_t>(j)];
    }
    require_strictly_increasing(traj.times, "trajectory times");
    return traj;
}

} // namespace podgp
