#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace podgp;
using testutil::ScratchDir;

namespace {

ReducedSystem scalar_system(double c0, double g0, double p0, double t_end) {
    ReducedSystem sys;
    sys.c = Eigen::MatrixXd::Constant(1, 1, c0);
    sys.g = Eigen::MatrixXd::Constant(1, 1, g0);
    sys.p_times = Eigen::Vector2d(0.0, t_end);
    sys.p = Eigen::MatrixXd::Constant(2, 1, p0);
    return sys;
}

// coupled SPD test system with a shared eigenbasis trick avoided on
// purpose: generic symmetric C (SPD) and G (PD)
ReducedSystem coupled_system(Eigen::Index d, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd r(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) r(i, j) = dist(rng);
    ReducedSystem sys;
    sys.c = r * r.transpose() + 0.5 * static_cast<double>(d) * Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) r(i, j) = dist(rng);
    sys.g = r * r.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
    return sys;
}

// exact solution of C y' + G y = P(t) for piecewise-linear P, via the
// generalized eigendecomposition V^T C V = I, V^T G V = diag(lambda):
// per eigenchannel and per segment with P = alpha + beta (t - t_s),
//   y(t) = (y_s - y_p(t_s)) exp(-lambda (t - t_s)) + y_p(t)
//   y_p(t) = (alpha + beta (t - t_s)) / lambda - beta / lambda^2
Eigen::MatrixXd exact_linear_forcing(const ReducedSystem& sys, const Eigen::VectorXd& y0,
                                     const Eigen::VectorXd& eval_times) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.g, sys.c);
    REQUIRE(es.info() == Eigen::Success);
    const Eigen::VectorXd lam = es.eigenvalues();
    const Eigen::MatrixXd v = es.eigenvectors(); // V^T C V = I
    const Eigen::Index d = sys.d();

    // modal forcing samples: q(t_k) = V^T P(t_k)
    const Eigen::MatrixXd q = sys.p * v;

    Eigen::MatrixXd out(eval_times.size(), d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double l = lam(k);
        REQUIRE(l > 0.0);
        double y = (v.transpose() * sys.c * y0)(k); // modal initial state
        double t_cursor = sys.p_times(0);
        Eigen::Index seg = 0;
        for (Eigen::Index i = 0; i < eval_times.size(); ++i) {
            const double t_target = eval_times(i);
            while (true) {
                const double seg_end = sys.p_times(seg + 1);
                const double t_stop = std::min(t_target, seg_end);
                const double t_s = sys.p_times(seg);
                const double beta = (q(seg + 1, k) - q(seg, k)) / (seg_end - t_s);
                const double alpha = q(seg, k) + beta * (t_cursor - t_s);
                auto particular = [&](double tau) { return (alpha + beta * tau) / l - beta / (l * l); };
                const double tau = t_stop - t_cursor;
                y = (y - particular(0.0)) * std::exp(-l * tau) + particular(tau);
                t_cursor = t_stop;
                if (t_cursor >= t_target) break;
                ++seg;
            }
            out(i, k) = y;
        }
    }
    // back to physical coordinates: y_phys = V y_modal
    return out * v.transpose();
}

} // namespace

TEST_CASE("free decay matches the scalar exponential", "[ode]") {
    const double c0 = 2.0, g0 = 3.0;
    const ReducedSystem sys = scalar_system(c0, g0, 0.0, 1.0);
    const Eigen::VectorXd b0 = Eigen::VectorXd::Ones(1);
    const CoefficientTrajectory traj = rk4_integrate(sys, b0, 0.0, 1.0, 1e-3);
    REQUIRE(traj.times(0) == 0.0);
    REQUIRE(traj.b(0, 0) == 1.0);
    REQUIRE(traj.times(traj.n_out() - 1) == 1.0);
    const double exact = std::exp(-g0 / c0);
    REQUIRE(traj.b(traj.n_out() - 1, 0) == Catch::Approx(exact).epsilon(1e-10));
}

TEST_CASE("constant forcing relaxes to P/G", "[ode]") {
    const double c0 = 1.5, g0 = 4.0, p0 = 6.0;
    const ReducedSystem sys = scalar_system(c0, g0, p0, 2.0);
    const CoefficientTrajectory traj =
        rk4_integrate(sys, Eigen::VectorXd::Zero(1), 0.0, 2.0, 5e-4);
    const double t = 2.0;
    const double exact = (p0 / g0) * (1.0 - std::exp(-g0 * t / c0));
    REQUIRE(traj.b(traj.n_out() - 1, 0) == Catch::Approx(exact).epsilon(1e-10));

    // starting at the equilibrium P/G holds it for the whole run
    const Eigen::VectorXd star = Eigen::VectorXd::Constant(1, p0 / g0);
    const CoefficientTrajectory fixed = rk4_integrate(sys, star, 0.0, 2.0, 1e-3);
    REQUIRE((fixed.b.array() - star(0)).abs().maxCoeff() < 1e-12 * star(0));
}

TEST_CASE("coupled system matches the exact piecewise-linear-forcing solution", "[ode]") {
    ReducedSystem sys = coupled_system(4, 71);
    // sinusoid sampled onto the forcing grid; integrator sees the
    // piecewise-linear interpolant, and so does the oracle
    const Eigen::Index n_p = 41;
    sys.p_times = Eigen::VectorXd::LinSpaced(n_p, 0.0, 2.0);
    sys.p.resize(n_p, 4);
    for (Eigen::Index i = 0; i < n_p; ++i)
        for (Eigen::Index k = 0; k < 4; ++k)
            sys.p(i, k) = std::sin(1.7 * sys.p_times(i) + 0.3 * static_cast<double>(k)) +
                          0.2 * static_cast<double>(k);

    Eigen::VectorXd b0(4);
    b0 << 0.5, -0.25, 0.1, 0.0;
    // dt divides the sample spacing, so no step straddles a forcing kink
    const double dt = (2.0 / 40.0) / 16.0;
    const CoefficientTrajectory traj = rk4_integrate(sys, b0, 0.0, 2.0, dt);

    Eigen::VectorXd eval(2);
    eval << 1.0, 2.0;
    const Eigen::MatrixXd exact = exact_linear_forcing(sys, b0, eval);
    const auto row_at = [&](double t) -> Eigen::RowVectorXd {
        for (Eigen::Index i = 0; i < traj.n_out(); ++i)
            if (std::abs(traj.times(i) - t) < 1e-12) return traj.b.row(i);
        FAIL("time not found in trajectory");
        return {};
    };
    REQUIRE((row_at(1.0) - exact.row(0)).norm() < 1e-6 * exact.row(0).norm());
    REQUIRE((row_at(2.0) - exact.row(1)).norm() < 1e-6 * exact.row(1).norm());
}

TEST_CASE("halving the step divides the error by about sixteen", "[ode]") {
    ReducedSystem sys = coupled_system(3, 5);
    const Eigen::Index n_p = 21;
    sys.p_times = Eigen::VectorXd::LinSpaced(n_p, 0.0, 1.0);
    sys.p.resize(n_p, 3);
    for (Eigen::Index i = 0; i < n_p; ++i)
        for (Eigen::Index k = 0; k < 3; ++k)
            sys.p(i, k) = std::cos(2.1 * sys.p_times(i) + static_cast<double>(k));

    Eigen::VectorXd b0(3);
    b0 << 1.0, 0.0, -0.5;
    Eigen::VectorXd eval(1);
    eval << 1.0;
    const Eigen::RowVectorXd exact = exact_linear_forcing(sys, b0, eval).row(0);

    // base step divides the sample spacing; halving keeps that true
    double dt = (1.0 / 20.0) / 2.0;
    std::vector<double> errs;
    for (int level = 0; level < 4; ++level) {
        const CoefficientTrajectory traj = rk4_integrate(sys, b0, 0.0, 1.0, dt);
        errs.push_back((traj.b.row(traj.n_out() - 1) - exact).norm());
        dt *= 0.5;
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        const double ratio = errs[i] / errs[i + 1];
        INFO("refinement " << i << " ratio " << ratio);
        REQUIRE(ratio > 14.0);
        REQUIRE(ratio < 18.0);
    }
}

TEST_CASE("stability limit is 2.785 over the pencil's extreme eigenvalue", "[ode]") {
    const ReducedSystem scalar = scalar_system(2.0, 5.0, 0.0, 1.0);
    REQUIRE(stability_dt_limit(scalar) == Catch::Approx(2.785 * 2.0 / 5.0).epsilon(1e-14));

    ReducedSystem sys = coupled_system(4, 19);
    sys.p_times = Eigen::Vector2d(0.0, 1e6);
    sys.p = Eigen::MatrixXd::Zero(2, 4);
    const double limit = stability_dt_limit(sys);
    REQUIRE(limit > 0.0);

    // just below the limit: bounded; well above: diverges
    Eigen::VectorXd b0 = Eigen::VectorXd::Ones(4);
    const CoefficientTrajectory ok = rk4_integrate(sys, b0, 0.0, 400.0 * limit, 0.98 * limit);
    REQUIRE(ok.b.allFinite());
    REQUIRE(ok.b.row(ok.n_out() - 1).norm() < b0.norm());
    // growth |R(-1.4 * 2.785)| ~ 4.5 per step; 800 steps overflow a double
    REQUIRE_THROWS_WITH(rk4_integrate(sys, b0, 0.0, 1200.0 * limit, 1.4 * limit),
                        Catch::Matchers::ContainsSubstring("integration diverged"));
}

TEST_CASE("projection of a mode combination recovers its coefficients", "[ode]") {
    const TetMesh mesh = make_box_mesh(3, 3, 2, {0, 0, 0}, {1, 1, 0.5});
    const JacobianCache cache = compute_jacobians(mesh);
    const QuadRule rule = quad_rule(2);
    SnapshotSeries rise;
    rise.fields = testutil::smooth_fields(mesh, 8, 83);
    rise.times = Eigen::VectorXd::LinSpaced(8, 0.1, 0.8);
    rise.t_amb = 0.0;
    const CorrelationMatrix a = correlation_matrix(rise, mesh, cache, rule);
    const PODBasis basis = pod_modes(a, rise, mesh, cache, rule, 4);

    Eigen::VectorXd want(4);
    want << 0.7, -1.3, 0.2, 2.0;
    const Eigen::VectorXd field = basis.u.transpose() * want;
    const Eigen::VectorXd got = project_initial(basis, mesh, cache, rule, field);
    REQUIRE((got - want).norm() < 1e-8 * want.norm());

    REQUIRE_THROWS_AS(
        project_initial(basis, mesh, cache, rule, Eigen::VectorXd::Zero(mesh.num_dofs() + 2)),
        validation_error);
}

TEST_CASE("step grid lands on t1 and is reproducible", "[ode]") {
    const ReducedSystem sys = scalar_system(1.0, 1.0, 0.0, 10.0);
    const Eigen::VectorXd b0 = Eigen::VectorXd::Ones(1);
    // dt does not divide (t1 - t0); final step shortens
    const CoefficientTrajectory traj = rk4_integrate(sys, b0, 0.0, 1.0, 0.3);
    REQUIRE(traj.n_out() == 5);
    REQUIRE(traj.times(3) == Catch::Approx(0.9).epsilon(1e-15));
    REQUIRE(traj.times(4) == 1.0);

    const CoefficientTrajectory again = rk4_integrate(sys, b0, 0.0, 1.0, 0.3);
    REQUIRE(traj.b == again.b);
    REQUIRE(traj.times == again.times);
}

TEST_CASE("integration input checks", "[ode]") {
    const ReducedSystem sys = scalar_system(1.0, 1.0, 0.0, 1.0);
    const Eigen::VectorXd b0 = Eigen::VectorXd::Ones(1);
    REQUIRE_THROWS_AS(rk4_integrate(sys, Eigen::VectorXd::Ones(2), 0, 1, 0.1), validation_error);
    REQUIRE_THROWS_AS(rk4_integrate(sys, b0, 0, 1, 0.0), validation_error);
    REQUIRE_THROWS_AS(rk4_integrate(sys, b0, 1, 1, 0.1), validation_error);
    // forcing window too short for the requested span
    REQUIRE_THROWS_WITH(rk4_integrate(sys, b0, 0, 2, 0.1),
                        Catch::Matchers::ContainsSubstring("outside sampled range"));

    ReducedSystem bad = sys;
    bad.c(0, 0) = -1.0;
    REQUIRE_THROWS_AS(rk4_integrate(bad, b0, 0, 1, 0.1), numeric_error);
}

TEST_CASE("trajectory file round trip preserves every bit", "[ode]") {
    ScratchDir dir("traj");
    const ReducedSystem sys = scalar_system(1.0, 2.0, 3.0, 1.0);
    const CoefficientTrajectory traj =
        rk4_integrate(sys, Eigen::VectorXd::Zero(1), 0.0, 1.0, 0.05);
    const std::string path = dir.file("traj.podb");
    save_trajectory(traj, path);
    const CoefficientTrajectory r = load_trajectory(path);
    REQUIRE(r.times == traj.times);
    REQUIRE(r.b == traj.b);

    const std::string path2 = dir.file("traj2.podb");
    save_trajectory(r, path2);
    REQUIRE(testutil::same_file_bytes(path, path2));

    REQUIRE_THROWS_AS(load_trajectory(dir.file("absent.podb")), validation_error);
}
