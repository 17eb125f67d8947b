#pragma once

#include "podgp/ode.hpp"
#include "podgp/pod.hpp"
#include "podgp/sampling.hpp"
#include "podgp/snapshot.hpp"
#include "podgp/timegrid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

// Full-field reconstruction from modal coefficients and the relative
// least-squares error
//   Err = sqrt( sum_i int_R e^2 dV / sum_i int_R (T_truth - T_amb)^2 dV )
// over a cell subdomain (whole mesh or a z-slab picked by cell centroid).

namespace podgp {

/// field at time i = sum_k B[i,k] eta_k + t_amb.
inline SnapshotSeries predict_thermal(const CoefficientTrajectory& traj, const PODBasis& basis,
                                      double t_amb) {
    if (traj.d() != basis.d)
        throw validation_error("trajectory width " + std::to_string(traj.d()) +
                               " does not match basis mode count " + std::to_string(basis.d));
    SnapshotSeries out;
    out.times = traj.times;
    out.fields = traj.b * basis.u;
    out.fields.array() += t_amb;
    out.t_amb = t_amb;
    return out;
}

struct Region {
    enum class Kind { all, zslab };
    Kind kind = Kind::all;
    double z0 = 0.0, z1 = 0.0; // zslab bounds, z0 < z1

    static Region whole() { return {}; }
    static Region zslab(double z0, double z1) {
        if (!(z0 < z1)) throw validation_error("z-slab region requires z0 < z1");
        return {Kind::zslab, z0, z1};
    }

    std::string describe() const {
        if (kind == Kind::all) return "all";
        return "zslab " + std::to_string(z0) + " " + std::to_string(z1);
    }
};

/// Cells whose centroid lies in the region. A slab that captures no cell
/// is a validation error rather than a silent empty sum.
inline std::vector<Eigen::Index> region_cells(const TetMesh& mesh, const Region& region) {
    std::vector<Eigen::Index> cells;
    cells.reserve(static_cast<std::size_t>(mesh.num_cells()));
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        if (region.kind == Region::Kind::zslab) {
            const double z = mesh.cell_centroid(c).z();
            if (z < region.z0 || z > region.z1) continue;
        }
        cells.push_back(c);
    }
    if (cells.empty())
        throw validation_error("region '" + region.describe() + "' selects no cells");
    return cells;
}

/// Relative LS error of pred against truth over the region. Predictions are
/// resampled to truth timestamps by linear interpolation; every truth
/// timestamp must lie inside the prediction's time range. The reference
/// energy uses truth.t_amb; truth identically ambient over the region is a
/// degenerate reference.
inline double ls_error(const SnapshotSeries& pred, const SnapshotSeries& truth,
                       const TetMesh& mesh, const JacobianCache& cache, const QuadRule& rule,
                       const Region& region = Region::whole()) {
    if (pred.n_dof() != mesh.num_dofs() || truth.n_dof() != mesh.num_dofs())
        throw validation_error("snapshot DoF count does not match mesh");
    const std::vector<Eigen::Index> cells = region_cells(mesh, region);
    const ShapeTable table = shape_table(rule);
    const L2Sampler s = l2_sampler(mesh, cache, rule, table, Eigen::VectorXd(), &cells);

    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < truth.n_t(); ++i) {
        const Eigen::VectorXd pred_i =
            interp_rows(pred.times, pred.fields, truth.times(i), "prediction resample");
        const Eigen::VectorXd truth_i = truth.fields.row(i).transpose();
        num += s.squared_norm(pred_i - truth_i);
        den += s.squared_norm((truth_i.array() - truth.t_amb).matrix());
    }
    if (den <= 0.0)
        throw numeric_error("reference series is ambient over region '" + region.describe() +
                            "'; relative error is undefined");
    return std::sqrt(num / den);
}

} // namespace podgp
