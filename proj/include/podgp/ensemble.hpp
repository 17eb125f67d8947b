#pragma once

#include "podgp/galerkin.hpp"
#include "podgp/ode.hpp"
#include "podgp/parallel.hpp"
#include "podgp/pod.hpp"
#include "podgp/snapshot.hpp"
#include "podgp/timegrid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

// Many heat-source blocks sharing a few trained models: each instance
// integrates the shared (C, G) with a forcing built from its own power
// trace, reconstructs its rise field on the model's truncated domain, and
// the rises superpose onto the chip mesh (linear heat equation, rise
// formulation with homogeneous Robin references).

namespace podgp {

/// Uniform-grid point location over tetrahedra. Bucket size is the mean
/// cell bounding box; a cell is registered in every bucket its box
/// overlaps, so a bucket's candidate list contains every cell containing
/// any point of that bucket. Candidates are scanned in ascending cell
/// order, which makes lookups independent of build parallelism. The
/// locator copies the per-cell geometry it needs, so it stays valid after
/// the source mesh moves.
class CellLocator {
  public:
    CellLocator() = default;

    CellLocator(const TetMesh& mesh, const JacobianCache& cache) {
        std::tie(lo_, hi_) = mesh.bounding_box();
        const Eigen::Vector3d extent = hi_ - lo_;
        tol_ = 1e-9 * extent.norm();

        const Eigen::Index nc = mesh.num_cells();
        v0_.resize(static_cast<std::size_t>(nc));
        to_ref_.resize(static_cast<std::size_t>(nc));
        slack_.resize(static_cast<std::size_t>(nc));
        std::vector<Eigen::Vector3d> clo(static_cast<std::size_t>(nc)),
            chi(static_cast<std::size_t>(nc));

        Eigen::Vector3d mean_box = Eigen::Vector3d::Zero();
        for (Eigen::Index c = 0; c < nc; ++c) {
            const auto i = static_cast<std::size_t>(c);
            v0_[i] = mesh.vertices.row(mesh.cells(c, 0)).transpose();
            to_ref_[i] = cache.inv_J_T[i].transpose();
            slack_[i] = tol_ / std::cbrt(cell_volume(cache, c));
            clo[i] = chi[i] = v0_[i];
            for (int j = 1; j < 4; ++j) {
                const Eigen::Vector3d v = mesh.vertices.row(mesh.cells(c, j)).transpose();
                clo[i] = clo[i].cwiseMin(v);
                chi[i] = chi[i].cwiseMax(v);
            }
            mean_box += chi[i] - clo[i];
        }
        mean_box /= static_cast<double>(nc);
        for (int a = 0; a < 3; ++a) {
            dims_[a] = mean_box(a) > 0.0
                           ? std::max<Eigen::Index>(
                                 1, static_cast<Eigen::Index>(extent(a) / mean_box(a)))
                           : 1;
            inv_bucket_[a] = extent(a) > 0.0 ? static_cast<double>(dims_[a]) / extent(a) : 0.0;
        }

        buckets_.resize(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]));
        for (Eigen::Index c = 0; c < nc; ++c) {
            const auto i = static_cast<std::size_t>(c);
            const Eigen::Vector3i b0 = bucket_of(clo[i]), b1 = bucket_of(chi[i]);
            for (Eigen::Index x = b0(0); x <= b1(0); ++x)
                for (Eigen::Index y = b0(1); y <= b1(1); ++y)
                    for (Eigen::Index z = b0(2); z <= b1(2); ++z)
                        buckets_[flat(x, y, z)].push_back(c);
        }
    }

    /// Containing cell (lowest index wins) and its barycentric weights;
    /// -1 if no cell contains the point.
    Eigen::Index locate(const Eigen::Vector3d& p, Eigen::Vector4d& bary) const {
        for (int a = 0; a < 3; ++a)
            if (p(a) < lo_(a) - tol_ || p(a) > hi_(a) + tol_) return -1;
        const Eigen::Vector3i b = bucket_of(p);
        for (const Eigen::Index c : buckets_[flat(b(0), b(1), b(2))])
            if (bary_inside(c, p, bary)) return c;
        return -1;
    }

    /// Full scan with the same acceptance test; locate() must agree.
    Eigen::Index locate_brute(const Eigen::Vector3d& p, Eigen::Vector4d& bary) const {
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(v0_.size()); ++c)
            if (bary_inside(c, p, bary)) return c;
        return -1;
    }

    double tolerance() const { return tol_; }

  private:
    Eigen::Vector3i bucket_of(const Eigen::Vector3d& p) const {
        Eigen::Vector3i b;
        for (int a = 0; a < 3; ++a) {
            const auto i = static_cast<Eigen::Index>((p(a) - lo_(a)) * inv_bucket_[a]);
            b(a) = static_cast<int>(std::clamp<Eigen::Index>(i, 0, dims_[a] - 1));
        }
        return b;
    }

    std::size_t flat(Eigen::Index x, Eigen::Index y, Eigen::Index z) const {
        return static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x);
    }

    bool bary_inside(Eigen::Index c, const Eigen::Vector3d& p, Eigen::Vector4d& bary) const {
        const auto i = static_cast<std::size_t>(c);
        const Eigen::Vector3d ref = to_ref_[i] * (p - v0_[i]); // reference coordinates
        bary << 1.0 - ref.sum(), ref(0), ref(1), ref(2);
        return bary.minCoeff() >= -slack_[i];
    }

    Eigen::Vector3d lo_, hi_;
    double tol_ = 0.0;
    Eigen::Index dims_[3] = {1, 1, 1};
    double inv_bucket_[3] = {0, 0, 0};
    std::vector<Eigen::Vector3d> v0_;      // cell corner 0
    std::vector<Eigen::Matrix3d> to_ref_;  // physical-to-reference map
    std::vector<double> slack_;            // per-cell acceptance slack
    std::vector<std::vector<Eigen::Index>> buckets_;
};

/// One trained model on its truncated domain (local coordinates).
struct HsbModel {
    PODBasis basis;
    ReducedSystem sys; // trained C, G, bc; the stored P is replaced per instance
    TetMesh mesh;
    JacobianCache cache;
    BoundaryFacetSet bfacets;
    CellLocator locator;
};

/// A placed copy of a model with its own power trace (trace in the model's
/// local coordinates; placement is a rigid translation into chip space).
struct HsbInstance {
    std::string model_id;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    PowerMap trace;
};

struct ChipAssembly {
    TetMesh chip_mesh;
    std::map<std::string, HsbModel> models;
    std::vector<HsbInstance> instances;
    double t_amb = 0.0;
    QuadRule rule = quad_rule(2);
};

inline void validate_assembly(const ChipAssembly& assembly) {
    if (assembly.instances.empty()) throw validation_error("assembly has no instances");
    const auto [chip_lo, chip_hi] = assembly.chip_mesh.bounding_box();
    const double tol = 1e-9 * (chip_hi - chip_lo).norm();
    for (std::size_t k = 0; k < assembly.instances.size(); ++k) {
        const HsbInstance& inst = assembly.instances[k];
        const auto it = assembly.models.find(inst.model_id);
        if (it == assembly.models.end())
            throw validation_error("instance " + std::to_string(k) +
                                   " references unknown model '" + inst.model_id + "'");
        const auto [lo, hi] = it->second.mesh.bounding_box();
        const Eigen::Vector3d plo = lo + inst.translation, phi = hi + inst.translation;
        if ((plo.array() < chip_lo.array() - tol).any() ||
            (phi.array() > chip_hi.array() + tol).any())
            throw validation_error("instance " + std::to_string(k) +
                                   " places its domain outside the chip bounding box");
    }
    // Superposition adds rise fields, which is only valid when every Robin
    // reference equals ambient (each model homogeneous in rise).
    for (const auto& [id, model] : assembly.models)
        for (const auto& [tag, sbc] : model.sys.bc.by_tag)
            if (sbc.kind == SurfaceBC::Kind::robin && sbc.h > 0.0 && sbc.t_ref != assembly.t_amb)
                throw validation_error("model '" + id + "' has Robin t_ref != ambient; " +
                                       "its rises do not superpose");
}

/// Integrate every instance over [t0, t1]: shared C and G, per-instance P
/// from its trace, b(t0) = 0. Instances run concurrently; trajectories are
/// indexed by instance order.
inline std::vector<CoefficientTrajectory> run_ensemble(const ChipAssembly& assembly, double t0,
                                                       double t1, double dt) {
    validate_assembly(assembly);
    const auto n = static_cast<Eigen::Index>(assembly.instances.size());
    std::vector<CoefficientTrajectory> trajs(static_cast<std::size_t>(n));
    parallel_for(n, [&](Eigen::Index k) {
        const HsbInstance& inst = assembly.instances[static_cast<std::size_t>(k)];
        const HsbModel& model = assembly.models.at(inst.model_id);
        try {
            ReducedSystem sys;
            sys.c = model.sys.c;
            sys.g = model.sys.g;
            sys.bc = model.sys.bc;
            std::tie(sys.p, sys.p_times) =
                forcing_series(model.basis, model.mesh, model.cache, assembly.rule, inst.trace,
                               model.sys.bc, model.bfacets, assembly.t_amb);
            trajs[static_cast<std::size_t>(k)] =
                rk4_integrate(sys, Eigen::VectorXd::Zero(sys.d()), t0, t1, dt);
        } catch (const validation_error& e) {
            throw validation_error("instance " + std::to_string(k) + ": " + e.what());
        } catch (const numeric_error& e) {
            throw numeric_error("instance " + std::to_string(k) + ": " + e.what());
        }
    });
    return trajs;
}

/// Superposed nodal rise field on the chip mesh at time t. Per chip
/// vertex, instances contribute in instance order: locate the vertex in
/// the instance's translated domain, interpolate its reconstructed rise
/// there, zero outside. A vertex strictly inside a translated bounding box
/// that no cell claims is a geometry error.
inline Eigen::VectorXd assemble_field(const ChipAssembly& assembly,
                                      const std::vector<CoefficientTrajectory>& trajs,
                                      double t) {
    if (trajs.size() != assembly.instances.size())
        throw validation_error("trajectory count does not match instance count");

    struct Placed {
        const HsbModel* model;
        Eigen::Vector3d translation;
        Eigen::VectorXd rise; // nodal rise on the model mesh at time t
        Eigen::Vector3d lo, hi;
    };
    std::vector<Placed> placed(assembly.instances.size());
    for (std::size_t k = 0; k < assembly.instances.size(); ++k) {
        const HsbInstance& inst = assembly.instances[k];
        const HsbModel& model = assembly.models.at(inst.model_id);
        const CoefficientTrajectory& traj = trajs[k];
        if (traj.d() != model.basis.d)
            throw validation_error("instance " + std::to_string(k) +
                                   ": trajectory width does not match model basis");
        const Eigen::RowVectorXd b =
            interp_rows(traj.times, traj.b, t, "ensemble assembly time").transpose();
        placed[k].model = &model;
        placed[k].translation = inst.translation;
        placed[k].rise = (b * model.basis.u).transpose();
        std::tie(placed[k].lo, placed[k].hi) = model.mesh.bounding_box();
        placed[k].lo += inst.translation;
        placed[k].hi += inst.translation;
    }

    Eigen::VectorXd field = Eigen::VectorXd::Zero(assembly.chip_mesh.num_dofs());
    parallel_for(assembly.chip_mesh.num_dofs(), [&](Eigen::Index v) {
        const Eigen::Vector3d x = assembly.chip_mesh.vertices.row(v).transpose();
        double sum = 0.0;
        for (std::size_t k = 0; k < placed.size(); ++k) {
            const Placed& pk = placed[k];
            const double tol = pk.model->locator.tolerance();
            if ((x.array() < pk.lo.array() - tol).any() ||
                (x.array() > pk.hi.array() + tol).any())
                continue;
            const Eigen::Vector3d local = x - pk.translation;
            Eigen::Vector4d bary;
            const Eigen::Index c = pk.model->locator.locate(local, bary);
            if (c < 0) {
                if ((x.array() > pk.lo.array() + tol).all() &&
                    (x.array() < pk.hi.array() - tol).all())
                    throw numeric_error("instance " + std::to_string(k) +
                                        ": no cell contains chip vertex " + std::to_string(v) +
                                        " inside its translated domain");
                continue; // boundary sliver outside the actual domain
            }
            double val = 0.0;
            for (int j = 0; j < 4; ++j) val += bary(j) * pk.rise(pk.model->mesh.dof(c, j));
            sum += val;
        }
        field(v) = sum;
    });
    return field;
}

} // namespace podgp
