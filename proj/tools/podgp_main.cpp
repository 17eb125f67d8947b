#include "podgp/podgp.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

// Batch front-end: train / infer / predict / error / dns / bench over a
// flat key/value config. Exit codes: 0 ok, 2 config, 3 input validation,
// 4 numerical failure.

namespace {

using namespace podgp;

// Rethrows module errors with the pipeline stage named, preserving the
// error class (and thus the exit code).
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const config_error& e) {
        throw config_error(std::string(name) + ": " + e.what());
    } catch (const validation_error& e) {
        throw validation_error(std::string(name) + ": " + e.what());
    } catch (const numeric_error& e) {
        throw numeric_error(std::string(name) + ": " + e.what());
    }
}

struct MeshBundle {
    TetMesh mesh;
    JacobianCache cache;
    BoundaryFacetSet bfacets;
};

MeshBundle load_mesh_bundle(const Config& cfg) {
    MeshBundle b;
    b.mesh = stage("load_mesh", [&] { return load_mesh(cfg.get_string("mesh")); });
    b.cache = compute_jacobians(b.mesh);
    b.bfacets = find_boundary_facets(b.mesh);
    return b;
}

QuadRule rule_from(const Config& cfg) {
    const long deg = cfg.get_int("quad_degree", 2);
    if (deg < 1 || deg > 4) throw config_error("quad_degree must be 1..4");
    return quad_rule(static_cast<int>(deg));
}

Region region_from(const Config& cfg) {
    const std::string spec = cfg.get_string("region", "all");
    std::istringstream in(spec);
    std::string kind;
    in >> kind;
    if (kind == "all") return Region::whole();
    if (kind == "zslab") {
        double z0 = 0, z1 = 0;
        if (!(in >> z0 >> z1)) throw config_error("region: expected 'zslab <z0> <z1>'");
        return Region::zslab(z0, z1);
    }
    throw config_error("region must be 'all' or 'zslab <z0> <z1>'");
}

double ambient_from(const Config& cfg, const SnapshotSeries& snaps) {
    if (!cfg.has("t_amb")) return snaps.t_amb;
    const double t_amb = cfg.get_double("t_amb");
    if (t_amb != snaps.t_amb)
        throw validation_error("config t_amb " + std::to_string(t_amb) +
                               " does not match snapshot ambient " +
                               std::to_string(snaps.t_amb));
    return t_amb;
}

void cmd_train(const Config& cfg) {
    const MeshBundle mb = load_mesh_bundle(cfg);
    const QuadRule rule = rule_from(cfg);
    SnapshotSeries snaps = stage("load_snapshots", [&] {
        return load_snapshots(cfg.get_string("snapshots"), mb.mesh);
    });
    const PowerMap pmap =
        stage("load_powermap", [&] { return load_power_map(cfg.get_string("powermap")); });
    const MaterialField mat = cfg.materials();
    const BoundaryCondition bc = cfg.boundary();
    const double t_amb = ambient_from(cfg, snaps);

    const SnapshotSeries rise = subtract_ambient(snaps);
    const CorrelationMatrix a =
        stage("calc_A", [&] { return correlation_matrix(rise, mb.mesh, mb.cache, rule); });
    const auto d = static_cast<Eigen::Index>(cfg.get_int("modes"));
    const PODBasis basis =
        stage("get_modes", [&] { return pod_modes(a, rise, mb.mesh, mb.cache, rule, d); });

    ReducedSystem sys;
    sys.c = stage("calc_C", [&] {
        return capacity_matrix(basis, mb.mesh, mb.cache, rule, mat);
    });
    sys.g = stage("calc_G", [&] {
        return conductance_matrix(basis, mb.mesh, mb.cache, rule, mat, mb.bfacets, bc);
    });
    std::tie(sys.p, sys.p_times) = stage("calc_P", [&] {
        return forcing_series(basis, mb.mesh, mb.cache, rule, pmap, bc, mb.bfacets, t_amb);
    });
    sys.bc = bc;

    save_basis(basis, cfg.get_string("basis_out"));
    save_reduced_system(sys, cfg.get_string("system_out"));

    std::cout << "modes: " << basis.d << "\n";
    for (Eigen::Index k = 0; k < basis.d; ++k)
        std::cout << "eigenvalue[" << k << "] = " << basis.eigvals(k) << "\n";
    std::cout << "energy_fraction: " << energy_fraction(basis) << "\n";
}

std::string indexed_path(const std::string& base, std::size_t k) {
    const auto dot = base.rfind('.');
    const auto slash = base.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return base + "." + std::to_string(k);
    return base.substr(0, dot) + "." + std::to_string(k) + base.substr(dot);
}

ChipAssembly assembly_from(const Config& cfg) {
    ChipAssembly assembly;
    assembly.chip_mesh = stage("load_mesh", [&] { return load_mesh(cfg.get_string("mesh")); });
    assembly.t_amb = cfg.get_double("t_amb");
    assembly.rule = rule_from(cfg);
    for (const std::string& id : cfg.family("model")) {
        std::istringstream v(cfg.raw("model." + id));
        std::string basis_path, system_path, mesh_path;
        if (!(v >> basis_path >> system_path >> mesh_path) || !v.eof())
            throw config_error("model." + id + ": expected '<basis> <system> <mesh>'");
        HsbModel model;
        model.basis = stage("load_basis", [&] { return load_basis(basis_path); });
        model.sys = stage("load_system", [&] { return load_reduced_system(system_path); });
        model.mesh = stage("load_mesh", [&] { return load_mesh(mesh_path); });
        if (model.basis.d != model.sys.d())
            throw validation_error("model." + id + ": basis and system mode counts differ");
        if (model.basis.n_dof() != model.mesh.num_dofs())
            throw validation_error("model." + id + ": basis DoF count does not match mesh");
        model.cache = compute_jacobians(model.mesh);
        model.bfacets = find_boundary_facets(model.mesh);
        model.locator = CellLocator(model.mesh, model.cache);
        assembly.models.emplace(id, std::move(model));
    }
    for (const std::string& k : cfg.family("instance")) {
        std::istringstream v(cfg.raw("instance." + k));
        HsbInstance inst;
        std::string trace_path;
        if (!(v >> inst.model_id >> inst.translation.x() >> inst.translation.y() >>
              inst.translation.z() >> trace_path) ||
            !v.eof())
            throw config_error("instance." + k +
                               ": expected '<model_id> <tx> <ty> <tz> <trace-file>'");
        inst.trace = stage("load_trace", [&] { return load_power_map(trace_path); });
        assembly.instances.push_back(std::move(inst));
    }
    return assembly;
}

void cmd_infer(const Config& cfg) {
    const double t0 = cfg.get_double("t0");
    const double t1 = cfg.get_double("t1");
    const double dt = cfg.get_double("dt");
    const std::string out = cfg.get_string("trajectory_out");

    if (!cfg.family("instance").empty()) {
        const ChipAssembly assembly = assembly_from(cfg);
        for (const auto& [id, model] : assembly.models)
            std::cout << "model " << id << " stability: dt <= " << stability_dt_limit(model.sys)
                      << "\n";
        const std::vector<CoefficientTrajectory> trajs =
            stage("infer", [&] { return run_ensemble(assembly, t0, t1, dt); });
        for (std::size_t k = 0; k < trajs.size(); ++k)
            save_trajectory(trajs[k], indexed_path(out, k));
        std::cout << "instances: " << trajs.size() << "\n";
        return;
    }

    const ReducedSystem sys =
        stage("load_system", [&] { return load_reduced_system(cfg.get_string("system")); });
    std::cout << "stability: dt <= " << stability_dt_limit(sys) << "\n";
    const CoefficientTrajectory traj = stage("infer", [&] {
        return rk4_integrate(sys, Eigen::VectorXd::Zero(sys.d()), t0, t1, dt);
    });
    save_trajectory(traj, out);
}

void cmd_predict(const Config& cfg) {
    const PODBasis basis =
        stage("load_basis", [&] { return load_basis(cfg.get_string("basis")); });
    const CoefficientTrajectory traj = stage("load_trajectory", [&] {
        return load_trajectory(cfg.get_string("trajectory"));
    });
    const double t_amb = cfg.get_double("t_amb");
    const SnapshotSeries pred =
        stage("predict", [&] { return predict_thermal(traj, basis, t_amb); });
    save_snapshots(pred, cfg.get_string("prediction_out"));
}

void cmd_error(const Config& cfg) {
    const MeshBundle mb = load_mesh_bundle(cfg);
    const QuadRule rule = rule_from(cfg);
    const Region region = region_from(cfg);
    const SnapshotSeries truth = stage("load_snapshots", [&] {
        return load_snapshots(cfg.get_string("snapshots"), mb.mesh);
    });

    std::vector<std::pair<long, std::string>> runs;
    for (const std::string& d : cfg.family("prediction")) {
        try {
            std::size_t pos = 0;
            const long mode_count = std::stol(d, &pos);
            if (pos != d.size()) throw std::invalid_argument(d);
            runs.emplace_back(mode_count, cfg.raw("prediction." + d));
        } catch (const std::exception&) {
            throw config_error("prediction." + d + ": mode count suffix must be an integer");
        }
    }
    if (runs.empty() && cfg.has("prediction"))
        runs.emplace_back(cfg.get_int("modes", 0), cfg.get_string("prediction"));
    if (runs.empty()) throw config_error("no prediction or prediction.<d> entries");
    std::sort(runs.begin(), runs.end());

    const std::vector<Eigen::Index> cells = region_cells(mb.mesh, region);
    std::vector<bool> in_region(static_cast<std::size_t>(mb.mesh.num_dofs()), false);
    for (const Eigen::Index c : cells)
        for (int j = 0; j < 4; ++j) in_region[static_cast<std::size_t>(mb.mesh.dof(c, j))] = true;

    std::ofstream out(cfg.get_string("report_out"));
    if (!out) throw validation_error("cannot open report file: " + cfg.get_string("report_out"));
    out << "mode_count,region,err,max_abs_err\n";
    for (const auto& [d, path] : runs) {
        const SnapshotSeries pred =
            stage("load_prediction", [&] { return load_snapshots(path, mb.mesh); });
        const double err = stage("ls_error", [&] {
            return ls_error(pred, truth, mb.mesh, mb.cache, rule, region);
        });
        double max_abs = 0.0;
        for (Eigen::Index i = 0; i < truth.n_t(); ++i) {
            const Eigen::VectorXd pred_i =
                interp_rows(pred.times, pred.fields, truth.times(i), "prediction resample");
            for (Eigen::Index v = 0; v < mb.mesh.num_dofs(); ++v)
                if (in_region[static_cast<std::size_t>(v)])
                    max_abs = std::max(max_abs, std::abs(pred_i(v) - truth.fields(i, v)));
        }
        out << d << "," << region.describe() << "," << err << "," << max_abs << "\n";
        std::cout << "d=" << d << " err=" << err << "\n";
    }
}

void cmd_dns(const Config& cfg) {
    const MeshBundle mb = load_mesh_bundle(cfg);
    const QuadRule rule = rule_from(cfg);
    const PowerMap pmap =
        stage("load_powermap", [&] { return load_power_map(cfg.get_string("powermap")); });
    const MaterialField mat = cfg.materials();
    const BoundaryCondition bc = cfg.boundary();
    const SnapshotSeries snaps = stage("dns", [&] {
        return dns_simulate(mb.mesh, mb.cache, mat, bc, pmap, cfg.get_double("t_amb"),
                            cfg.get_double("dns_dt"), cfg.get_int("dns_steps"), rule,
                            cfg.get_int("dns_keep_every", 1));
    });
    save_snapshots(snaps, cfg.get_string("dns_out"));
    std::cout << "snapshots: " << snaps.n_t() << " x " << snaps.n_dof() << "\n";
}

void cmd_bench(const Config& cfg) {
    const MeshBundle mb = load_mesh_bundle(cfg);
    const QuadRule rule = rule_from(cfg);
    SnapshotSeries snaps = stage("load_snapshots", [&] {
        return load_snapshots(cfg.get_string("snapshots"), mb.mesh);
    });
    const PowerMap pmap =
        stage("load_powermap", [&] { return load_power_map(cfg.get_string("powermap")); });
    const MaterialField mat = cfg.materials();
    const BoundaryCondition bc = cfg.boundary();
    const double t_amb = ambient_from(cfg, snaps);
    const long reps = cfg.get_int("bench_reps", 5);
    if (reps < 1) throw config_error("bench_reps must be >= 1");

    const SnapshotSeries rise = subtract_ambient(snaps);
    const auto d = static_cast<Eigen::Index>(cfg.get_int("modes"));
    const double t0 = cfg.get_double("t0");
    const double t1 = cfg.get_double("t1");
    const double dt = cfg.get_double("dt");

    CorrelationMatrix a;
    PODBasis basis;
    ReducedSystem sys;
    sys.bc = bc;

    const auto timed = [&](auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    const auto median_of = [&](auto&& fn) {
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(reps));
        for (long r = 0; r < reps; ++r) times.push_back(timed(fn));
        std::sort(times.begin(), times.end());
        return times[times.size() / 2];
    };

    std::vector<std::pair<std::string, double>> rows;
    rows.emplace_back("calc_A", median_of([&] {
        a = correlation_matrix(rise, mb.mesh, mb.cache, rule);
    }));
    basis = pod_modes(a, rise, mb.mesh, mb.cache, rule, d);
    rows.emplace_back("calc_C", median_of([&] {
        sys.c = capacity_matrix(basis, mb.mesh, mb.cache, rule, mat);
    }));
    rows.emplace_back("calc_G", median_of([&] {
        sys.g = conductance_matrix(basis, mb.mesh, mb.cache, rule, mat, mb.bfacets, bc);
    }));
    rows.emplace_back("calc_P", median_of([&] {
        std::tie(sys.p, sys.p_times) =
            forcing_series(basis, mb.mesh, mb.cache, rule, pmap, bc, mb.bfacets, t_amb);
    }));
    rows.emplace_back("infer", median_of([&] {
        rk4_integrate(sys, Eigen::VectorXd::Zero(sys.d()), t0, t1, dt);
    }));

    std::ofstream out(cfg.get_string("bench_out"));
    if (!out) throw validation_error("cannot open bench file: " + cfg.get_string("bench_out"));
    out << "stage,median_s,reps\n";
    for (const auto& [name, t] : rows) {
        out << name << "," << t << "," << reps << "\n";
        std::cout << name << ": " << t << " s\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced-order transient thermal simulation on tetrahedral meshes"};
    app.require_subcommand(1);

    std::string config_path;
    bool print_config = false;
    int threads = 1;
    app.add_option("--config", config_path, "Run configuration file")->required();
    app.add_flag("--print-config", print_config, "Parse, re-emit normalized config, and exit");
    app.add_option("--threads", threads, "Worker threads (0 = auto)")->check(CLI::NonNegativeNumber);

    auto* train = app.add_subcommand("train", "Build POD basis and reduced system");
    auto* infer = app.add_subcommand("infer", "Integrate reduced coefficients over time");
    auto* predict = app.add_subcommand("predict", "Reconstruct temperature fields");
    auto* error_cmd = app.add_subcommand("error", "Relative error report against a reference");
    auto* dns = app.add_subcommand("dns", "Full-order reference simulation");
    auto* bench = app.add_subcommand("bench", "Per-stage timing report");
    for (auto* sub : {train, infer, predict, error_cmd, dns, bench}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        podgp::set_num_threads(threads);
        const podgp::Config cfg = podgp::Config::parse_file(config_path);
        if (print_config) {
            cfg.print(std::cout);
            return 0;
        }
        if (train->parsed()) cmd_train(cfg);
        if (infer->parsed()) cmd_infer(cfg);
        if (predict->parsed()) cmd_predict(cfg);
        if (error_cmd->parsed()) cmd_error(cfg);
        if (dns->parsed()) cmd_dns(cfg);
        if (bench->parsed()) cmd_bench(cfg);
    } catch (const podgp::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const podgp::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const podgp::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
