#pragma once

#include "podgp/binio.hpp"
#include "podgp/mesh.hpp"
#include "podgp/timegrid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Snapshot series (nodal temperature fields over time) and floorplan
// power maps. Snapshots use the little-endian `PODS` container; power
// maps use a small ASCII format. Both are documented in docs/formats.md.

namespace podgp {

struct SnapshotSeries {
    Eigen::VectorXd times;  // strictly increasing, seconds
    Eigen::MatrixXd fields; // n_t x n_dof nodal values, kelvin
    double t_amb = 0.0;     // ambient reference, kelvin

    Eigen::Index n_t() const { return fields.rows(); }
    Eigen::Index n_dof() const { return fields.cols(); }
};

inline void validate_snapshots(const SnapshotSeries& s, const char* what) {
    if (s.n_t() < 2) throw validation_error(std::string(what) + ": need at least 2 snapshots");
    if (s.times.size() != s.n_t())
        throw validation_error(std::string(what) + ": timestamp count does not match field count");
    require_strictly_increasing(s.times, what);
    if (!s.fields.allFinite() || !std::isfinite(s.t_amb))
        throw validation_error(std::string(what) + ": non-finite temperature value");
}

inline void save_snapshots(const SnapshotSeries& s, const std::string& path) {
    validate_snapshots(s, "snapshot series");
    BinWriter w(path);
    w.magic("PODS");
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(s.n_t()));
    w.u64(static_cast<std::uint64_t>(s.n_dof()));
    w.f64(s.t_amb);
    w.f64_array(s.times.data(), static_cast<std::size_t>(s.times.size()));
    for (Eigen::Index i = 0; i < s.n_t(); ++i) {
        const Eigen::VectorXd row = s.fields.row(i).transpose();
        w.f64_array(row.data(), static_cast<std::size_t>(row.size()));
    }
    w.close();
}

/// Loads a `PODS` file; pass expected_dofs < 0 to skip the DoF check.
inline SnapshotSeries load_snapshots(const std::string& path, Eigen::Index expected_dofs = -1) {
    BinReader r(path);
    r.expect_magic("PODS", "snapshot");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw validation_error(path + ": unsupported snapshot version " + std::to_string(version));
    const auto n_t = static_cast<Eigen::Index>(r.u64());
    const auto n_dof = static_cast<Eigen::Index>(r.u64());
    if (expected_dofs >= 0 && n_dof != expected_dofs)
        throw validation_error(path + ": snapshot DoF count " + std::to_string(n_dof) +
                               " does not match mesh DoF count " + std::to_string(expected_dofs));
    SnapshotSeries s;
    s.t_amb = r.f64();
    s.times.resize(n_t);
    r.f64_array(s.times.data(), static_cast<std::size_t>(n_t));
    s.fields.resize(n_t, n_dof);
    std::vector<double> row(static_cast<std::size_t>(n_dof));
    for (Eigen::Index i = 0; i < n_t; ++i) {
        r.f64_array(row.data(), row.size());
        for (Eigen::Index j = 0; j < n_dof; ++j) s.fields(i, j) = row[static_cast<std::size_t>(j)];
    }
    validate_snapshots(s, path.c_str());
    return s;
}

inline SnapshotSeries load_snapshots(const std::string& path, const TetMesh& mesh) {
    return load_snapshots(path, mesh.num_dofs());
}

/// Temperature rise: fields minus the series' recorded ambient. The
/// ambient stays recorded so reconstruction can add it back.
inline SnapshotSeries subtract_ambient(const SnapshotSeries& s) {
    SnapshotSeries out = s;
    out.fields.array() -= s.t_amb;
    return out;
}

struct PowerBox {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;

    bool contains(const Eigen::Vector3d& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

/// Axis-aligned floorplan regions with per-region volumetric power
/// density traces; uniform density inside each box, zero outside.
struct PowerMap {
    std::vector<PowerBox> regions;
    Eigen::MatrixXd traces; // n_regions x n_times, W/m^3
    Eigen::VectorXd times;  // strictly increasing, seconds

    Eigen::Index n_regions() const { return static_cast<Eigen::Index>(regions.size()); }
    Eigen::Index n_times() const { return times.size(); }
};

inline void validate_power_map(const PowerMap& pm, const char* what) {
    require_strictly_increasing(pm.times, what);
    if (pm.traces.rows() != pm.n_regions() || pm.traces.cols() != pm.n_times())
        throw validation_error(std::string(what) + ": trace shape does not match regions/times");
    if ((pm.traces.array() < 0.0).any())
        throw validation_error(std::string(what) + ": negative power density");
    for (const PowerBox& b : pm.regions)
        if (!((b.hi - b.lo).array() > 0.0).all())
            throw validation_error(std::string(what) + ": region box must satisfy lo < hi");
}

/// Region boxes must lie within the mesh bounding box (slack 1e-9 x diagonal).
inline void require_power_map_inside(const PowerMap& pm, const TetMesh& mesh) {
    const auto [lo, hi] = mesh.bounding_box();
    const double tol = 1e-9 * (hi - lo).norm();
    for (std::size_t i = 0; i < pm.regions.size(); ++i) {
        const PowerBox& b = pm.regions[i];
        if ((b.lo.array() < lo.array() - tol).any() || (b.hi.array() > hi.array() + tol).any())
            throw validation_error("power region " + std::to_string(i) +
                                   " lies outside the mesh bounding box");
    }
}

/// Volumetric power density at a point and time: sum over containing
/// regions of the trace linearly interpolated at t.
inline double power_at(const PowerMap& pm, const Eigen::Vector3d& point, double t) {
    double total = 0.0;
    const auto [i, alpha] = segment_lookup(pm.times, t, "power map");
    for (Eigen::Index r = 0; r < pm.n_regions(); ++r) {
        if (!pm.regions[static_cast<std::size_t>(r)].contains(point)) continue;
        total += pm.n_times() == 1
                     ? pm.traces(r, 0)
                     : (1.0 - alpha) * pm.traces(r, i) + alpha * pm.traces(r, i + 1);
    }
    return total;
}

/// ASCII format:
///   powermap 1
///   <n_regions> <n_times>
///   t_0 ... t_{n-1}
///   per region: xmin ymin zmin xmax ymax zmax
///               q_0 ... q_{n-1}
inline PowerMap load_power_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open power map file: " + path);

    // token stream with '#' comment lines stripped
    std::stringstream tokens;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t i = line.find_first_not_of(" \t\r");
        if (i == std::string::npos || line[i] == '#') continue;
        tokens << line << '\n';
    }

    auto fail = [&](const std::string& msg) -> void { throw validation_error(path + ": " + msg); };
    std::string word;
    int version = 0;
    if (!(tokens >> word >> version) || word != "powermap" || version != 1)
        fail("expected header 'powermap 1'");

    Eigen::Index n_regions = 0, n_times = 0;
    if (!(tokens >> n_regions >> n_times) || n_regions < 1 || n_times < 1)
        fail("expected '<n_regions> <n_times>'");

    PowerMap pm;
    pm.times.resize(n_times);
    for (Eigen::Index i = 0; i < n_times; ++i)
        if (!(tokens >> pm.times(i))) fail("malformed timestamp list");

    pm.traces.resize(n_regions, n_times);
    for (Eigen::Index r = 0; r < n_regions; ++r) {
        PowerBox box;
        if (!(tokens >> box.lo.x() >> box.lo.y() >> box.lo.z() >> box.hi.x() >> box.hi.y() >>
              box.hi.z()))
            fail("malformed region box on region " + std::to_string(r));
        pm.regions.push_back(box);
        for (Eigen::Index i = 0; i < n_times; ++i)
            if (!(tokens >> pm.traces(r, i)))
                fail("malformed density list on region " + std::to_string(r));
    }
    validate_power_map(pm, path.c_str());
    return pm;
}

inline void save_power_map(const PowerMap& pm, const std::string& path) {
    validate_power_map(pm, "power map");
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open file for writing: " + path);
    out << "powermap 1\n";
    out << pm.n_regions() << ' ' << pm.n_times() << '\n';
    for (Eigen::Index i = 0; i < pm.n_times(); ++i)
        out << (i ? " " : "") << detail::fmt_double(pm.times(i));
    out << '\n';
    for (Eigen::Index r = 0; r < pm.n_regions(); ++r) {
        const PowerBox& b = pm.regions[static_cast<std::size_t>(r)];
        out << detail::fmt_double(b.lo.x()) << ' ' << detail::fmt_double(b.lo.y()) << ' '
            << detail::fmt_double(b.lo.z()) << ' ' << detail::fmt_double(b.hi.x()) << ' '
            << detail::fmt_double(b.hi.y()) << ' ' << detail::fmt_double(b.hi.z()) << '\n';
        for (Eigen::Index i = 0; i < pm.n_times(); ++i)
            out << (i ? " " : "") << detail::fmt_double(pm.traces(r, i));
        out << '\n';
    }
    out.close();
    if (!out) throw validation_error("write failed: " + path);
}

} // namespace podgp
