#pragma once

#include "podgp/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

// Tetrahedral mesh handling: the ASCII mesh format, per-cell affine-map
// Jacobians and boundary facet discovery. Elements are linear (P1), so
// degrees of freedom coincide with mesh vertices.

namespace podgp {

/// Axis-aligned classification of a boundary facet against the mesh
/// bounding box. `other` marks facets lying on no bounding-box plane.
enum class Surface : int {
    xmin = 0,
    xmax = 1,
    ymin = 2,
    ymax = 3,
    zmin = 4, // bottom
    zmax = 5, // top
    other = 6,
};

inline const char* surface_name(Surface s) {
    switch (s) {
        case Surface::xmin: return "xmin";
        case Surface::xmax: return "xmax";
        case Surface::ymin: return "ymin";
        case Surface::ymax: return "ymax";
        case Surface::zmin: return "zmin";
        case Surface::zmax: return "zmax";
        default: return "other";
    }
}

inline Surface surface_from_name(const std::string& name) {
    for (int i = 0; i <= 6; ++i) {
        if (name == surface_name(static_cast<Surface>(i))) return static_cast<Surface>(i);
    }
    throw validation_error("unknown surface name: " + name);
}

struct TetMesh {
    Eigen::Matrix<double, Eigen::Dynamic, 3> vertices; // meters
    Eigen::Matrix<int, Eigen::Dynamic, 4> cells;       // vertex indices
    Eigen::VectorXi material_tag;                      // per-cell region label

    Eigen::Index num_vertices() const { return vertices.rows(); }
    Eigen::Index num_cells() const { return cells.rows(); }
    Eigen::Index num_dofs() const { return vertices.rows(); }

    /// Global DoF of cell-local node k. P1: identity on vertex indices.
    int dof(Eigen::Index cell, int k) const { return cells(cell, k); }

    Eigen::Vector3d vertex(int v) const { return vertices.row(v).transpose(); }

    Eigen::Vector3d cell_centroid(Eigen::Index c) const {
        Eigen::Vector3d s = Eigen::Vector3d::Zero();
        for (int k = 0; k < 4; ++k) s += vertex(cells(c, k));
        return s / 4.0;
    }

    std::pair<Eigen::Vector3d, Eigen::Vector3d> bounding_box() const {
        return {vertices.colwise().minCoeff().transpose(),
                vertices.colwise().maxCoeff().transpose()};
    }
};

struct JacobianCache {
    Eigen::VectorXd det_J;               // per cell, > 0; cell volume = det_J/6
    std::vector<Eigen::Matrix3d> inv_J_T; // per cell, inverse-transpose of the affine map
};

struct BoundaryFacet {
    int cell;       // owning cell
    int local_face; // 0..3, face opposite that local vertex
    std::array<int, 3> verts;
    Eigen::Vector3d outward_normal; // unit
    double area;
    Surface tag;
};

struct BoundaryFacetSet {
    std::vector<BoundaryFacet> facets;
    double total_area = 0.0;
};

struct Material {
    double kappa; // W/(m K)
    double rho;   // kg/m^3
    double c_s;   // J/(kg K)
};

/// Per-region material table, keyed by cell material tag.
struct MaterialField {
    std::map<int, Material> regions;

    const Material& at(int tag) const {
        auto it = regions.find(tag);
        if (it == regions.end())
            throw validation_error("no material defined for region tag " + std::to_string(tag));
        return it->second;
    }

    /// Validates positivity for every tag referenced by the mesh.
    void validate(const TetMesh& mesh) const {
        for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
            const Material& m = at(mesh.material_tag(c));
            if (!(m.kappa > 0.0 && m.rho > 0.0 && m.c_s > 0.0))
                throw validation_error("non-positive material property for region tag " +
                                       std::to_string(mesh.material_tag(c)));
        }
    }

    double rho_cs(int tag) const {
        const Material& m = at(tag);
        return m.rho * m.c_s;
    }
};

namespace detail {

// Face k is opposite local vertex k.
inline constexpr int tet_face_vertices[4][3] = {
    {1, 2, 3},
    {0, 2, 3},
    {0, 1, 3},
    {0, 1, 2},
};

inline double tet_det(const TetMesh& mesh, Eigen::Index c) {
    const Eigen::Vector3d v0 = mesh.vertex(mesh.cells(c, 0));
    Eigen::Matrix3d J;
    for (int k = 0; k < 3; ++k) J.col(k) = mesh.vertex(mesh.cells(c, k + 1)) - v0;
    return J.determinant();
}

inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Checks index ranges, degenerate cells and orientation. Throws
/// validation_error naming the first offending cell.
inline void validate_mesh(const TetMesh& mesh) {
    const Eigen::Index nv = mesh.num_vertices();
    if (nv < 4) throw validation_error("mesh has fewer than 4 vertices");
    if (mesh.num_cells() < 1) throw validation_error("mesh has no cells");
    if (mesh.material_tag.size() != mesh.num_cells())
        throw validation_error("material tag count does not match cell count");

    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        for (int k = 0; k < 4; ++k) {
            const int v = mesh.cells(c, k);
            if (v < 0 || v >= nv)
                throw validation_error("cell " + std::to_string(c) + ": vertex index " +
                                       std::to_string(v) + " out of range (mesh has " +
                                       std::to_string(nv) + " vertices)");
        }
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if (mesh.cells(c, a) == mesh.cells(c, b))
                    throw validation_error("cell " + std::to_string(c) +
                                           ": degenerate (repeated vertex " +
                                           std::to_string(mesh.cells(c, a)) + ")");
        const double det = detail::tet_det(mesh, c);
        if (det == 0.0)
            throw validation_error("cell " + std::to_string(c) + ": degenerate (zero volume)");
        if (det < 0.0)
            throw validation_error("cell " + std::to_string(c) +
                                   ": inverted (negative volume); fix vertex order");
    }
}

/// Parses the ASCII tet-mesh format:
///   line 1:  tetmesh 1
///   line 2:  <n_vertices> <n_cells>
///   n_vertices lines:  x y z
///   n_cells lines:     v0 v1 v2 v3 tag
/// Lines starting with '#' are ignored.
inline TetMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open mesh file: " + path);

    std::size_t lineno = 0;
    auto next_line = [&](std::string& line) -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            std::size_t i = line.find_first_not_of(" \t\r");
            if (i == std::string::npos) continue;
            if (line[i] == '#') continue;
            return true;
        }
        return false;
    };
    auto fail = [&](const std::string& msg) -> void {
        throw validation_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };

    std::string line;
    if (!next_line(line)) fail("empty file");
    {
        std::istringstream ss(line);
        std::string word;
        int version = 0;
        if (!(ss >> word >> version) || word != "tetmesh")
            fail("expected header 'tetmesh 1'");
        if (version != 1) fail("unsupported tetmesh version " + std::to_string(version));
    }

    if (!next_line(line)) fail("missing vertex/cell counts");
    Eigen::Index nv = 0, nc = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nv >> nc) || nv < 0 || nc < 0) fail("expected '<n_vertices> <n_cells>'");
    }

    TetMesh mesh;
    mesh.vertices.resize(nv, 3);
    mesh.cells.resize(nc, 4);
    mesh.material_tag.resize(nc);

    for (Eigen::Index i = 0; i < nv; ++i) {
        if (!next_line(line)) fail("unexpected end of file in vertex list");
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z)) fail("malformed vertex line");
        mesh.vertices.row(i) << x, y, z;
    }
    for (Eigen::Index c = 0; c < nc; ++c) {
        if (!next_line(line)) fail("unexpected end of file in cell list");
        std::istringstream ss(line);
        long v0, v1, v2, v3, tag;
        if (!(ss >> v0 >> v1 >> v2 >> v3 >> tag)) fail("malformed cell line");
        mesh.cells.row(c) << static_cast<int>(v0), static_cast<int>(v1), static_cast<int>(v2),
            static_cast<int>(v3);
        mesh.material_tag(c) = static_cast<int>(tag);
    }

    validate_mesh(mesh);
    return mesh;
}

/// Writes the ASCII format with shortest round-trip decimal coordinates,
/// so load -> save -> load is bit-exact.
inline void save_mesh(const TetMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open file for writing: " + path);
    out << "tetmesh 1\n";
    out << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
        out << detail::fmt_double(mesh.vertices(i, 0)) << ' '
            << detail::fmt_double(mesh.vertices(i, 1)) << ' '
            << detail::fmt_double(mesh.vertices(i, 2)) << '\n';
    }
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        out << mesh.cells(c, 0) << ' ' << mesh.cells(c, 1) << ' ' << mesh.cells(c, 2) << ' '
            << mesh.cells(c, 3) << ' ' << mesh.material_tag(c) << '\n';
    }
    out.close();
    if (!out) throw validation_error("write failed: " + path);
}

/// Per-cell determinant and inverse-transpose of the affine reference map.
/// Throws numeric_error on a non-positive determinant.
inline JacobianCache compute_jacobians(const TetMesh& mesh) {
    JacobianCache cache;
    const Eigen::Index nc = mesh.num_cells();
    cache.det_J.resize(nc);
    cache.inv_J_T.resize(static_cast<std::size_t>(nc));
    for (Eigen::Index c = 0; c < nc; ++c) {
        const Eigen::Vector3d v0 = mesh.vertex(mesh.cells(c, 0));
        Eigen::Matrix3d J;
        for (int k = 0; k < 3; ++k) J.col(k) = mesh.vertex(mesh.cells(c, k + 1)) - v0;
        const double det = J.determinant();
        if (!(det > 0.0))
            throw numeric_error("cell " + std::to_string(c) +
                                ": non-positive Jacobian determinant " + std::to_string(det));
        cache.det_J(c) = det;
        cache.inv_J_T[static_cast<std::size_t>(c)] = J.inverse().transpose();
    }
    return cache;
}

inline double cell_volume(const JacobianCache& cache, Eigen::Index c) {
    return cache.det_J(c) / 6.0;
}

inline double mesh_volume(const JacobianCache& cache) { return cache.det_J.sum() / 6.0; }

/// Faces appearing in exactly one cell, with outward unit normals, areas
/// and an axis-aligned surface tag (tolerance 1e-9 x bounding-box diagonal).
/// Throws on faces shared by more than two cells.
inline BoundaryFacetSet find_boundary_facets(const TetMesh& mesh) {
    struct FaceRec {
        int count = 0;
        int cell = -1;
        int local = -1;
    };
    std::map<std::array<int, 3>, FaceRec> faces;
    for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
        for (int f = 0; f < 4; ++f) {
            std::array<int, 3> key = {mesh.cells(c, detail::tet_face_vertices[f][0]),
                                      mesh.cells(c, detail::tet_face_vertices[f][1]),
                                      mesh.cells(c, detail::tet_face_vertices[f][2])};
            std::sort(key.begin(), key.end());
            FaceRec& rec = faces[key];
            rec.count += 1;
            if (rec.count > 2)
                throw validation_error("non-manifold mesh: face (" + std::to_string(key[0]) +
                                       "," + std::to_string(key[1]) + "," +
                                       std::to_string(key[2]) + ") shared by more than 2 cells");
            rec.cell = static_cast<int>(c);
            rec.local = f;
        }
    }

    const auto [lo, hi] = mesh.bounding_box();
    const double tol = 1e-9 * (hi - lo).norm();

    BoundaryFacetSet set;
    // Deterministic facet order: (cell, local face).
    std::vector<std::pair<int, int>> boundary;
    for (const auto& [key, rec] : faces)
        if (rec.count == 1) boundary.emplace_back(rec.cell, rec.local);
    std::sort(boundary.begin(), boundary.end());

    for (auto [c, f] : boundary) {
        BoundaryFacet facet;
        facet.cell = c;
        facet.local_face = f;
        for (int k = 0; k < 3; ++k) facet.verts[k] = mesh.cells(c, detail::tet_face_vertices[f][k]);

        const Eigen::Vector3d a = mesh.vertex(facet.verts[0]);
        const Eigen::Vector3d b = mesh.vertex(facet.verts[1]);
        const Eigen::Vector3d d = mesh.vertex(facet.verts[2]);
        Eigen::Vector3d n = (b - a).cross(d - a);
        const double twice_area = n.norm();
        if (twice_area <= 0.0)
            throw validation_error("boundary face on cell " + std::to_string(c) +
                                   " has zero area");
        facet.area = 0.5 * twice_area;
        n /= twice_area;
        const Eigen::Vector3d face_centroid = (a + b + d) / 3.0;
        if (n.dot(face_centroid - mesh.cell_centroid(c)) < 0.0) n = -n;
        facet.outward_normal = n;

        facet.tag = Surface::other;
        auto on_plane = [&](int axis, double value) {
            return std::abs(mesh.vertices(facet.verts[0], axis) - value) <= tol &&
                   std::abs(mesh.vertices(facet.verts[1], axis) - value) <= tol &&
                   std::abs(mesh.vertices(facet.verts[2], axis) - value) <= tol;
        };
        if (on_plane(0, lo.x())) facet.tag = Surface::xmin;
        else if (on_plane(0, hi.x())) facet.tag = Surface::xmax;
        else if (on_plane(1, lo.y())) facet.tag = Surface::ymin;
        else if (on_plane(1, hi.y())) facet.tag = Surface::ymax;
        else if (on_plane(2, lo.z())) facet.tag = Surface::zmin;
        else if (on_plane(2, hi.z())) facet.tag = Surface::zmax;

        set.total_area += facet.area;
        set.facets.push_back(facet);
    }
    return set;
}

} // namespace podgp
