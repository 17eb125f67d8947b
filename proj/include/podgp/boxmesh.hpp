#pragma once

#include "podgp/mesh.hpp"

#include <functional>

// Structured box meshes for demos and tests: each hex cell is split into
// the six Kuhn tetrahedra sharing the main diagonal, which tiles space
// conformally and keeps all volumes positive.

namespace podgp {

inline TetMesh make_box_mesh(int nx, int ny, int nz, const Eigen::Vector3d& lo,
                             const Eigen::Vector3d& hi,
                             const std::function<int(const Eigen::Vector3d&)>& tag_of = {}) {
    if (nx < 1 || ny < 1 || nz < 1) throw validation_error("box mesh needs at least 1x1x1 cells");
    if (!((hi - lo).array() > 0.0).all())
        throw validation_error("box mesh bounds must satisfy lo < hi per axis");

    TetMesh mesh;
    const int vx = nx + 1, vy = ny + 1, vz = nz + 1;
    mesh.vertices.resize(static_cast<Eigen::Index>(vx) * vy * vz, 3);
    auto vid = [&](int i, int j, int k) { return (k * vy + j) * vx + i; };
    for (int k = 0; k < vz; ++k)
        for (int j = 0; j < vy; ++j)
            for (int i = 0; i < vx; ++i)
                mesh.vertices.row(vid(i, j, k)) << lo.x() + (hi.x() - lo.x()) * i / nx,
                    lo.y() + (hi.y() - lo.y()) * j / ny, lo.z() + (hi.z() - lo.z()) * k / nz;

    // Vertex walks 0 -> e_p0 -> e_p0+e_p1 -> (1,1,1); odd permutations get
    // two vertices swapped to restore positive orientation.
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    static constexpr bool odd[6] = {false, true, true, false, false, true};

    mesh.cells.resize(static_cast<Eigen::Index>(nx) * ny * nz * 6, 4);
    mesh.material_tag.resize(mesh.cells.rows());
    Eigen::Index c = 0;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (int p = 0; p < 6; ++p) {
                    int corner[3] = {i, j, k};
                    int quad[4];
                    quad[0] = vid(corner[0], corner[1], corner[2]);
                    for (int s = 0; s < 3; ++s) {
                        corner[perms[p][s]] += 1;
                        quad[s + 1] = vid(corner[0], corner[1], corner[2]);
                    }
                    if (odd[p]) std::swap(quad[1], quad[2]);
                    mesh.cells.row(c) << quad[0], quad[1], quad[2], quad[3];
                    mesh.material_tag(c) = tag_of ? tag_of(mesh.cell_centroid(c)) : 0;
                    ++c;
                }
    validate_mesh(mesh);
    return mesh;
}

/// Single reference tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1), tag 0.
inline TetMesh make_reference_tet() {
    TetMesh mesh;
    mesh.vertices.resize(4, 3);
    mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    mesh.cells.resize(1, 4);
    mesh.cells << 0, 1, 2, 3;
    mesh.material_tag = Eigen::VectorXi::Zero(1);
    return mesh;
}

} // namespace podgp
