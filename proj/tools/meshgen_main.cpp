#include "podgp/boxmesh.hpp"
#include "podgp/mesh.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <vector>

// Structured box-mesh generator for demo and test inputs.

int main(int argc, char** argv) {
    CLI::App app{"Generate a tetrahedral box mesh (6 tets per hex cell)"};

    int nx = 1, ny = 1, nz = 1;
    std::vector<double> lo{0.0, 0.0, 0.0}, hi{1.0, 1.0, 1.0};
    int tag = 0;
    double split_z = 0.0;
    std::vector<int> split_tags;
    std::string out;

    app.add_option("--nx", nx, "Cells along x")->required()->check(CLI::PositiveNumber);
    app.add_option("--ny", ny, "Cells along y")->required()->check(CLI::PositiveNumber);
    app.add_option("--nz", nz, "Cells along z")->required()->check(CLI::PositiveNumber);
    app.add_option("--lo", lo, "Lower corner x y z")->expected(3);
    app.add_option("--hi", hi, "Upper corner x y z")->expected(3);
    app.add_option("--tag", tag, "Material tag for all cells");
    auto* split = app.add_option("--split-z", split_z,
                                 "Assign --split-tags below/above this z instead of --tag");
    app.add_option("--split-tags", split_tags, "Tags for cells below and above --split-z")
        ->expected(2)
        ->needs(split);
    app.add_option("--out", out, "Output mesh file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const Eigen::Vector3d lo_v(lo[0], lo[1], lo[2]), hi_v(hi[0], hi[1], hi[2]);
        std::function<int(const Eigen::Vector3d&)> tag_of;
        if (!split_tags.empty()) {
            const double z = split_z;
            const int below = split_tags[0], above = split_tags[1];
            tag_of = [=](const Eigen::Vector3d& c) { return c.z() < z ? below : above; };
        } else if (tag != 0) {
            tag_of = [=](const Eigen::Vector3d&) { return tag; };
        }
        const podgp::TetMesh mesh = podgp::make_box_mesh(nx, ny, nz, lo_v, hi_v, tag_of);
        podgp::save_mesh(mesh, out);
        std::cout << "vertices: " << mesh.num_vertices() << "\ncells: " << mesh.num_cells()
                  << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
