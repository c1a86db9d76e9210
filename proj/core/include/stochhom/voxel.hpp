#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <vector>

#include "stochhom/graph.hpp"
#include "stochhom/sample.hpp"
#include "stochhom/solver.hpp"

namespace stochhom {

struct GridDims {
    std::size_t nx = 1;
    std::size_t ny = 1;
    std::size_t nz = 1;

    [[nodiscard]] std::size_t count() const { return nx * ny * nz; }
    [[nodiscard]] std::size_t operator[](int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
};

/// Segmented two-phase grid; voxel (x,y,z) lives at x + nx*(y + ny*z).
class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(GridDims dims, double spacing = 1.0);

    [[nodiscard]] const GridDims& dims() const { return dims_; }
    [[nodiscard]] double spacing() const { return spacing_; }
    [[nodiscard]] std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims_.nx * (y + dims_.ny * z);
    }
    [[nodiscard]] bool occupied(std::size_t x, std::size_t y, std::size_t z) const {
        return occupancy_[index(x, y, z)] != 0;
    }
    void set(std::size_t x, std::size_t y, std::size_t z, bool value) {
        occupancy_[index(x, y, z)] = value ? 1 : 0;
    }
    [[nodiscard]] const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
    [[nodiscard]] std::vector<std::uint8_t>& occupancy() { return occupancy_; }
    [[nodiscard]] std::size_t occupied_count() const;
    [[nodiscard]] double occupied_fraction() const;

private:
    GridDims dims_;
    double spacing_ = 1.0;
    std::vector<std::uint8_t> occupancy_ = std::vector<std::uint8_t>(1, 0);
};

/// Threshold a raw 8-bit volume: occupied iff value >= threshold.
/// Throws SizeMismatch when the byte count is not nx*ny*nz.
[[nodiscard]] VoxelGrid load_voxel_grid(std::span<const std::uint8_t> bytes, GridDims dims, std::uint8_t threshold,
                                        double spacing = 1.0);
[[nodiscard]] VoxelGrid load_voxel_grid(std::istream& in, GridDims dims, std::uint8_t threshold,
                                        double spacing = 1.0);

struct GraySlice {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  ///< row-major, 8-bit
};

/// Read a binary (P5) or ASCII (P2) PGM image with maxval <= 255.
/// Throws BadSlice on malformed input.
[[nodiscard]] GraySlice read_pgm(std::istream& in);

/// Stack slices along z. Throws BadSlice when slice sizes differ or the stack is empty.
[[nodiscard]] VoxelGrid load_slice_stack(const std::vector<GraySlice>& slices, std::uint8_t threshold,
                                         double spacing = 1.0);
/// Every *.pgm file of a directory in lexicographic order.
[[nodiscard]] VoxelGrid load_slice_directory(const std::filesystem::path& dir, std::uint8_t threshold,
                                             double spacing = 1.0);

/// Occupied iff the voxel center lies in some inclusion (periodic membership).
/// Requires resolution >= 8.
[[nodiscard]] VoxelGrid voxelize_sample(const Sample& sample, std::size_t resolution);

enum class VoxelConnectivity : std::uint8_t { Face = 6, FaceEdge = 18, Full = 26 };

struct VoxelGraphOptions {
    /// Wrap the two directions transverse to the terminal axis.
    bool periodic_transverse = false;
    VoxelConnectivity connectivity = VoxelConnectivity::Full;
};

/// Counts of the adjacency types present in a voxel graph.
struct VoxelEdgeCounts {
    std::size_t face = 0;
    std::size_t edge = 0;
    std::size_t vertex = 0;
    std::size_t terminal = 0;
};

/// One vertex per occupied voxel in index order, then the source (first layer
/// along `axis`) and sink (last layer). Neighbours sharing a face, an edge or
/// only a corner are joined with k_face, k_edge or k_vertex; terminal edges use
/// k_face. No wrap along `axis`. Memory scales with the occupied voxels.
[[nodiscard]] CircuitGraph voxel_graph(const VoxelGrid& grid, int axis, const CalibrationConstants& cal,
                                       const VoxelGraphOptions& options = {}, VoxelEdgeCounts* counts = nullptr);

/// Effective conductance along x, y and z.
[[nodiscard]] std::array<double, 3> voxel_effective_conductivity(const VoxelGrid& grid,
                                                                 const CalibrationConstants& cal,
                                                                 const VoxelGraphOptions& options = {},
                                                                 const SolverOptions& solver = {});

}  // namespace stochhom
