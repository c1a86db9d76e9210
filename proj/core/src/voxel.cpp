#include "stochhom/voxel.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <fstream>
#include <iterator>

#include "stochhom/cell_list.hpp"
#include "stochhom/errors.hpp"

namespace stochhom {

namespace {

struct Offset {
    int d[3];
    int nonzero;
};

// Half of the 26-neighbourhood: each unordered neighbour pair is visited once.
std::vector<Offset> forward_offsets(VoxelConnectivity conn) {
    std::vector<Offset> out;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const bool forward = dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0);
                if (!forward) continue;
                const int nz = (dx != 0) + (dy != 0) + (dz != 0);
                if (conn == VoxelConnectivity::Face && nz > 1) continue;
                if (conn == VoxelConnectivity::FaceEdge && nz > 2) continue;
                out.push_back({{dx, dy, dz}, nz});
            }
        }
    }
    return out;
}

void skip_pgm_space(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

std::size_t read_pgm_number(std::istream& in, const char* what) {
    skip_pgm_space(in);
    long long v = -1;
    if (!(in >> v) || v < 0) throw BadSlice(fmt::format("PGM header: cannot read {}", what));
    return static_cast<std::size_t>(v);
}

}  // namespace

VoxelGrid::VoxelGrid(GridDims dims, double spacing) : dims_(dims), spacing_(spacing) {
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) throw ConfigError("voxel grid dimensions must be >= 1");
    if (!(spacing > 0.0)) throw ConfigError("voxel spacing must be positive");
    occupancy_.assign(dims.count(), 0);
}

std::size_t VoxelGrid::occupied_count() const {
    return static_cast<std::size_t>(std::count_if(occupancy_.begin(), occupancy_.end(), [](auto v) { return v != 0; }));
}

double VoxelGrid::occupied_fraction() const {
    return static_cast<double>(occupied_count()) / static_cast<double>(dims_.count());
}

VoxelGrid load_voxel_grid(std::span<const std::uint8_t> bytes, GridDims dims, std::uint8_t threshold,
                          double spacing) {
    VoxelGrid grid(dims, spacing);
    if (bytes.size() != dims.count()) {
        throw SizeMismatch(fmt::format("raw volume has {} bytes but dims {}x{}x{} need {}", bytes.size(), dims.nx,
                                       dims.ny, dims.nz, dims.count()));
    }
    auto& occ = grid.occupancy();
    for (std::size_t i = 0; i < bytes.size(); ++i) occ[i] = bytes[i] >= threshold ? 1 : 0;
    return grid;
}

VoxelGrid load_voxel_grid(std::istream& in, GridDims dims, std::uint8_t threshold, double spacing) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(dims.count());
    std::transform(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>(), std::back_inserter(bytes),
                   [](char c) { return static_cast<std::uint8_t>(c); });
    return load_voxel_grid(std::span<const std::uint8_t>(bytes), dims, threshold, spacing);
}

GraySlice read_pgm(std::istream& in) {
    char magic[2] = {0, 0};
    if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) {
        throw BadSlice("not a PGM image (expected P5 or P2 magic)");
    }
    GraySlice s;
    s.width = read_pgm_number(in, "width");
    s.height = read_pgm_number(in, "height");
    const std::size_t maxval = read_pgm_number(in, "maxval");
    if (s.width == 0 || s.height == 0) throw BadSlice("PGM image has a zero dimension");
    if (maxval == 0 || maxval > 255) throw BadSlice(fmt::format("PGM maxval {} unsupported (8-bit only)", maxval));
    const std::size_t n = s.width * s.height;
    s.pixels.resize(n);
    if (magic[1] == '5') {
        in.get();  // single whitespace after maxval
        if (!in.read(reinterpret_cast<char*>(s.pixels.data()), static_cast<std::streamsize>(n))) {
            throw BadSlice(fmt::format("PGM pixel data truncated (expected {} bytes)", n));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t v = read_pgm_number(in, "pixel");
            if (v > maxval) throw BadSlice("PGM pixel exceeds maxval");
            s.pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    return s;
}

VoxelGrid load_slice_stack(const std::vector<GraySlice>& slices, std::uint8_t threshold, double spacing) {
    if (slices.empty()) throw BadSlice("empty slice stack");
    const std::size_t w = slices.front().width;
    const std::size_t h = slices.front().height;
    std::vector<std::uint8_t> bytes;
    bytes.reserve(w * h * slices.size());
    for (std::size_t z = 0; z < slices.size(); ++z) {
        const GraySlice& s = slices[z];
        if (s.width != w || s.height != h || s.pixels.size() != w * h) {
            throw BadSlice(fmt::format("slice {} is {}x{}, expected {}x{}", z, s.width, s.height, w, h));
        }
        bytes.insert(bytes.end(), s.pixels.begin(), s.pixels.end());
    }
    return load_voxel_grid(std::span<const std::uint8_t>(bytes), GridDims{w, h, slices.size()}, threshold, spacing);
}

VoxelGrid load_slice_directory(const std::filesystem::path& dir, std::uint8_t threshold, double spacing) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    if (ec) throw IoError(fmt::format("cannot list slice directory {}: {}", dir.string(), ec.message()));
    std::sort(files.begin(), files.end());
    std::vector<GraySlice> slices;
    slices.reserve(files.size());
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw IoError(fmt::format("cannot open slice {}", f.string()));
        try {
            slices.push_back(read_pgm(in));
        } catch (const BadSlice& e) {
            throw BadSlice(fmt::format("{}: {}", f.string(), e.what()));
        }
    }
    return load_slice_stack(slices, threshold, spacing);
}

VoxelGrid voxelize_sample(const Sample& sample, std::size_t resolution) {
    if (resolution < 8) throw ConfigError(fmt::format("voxel resolution {} below the minimum of 8", resolution));
    const double L = sample.cell.edge_length;
    const double h = L / static_cast<double>(resolution);
    VoxelGrid grid(GridDims{resolution, resolution, resolution}, h);
    if (sample.inclusions.empty()) return grid;
    const CellList list = make_cell_list(sample.inclusions, sample.cell);
    for (std::size_t z = 0; z < resolution; ++z) {
        for (std::size_t y = 0; y < resolution; ++y) {
            for (std::size_t x = 0; x < resolution; ++x) {
                const Vec3 p((static_cast<double>(x) + 0.5) * h, (static_cast<double>(y) + 0.5) * h,
                             (static_cast<double>(z) + 0.5) * h);
                for (std::size_t id : list.at_point(p)) {
                    if (contains_point(sample.inclusions[id], p, sample.cell)) {
                        grid.set(x, y, z, true);
                        break;
                    }
                }
            }
        }
    }
    return grid;
}

CircuitGraph voxel_graph(const VoxelGrid& grid, int axis, const CalibrationConstants& cal,
                         const VoxelGraphOptions& options, VoxelEdgeCounts* counts) {
    if (axis < 0 || axis > 2) throw ConfigError(fmt::format("voxel axis {} outside 0..2", axis));
    const GridDims& dims = grid.dims();
    const std::size_t n_axis[3] = {dims.nx, dims.ny, dims.nz};
    const auto& occ = grid.occupancy();

    std::vector<std::size_t> occupied;
    for (std::size_t i = 0; i < occ.size(); ++i) {
        if (occ[i] != 0) occupied.push_back(i);
    }
    const auto vertex_of = [&](std::size_t linear) {
        return static_cast<std::size_t>(std::lower_bound(occupied.begin(), occupied.end(), linear) - occupied.begin());
    };

    CircuitGraph g;
    g.n_vertices = occupied.size() + 2;
    g.source = occupied.size();
    g.sink = occupied.size() + 1;
    VoxelEdgeCounts local;

    const auto offsets = forward_offsets(options.connectivity);
    bool may_duplicate = false;
    for (std::size_t v = 0; v < occupied.size(); ++v) {
        const std::size_t lin = occupied[v];
        const long c[3] = {static_cast<long>(lin % dims.nx), static_cast<long>((lin / dims.nx) % dims.ny),
                           static_cast<long>(lin / (dims.nx * dims.ny))};
        for (const Offset& off : offsets) {
            long q[3];
            bool inside = true;
            for (int k = 0; k < 3 && inside; ++k) {
                q[k] = c[k] + off.d[k];
                const long n = static_cast<long>(n_axis[k]);
                if (q[k] >= 0 && q[k] < n) continue;
                if (k != axis && options.periodic_transverse) {
                    q[k] = (q[k] + n) % n;
                    if (n <= 2) may_duplicate = true;
                } else {
                    inside = false;
                }
            }
            if (!inside) continue;
            const std::size_t qlin = grid.index(static_cast<std::size_t>(q[0]), static_cast<std::size_t>(q[1]),
                                                static_cast<std::size_t>(q[2]));
            if (qlin == lin || occ[qlin] == 0) continue;
            double k_c = cal.k_face;
            switch (off.nonzero) {
                case 1: ++local.face; break;
                case 2: k_c = cal.k_edge; ++local.edge; break;
                default: k_c = cal.k_vertex; ++local.vertex; break;
            }
            g.edges.push_back({v, vertex_of(qlin), k_c});
        }
        if (c[axis] == 0) {
            g.edges.push_back({v, g.source, cal.k_face});
            ++local.terminal;
        }
        if (c[axis] == static_cast<long>(n_axis[axis]) - 1) {
            g.edges.push_back({v, g.sink, cal.k_face});
            ++local.terminal;
        }
    }
    if (counts != nullptr) *counts = local;
    if (may_duplicate) return merge_parallel_edges(g);
    return g;
}

std::array<double, 3> voxel_effective_conductivity(const VoxelGrid& grid, const CalibrationConstants& cal,
                                                   const VoxelGraphOptions& options, const SolverOptions& solver) {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    if (grid.occupied_count() == 0) return out;
    for (int a = 0; a < 3; ++a) {
        out[static_cast<std::size_t>(a)] = effective_conductance(voxel_graph(grid, a, cal, options), solver);
    }
    return out;
}

}  // namespace stochhom
