#include "stochhom/cell_list.hpp"

#include <algorithm>
#include <cmath>

namespace stochhom {

namespace {

long floor_div(double x, double bin) { return static_cast<long>(std::floor(x / bin)); }

std::size_t wrap_index(long i, std::size_t n) {
    const long m = static_cast<long>(n);
    long r = i % m;
    if (r < 0) r += m;
    return static_cast<std::size_t>(r);
}

// Axis-aligned half extents of the capsule around its center.
Vec3 half_extents(const Inclusion& inc) {
    return std::visit(
        [](const auto& s) -> Vec3 {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return Vec3::Constant(s.radius);
            } else {
                return (s.half_length * s.axis.cwiseAbs()).array() + s.radius;
            }
        },
        inc);
}

}  // namespace

CellList::CellList(const UnitCell& cell, double bin_size) : cell_(cell) {
    const double L = cell.edge_length;
    const double n = std::floor(L / std::max(bin_size, L * 1e-6));
    n_ = static_cast<std::size_t>(std::clamp(n, 1.0, 128.0));
    bin_ = L / static_cast<double>(n_);
    bins_.resize(n_ * n_ * n_);
}

void CellList::clear() {
    for (auto& b : bins_) b.clear();
}

std::size_t CellList::bin_index(long ix, long iy, long iz) const {
    return wrap_index(ix, n_) + n_ * (wrap_index(iy, n_) + n_ * wrap_index(iz, n_));
}

std::vector<std::size_t> CellList::bins_for(const Inclusion& inc) const {
    const Vec3& c = center_of(inc);
    const Vec3 h = half_extents(inc);
    std::array<long, 3> lo{};
    std::array<long, 3> hi{};
    for (int k = 0; k < 3; ++k) {
        lo[k] = floor_div(c[k] - h[k], bin_);
        hi[k] = floor_div(c[k] + h[k], bin_);
        // A box spanning the whole cell touches every bin exactly once.
        if (hi[k] - lo[k] + 1 >= static_cast<long>(n_)) {
            lo[k] = 0;
            hi[k] = static_cast<long>(n_) - 1;
        }
    }
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>((hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1)));
    for (long iz = lo[2]; iz <= hi[2]; ++iz) {
        for (long iy = lo[1]; iy <= hi[1]; ++iy) {
            for (long ix = lo[0]; ix <= hi[0]; ++ix) out.push_back(bin_index(ix, iy, iz));
        }
    }
    return out;
}

void CellList::insert(std::size_t id, const Inclusion& inc) {
    for (std::size_t b : bins_for(inc)) bins_[b].push_back(id);
}

std::vector<std::size_t> CellList::candidates(const Inclusion& inc) const {
    std::vector<std::size_t> out;
    for (std::size_t b : bins_for(inc)) out.insert(out.end(), bins_[b].begin(), bins_[b].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const std::vector<std::size_t>& CellList::at_point(const Vec3& p) const {
    return bins_[bin_index(floor_div(p[0], bin_), floor_div(p[1], bin_), floor_div(p[2], bin_))];
}

double suggested_bin_size(const std::vector<Inclusion>& inclusions, const UnitCell& cell) {
    double d = cell.edge_length / 64.0;
    for (const auto& inc : inclusions) d = std::max(d, 2.0 * bounding_radius(inc));
    return d;
}

CellList make_cell_list(const std::vector<Inclusion>& inclusions, const UnitCell& cell) {
    CellList list(cell, suggested_bin_size(inclusions, cell));
    for (std::size_t i = 0; i < inclusions.size(); ++i) list.insert(i, inclusions[i]);
    return list;
}

}  // namespace stochhom
