#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stochhom/geometry.hpp"

namespace stochhom {

/// Periodic binning of inclusions by their bounding boxes. Every inclusion is
/// registered in each bin its (capsule) bounding box touches, so two inclusions
/// whose boxes intersect share at least one bin.
class CellList {
public:
    CellList(const UnitCell& cell, double bin_size);

    void clear();
    void insert(std::size_t id, const Inclusion& inc);

    /// Ids whose bins intersect the box of `inc`. Sorted, unique.
    [[nodiscard]] std::vector<std::size_t> candidates(const Inclusion& inc) const;
    /// Ids registered in the bin containing p.
    [[nodiscard]] const std::vector<std::size_t>& at_point(const Vec3& p) const;

    [[nodiscard]] std::size_t bins_per_axis() const { return n_; }

private:
    [[nodiscard]] std::vector<std::size_t> bins_for(const Inclusion& inc) const;
    [[nodiscard]] std::size_t bin_index(long ix, long iy, long iz) const;

    UnitCell cell_;
    std::size_t n_ = 1;
    double bin_ = 1.0;
    std::vector<std::vector<std::size_t>> bins_;
};

/// Reasonable bin size for a set of inclusions (largest bounding diameter,
/// at least edge/64).
[[nodiscard]] double suggested_bin_size(const std::vector<Inclusion>& inclusions, const UnitCell& cell);

/// Build a list with every inclusion inserted.
[[nodiscard]] CellList make_cell_list(const std::vector<Inclusion>& inclusions, const UnitCell& cell);

}  // namespace stochhom
