#include "stochhom/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <string>

#include "stochhom/errors.hpp"

namespace stochhom {

namespace {

constexpr std::pair<CalibrationKind, const char*> kNames[] = {
    {CalibrationKind::SphereSphere, "sphere-sphere"},
    {CalibrationKind::SphereCylinder, "sphere-cylinder"},
    {CalibrationKind::CylinderCylinder, "cylinder-cylinder"},
    {CalibrationKind::BoundarySphere, "boundary-sphere"},
    {CalibrationKind::BoundaryCylinder, "boundary-cylinder"},
    {CalibrationKind::VoxelFace, "voxel-face"},
    {CalibrationKind::VoxelEdge, "voxel-edge"},
    {CalibrationKind::VoxelVertex, "voxel-vertex"},
};

}  // namespace

const char* to_string(CalibrationKind kind) {
    for (const auto& [k, name] : kNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<CalibrationKind> calibration_kind_from_string(const std::string& name) {
    for (const auto& [k, n] : kNames) {
        if (name == n) return k;
    }
    return std::nullopt;
}

double& constant_for(CalibrationConstants& cal, CalibrationKind kind) {
    switch (kind) {
        case CalibrationKind::SphereSphere: return cal.k_ss;
        case CalibrationKind::SphereCylinder: return cal.k_sc;
        case CalibrationKind::CylinderCylinder: return cal.k_cc;
        case CalibrationKind::BoundarySphere: return cal.k_boundary_s;
        case CalibrationKind::BoundaryCylinder: return cal.k_boundary_c;
        case CalibrationKind::VoxelFace: return cal.k_face;
        case CalibrationKind::VoxelEdge: return cal.k_edge;
        case CalibrationKind::VoxelVertex: break;
    }
    return cal.k_vertex;
}

double constant_for(const CalibrationConstants& cal, CalibrationKind kind) {
    CalibrationConstants copy = cal;
    return constant_for(copy, kind);
}

ReferencePoint reference_from_fixture(const Sample& fixture, double measured_conductance) {
    if (fixture.inclusions.size() != 2) {
        throw ConfigError(fmt::format("calibration fixture must hold exactly two inclusions, got {}",
                                      fixture.inclusions.size()));
    }
    const auto& a = fixture.inclusions[0];
    const auto& b = fixture.inclusions[1];
    const auto images = overlapping_images(a, b, fixture.cell);
    if (images.size() != 1) {
        throw ConfigError(fmt::format("calibration fixture must contain exactly one contact, found {}", images.size()));
    }
    ReferencePoint p;
    switch (pair_kind(a, b)) {
        case ContactKind::SphereSphere: p.kind = CalibrationKind::SphereSphere; break;
        case ContactKind::SphereCylinder: p.kind = CalibrationKind::SphereCylinder; break;
        default: p.kind = CalibrationKind::CylinderCylinder; break;
    }
    p.overlap_depth = images.front().depth;
    p.measured_conductance = measured_conductance;
    return p;
}

FitResult fit_constants(const std::vector<ReferencePoint>& points, const CalibrationConstants& defaults,
                        const std::vector<CalibrationKind>& required) {
    const double p = law_exponent(defaults.law);
    std::map<CalibrationKind, std::vector<const ReferencePoint*>> by_kind;
    for (const auto& pt : points) {
        if (!(pt.measured_conductance > 0.0)) {
            throw ConfigError(fmt::format("measured conductance must be positive, got {}", pt.measured_conductance));
        }
        if (!(pt.overlap_depth >= 0.0)) {
            throw ConfigError(fmt::format("overlap depth must be non-negative, got {}", pt.overlap_depth));
        }
        by_kind[pt.kind].push_back(&pt);
    }
    for (CalibrationKind k : required) {
        if (by_kind.find(k) == by_kind.end()) {
            throw InsufficientData(fmt::format("no reference points for {}", to_string(k)));
        }
    }

    FitResult out;
    out.constants = defaults;
    for (const auto& [kind, pts] : by_kind) {
        // Order-independent sums: accumulate in sorted order.
        std::vector<std::pair<double, double>> xy;
        xy.reserve(pts.size());
        for (const ReferencePoint* pt : pts) {
            const double x = p == 1.0 ? pt->overlap_depth : std::pow(pt->overlap_depth, p);
            xy.emplace_back(x, pt->measured_conductance);
        }
        std::sort(xy.begin(), xy.end());
        double sxy = 0.0;
        double sxx = 0.0;
        for (const auto& [x, y] : xy) {
            sxy += x * y;
            sxx += x * x;
        }
        if (!(sxx > 0.0)) throw DegenerateFit(fmt::format("all overlap depths for {} are zero", to_string(kind)));
        KindFit fit;
        fit.constant = sxy / sxx;
        fit.n_points = xy.size();
        for (const auto& [x, y] : xy) {
            const double r = y - fit.constant * x;
            fit.sum_squared_residual += r * r;
            fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
        }
        constant_for(out.constants, kind) = fit.constant;
        out.fits[kind] = fit;
    }
    return out;
}

}  // namespace stochhom
