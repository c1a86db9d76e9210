#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stochhom/graph.hpp"
#include "stochhom/sample.hpp"

namespace stochhom {

/// The constant a reference measurement calibrates.
enum class CalibrationKind : std::uint8_t {
    SphereSphere,
    SphereCylinder,
    CylinderCylinder,
    BoundarySphere,
    BoundaryCylinder,
    VoxelFace,
    VoxelEdge,
    VoxelVertex,
};

struct ReferencePoint {
    CalibrationKind kind = CalibrationKind::SphereSphere;
    double overlap_depth = 0.0;
    double measured_conductance = 0.0;
};

/// Reference point from a two-inclusion fixture: the fixture must contain
/// exactly one inclusion-inclusion contact, which supplies kind and depth.
/// Throws ConfigError otherwise.
[[nodiscard]] ReferencePoint reference_from_fixture(const Sample& fixture, double measured_conductance);

struct KindFit {
    double constant = 0.0;
    std::size_t n_points = 0;
    /// Sum of squared residuals measured - k * depth^p.
    double sum_squared_residual = 0.0;
    double max_abs_residual = 0.0;
};

struct FitResult {
    CalibrationConstants constants;
    std::map<CalibrationKind, KindFit> fits;
};

/// Least-squares fit through the origin per kind:
///   k = sum(g_i x_i) / sum(x_i^2),  x_i = depth_i^p
/// with p from constants.law. Kinds in `required` must have points
/// (InsufficientData otherwise); kinds without points keep the value from
/// `defaults`. DegenerateFit when every depth of a fitted kind is zero.
[[nodiscard]] FitResult fit_constants(const std::vector<ReferencePoint>& points,
                                      const CalibrationConstants& defaults = {},
                                      const std::vector<CalibrationKind>& required = {});

[[nodiscard]] double& constant_for(CalibrationConstants& cal, CalibrationKind kind);
[[nodiscard]] double constant_for(const CalibrationConstants& cal, CalibrationKind kind);

[[nodiscard]] const char* to_string(CalibrationKind kind);
[[nodiscard]] std::optional<CalibrationKind> calibration_kind_from_string(const std::string& name);

}  // namespace stochhom
