#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stochhom/geometry.hpp"

namespace stochhom {

enum class PlacementMethod : std::uint8_t { RSA, MD };

/// Parameters of one sample generation run.
struct GenerationSpec {
    /// Pre-puff analytic solid fraction. Only consulted by resolve_radii();
    /// explicit radii are authoritative.
    double target_volume_fraction = 0.2;
    std::size_t n_spheres = 0;
    std::size_t n_cylinders = 0;
    double sphere_radius = 0.0;
    double cylinder_radius = 0.0;
    /// length / radius, i.e. 2*half_length/radius.
    double cylinder_aspect = 3.0;
    PlacementMethod method = PlacementMethod::RSA;
    double puff_factor = 1.1;
    /// Scale cylinder half-lengths during puff-up, not only radii.
    bool puff_axial = true;
    std::uint64_t seed = 0;
    /// RSA: attempts per inclusion. MD: relaxation iteration cap.
    std::size_t max_attempts = 100000;
    /// MD termination threshold on the largest pair overlap.
    double md_tolerance = 1e-9;
    double edge_length = 1.0;
};

struct Sample {
    UnitCell cell;
    std::vector<Inclusion> inclusions;
    GenerationSpec spec;
    double achieved_fraction = 0.0;
};

/// Sum of shape volumes divided by the cell volume (the union volume when no
/// inclusions overlap).
[[nodiscard]] double analytic_fraction(const Sample& sample);
[[nodiscard]] double analytic_fraction(const GenerationSpec& spec);

/// Monte Carlo estimate of the union volume fraction from n_probes uniform
/// points. Standard error is at most 0.5/sqrt(n_probes).
[[nodiscard]] double volume_fraction_estimate(const Sample& sample, std::size_t n_probes,
                                              RandomStream& rng);

}  // namespace stochhom
