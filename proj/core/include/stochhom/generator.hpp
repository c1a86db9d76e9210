#pragma once

#include <cstddef>

#include "stochhom/random.hpp"
#include "stochhom/sample.hpp"

namespace stochhom {

/// Throws ConfigError when the spec is not usable (no inclusions, puff < 1,
/// a count with a non-positive size, and so on). Geometric infeasibility is
/// not checked here; the placement methods report it.
void validate(const GenerationSpec& spec);

/// Set sphere and cylinder radii so that the pre-puff solid fraction equals
/// spec.target_volume_fraction, with `cylinder_share` of that volume carried
/// by cylinders. A family whose share is zero gets a count of zero.
[[nodiscard]] GenerationSpec resolve_radii(GenerationSpec spec, double cylinder_share);

/// Random sequential addition: inclusions are drawn one at a time (cylinders
/// first, then spheres) and rejected while they overlap anything already
/// placed. The returned list is ordered spheres first. Throws PlacementFailure after spec.max_attempts rejections of a
/// single inclusion.
[[nodiscard]] Sample generate_rsa(const GenerationSpec& spec, RandomStream& rng);

/// Simultaneous placement followed by pairwise repulsion until the largest
/// overlap is at most spec.md_tolerance. Throws RelaxationFailure when
/// spec.max_attempts iterations do not suffice.
[[nodiscard]] Sample generate_md(const GenerationSpec& spec, RandomStream& rng);

/// Dispatch on spec.method with a stream seeded from spec.seed.
[[nodiscard]] Sample generate(const GenerationSpec& spec);

/// Scale every linear size by `factor` (cylinder length only when
/// spec.puff_axial). Centers and axes are untouched. The achieved fraction is
/// re-estimated with `fraction_probes` Monte Carlo points seeded from the
/// sample's seed; pass 0 to skip the estimate and keep the analytic value.
[[nodiscard]] Sample puff_up(const Sample& sample, double factor, std::size_t fraction_probes = 1000000);

/// Largest positive pairwise overlap depth in the sample (0 when none).
[[nodiscard]] double max_overlap_depth(const Sample& sample);

}  // namespace stochhom
