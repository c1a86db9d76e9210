#include "stochhom/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "stochhom/cell_list.hpp"
#include "stochhom/errors.hpp"

namespace stochhom {

namespace {

constexpr std::uint64_t kPuffStreamSalt = 0x70756666'75700000ULL;  // "puffup"

double half_length_for(const GenerationSpec& spec) {
    return 0.5 * spec.cylinder_aspect * spec.cylinder_radius;
}

// A shape that overlaps its own periodic image cannot be placed at all.
void check_fits(const GenerationSpec& spec) {
    const double L = spec.edge_length;
    if (spec.n_spheres > 0 && 2.0 * spec.sphere_radius >= L) {
        throw PlacementFailure(
            fmt::format("sphere radius {} does not fit in a periodic cell of edge {}", spec.sphere_radius, L));
    }
    if (spec.n_cylinders > 0 && 2.0 * (half_length_for(spec) + spec.cylinder_radius) >= L) {
        throw PlacementFailure(fmt::format("cylinder of radius {} and aspect {} does not fit in a cell of edge {}",
                                           spec.cylinder_radius, spec.cylinder_aspect, L));
    }
}

Inclusion draw_sphere(const GenerationSpec& spec, RandomStream& rng) {
    const double L = spec.edge_length;
    Sphere s;
    s.center = Vec3(uniform01(rng) * L, uniform01(rng) * L, uniform01(rng) * L);
    s.radius = spec.sphere_radius;
    return s;
}

Inclusion draw_cylinder(const GenerationSpec& spec, RandomStream& rng) {
    const double L = spec.edge_length;
    Cylinder c;
    c.center = Vec3(uniform01(rng) * L, uniform01(rng) * L, uniform01(rng) * L);
    c.axis = random_unit_vector(rng);
    c.radius = spec.cylinder_radius;
    c.half_length = half_length_for(spec);
    return c;
}

Sample make_sample(const GenerationSpec& spec, std::vector<Inclusion> inclusions) {
    Sample out;
    out.cell = UnitCell{spec.edge_length};
    out.inclusions = std::move(inclusions);
    out.spec = spec;
    out.achieved_fraction = analytic_fraction(out);
    return out;
}

void set_center(Inclusion& inc, const Vec3& c) {
    std::visit([&](auto& s) { s.center = c; }, inc);
}

}  // namespace

void validate(const GenerationSpec& spec) {
    if (!(spec.edge_length > 0.0)) throw ConfigError("edge_length must be positive");
    if (spec.n_spheres + spec.n_cylinders == 0) throw ConfigError("n_spheres + n_cylinders must be at least 1");
    if (spec.n_spheres > 0 && !(spec.sphere_radius > 0.0)) throw ConfigError("sphere_radius must be positive");
    if (spec.n_cylinders > 0) {
        if (!(spec.cylinder_radius > 0.0)) throw ConfigError("cylinder_radius must be positive");
        if (!(spec.cylinder_aspect > 0.0)) throw ConfigError("cylinder_aspect must be positive");
    }
    if (!(spec.puff_factor >= 1.0)) throw ConfigError("puff_factor must be >= 1");
    if (spec.max_attempts == 0) throw ConfigError("max_attempts must be at least 1");
    if (!(spec.md_tolerance >= 0.0)) throw ConfigError("md_tolerance must be non-negative");
}

GenerationSpec resolve_radii(GenerationSpec spec, double cylinder_share) {
    if (!(cylinder_share >= 0.0 && cylinder_share <= 1.0)) {
        throw ConfigError(fmt::format("cylinder share {} outside [0, 1]", cylinder_share));
    }
    const double phi = spec.target_volume_fraction;
    if (!(phi > 0.0 && phi < 1.0)) {
        throw ConfigError(fmt::format("target_volume_fraction {} outside (0, 1)", phi));
    }
    const double L = spec.edge_length;
    const double total = phi * L * L * L;
    const double v_cyl = cylinder_share * total;
    const double v_sph = total - v_cyl;

    if (v_sph <= 0.0) spec.n_spheres = 0;
    if (v_cyl <= 0.0) spec.n_cylinders = 0;
    if (spec.n_spheres > 0) {
        const double each = v_sph / static_cast<double>(spec.n_spheres);
        spec.sphere_radius = std::cbrt(each * 3.0 / (4.0 * std::numbers::pi));
    } else if (v_sph > 0.0) {
        throw ConfigError("sphere volume share requested but n_spheres is 0");
    }
    if (spec.n_cylinders > 0) {
        // pi r^2 (aspect r) = each
        const double each = v_cyl / static_cast<double>(spec.n_cylinders);
        spec.cylinder_radius = std::cbrt(each / (std::numbers::pi * spec.cylinder_aspect));
    } else if (v_cyl > 0.0) {
        throw ConfigError("cylinder volume share requested but n_cylinders is 0");
    }
    return spec;
}

Sample generate_rsa(const GenerationSpec& spec, RandomStream& rng) {
    validate(spec);
    check_fits(spec);
    const UnitCell cell{spec.edge_length};

    std::vector<Inclusion> placed;
    placed.reserve(spec.n_spheres + spec.n_cylinders);
    double bin = spec.edge_length / 64.0;
    if (spec.n_spheres > 0) bin = std::max(bin, 2.0 * spec.sphere_radius);
    if (spec.n_cylinders > 0) bin = std::max(bin, 2.0 * (half_length_for(spec) + spec.cylinder_radius));
    CellList list(cell, bin);

    auto place = [&](auto&& draw, const char* what) {
        for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
            Inclusion trial = draw(spec, rng);
            bool clear = true;
            for (std::size_t id : list.candidates(trial)) {
                if (deepest_overlap(trial, placed[id], cell).depth > 0.0) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                list.insert(placed.size(), trial);
                placed.push_back(std::move(trial));
                return;
            }
        }
        throw PlacementFailure(fmt::format("RSA could not place {} #{} after {} attempts", what, placed.size() + 1,
                                           spec.max_attempts));
    };

    for (std::size_t i = 0; i < spec.n_cylinders; ++i) place(draw_cylinder, "cylinder");
    for (std::size_t i = 0; i < spec.n_spheres; ++i) place(draw_sphere, "sphere");

    std::rotate(placed.begin(), placed.begin() + static_cast<std::ptrdiff_t>(spec.n_cylinders), placed.end());
    return make_sample(spec, std::move(placed));
}

Sample generate_md(const GenerationSpec& spec, RandomStream& rng) {
    validate(spec);
    check_fits(spec);
    const UnitCell cell{spec.edge_length};

    std::vector<Inclusion> incs;
    incs.reserve(spec.n_spheres + spec.n_cylinders);
    for (std::size_t i = 0; i < spec.n_spheres; ++i) incs.push_back(draw_sphere(spec, rng));
    for (std::size_t i = 0; i < spec.n_cylinders; ++i) incs.push_back(draw_cylinder(spec, rng));

    double min_radius = std::numeric_limits<double>::infinity();
    for (const auto& inc : incs) min_radius = std::min(min_radius, radius_of(inc));
    const double cap = 0.1 * min_radius;
    const double bin = suggested_bin_size(incs, cell);

    std::vector<Vec3> disp(incs.size());
    double worst = 0.0;
    for (std::size_t iter = 0; iter < spec.max_attempts; ++iter) {
        CellList list(cell, bin);
        for (std::size_t i = 0; i < incs.size(); ++i) list.insert(i, incs[i]);
        std::fill(disp.begin(), disp.end(), Vec3::Zero());
        worst = 0.0;
        for (std::size_t i = 0; i < incs.size(); ++i) {
            for (std::size_t j : list.candidates(incs[i])) {
                if (j <= i) continue;
                for (const PairOverlap& ov : overlapping_images(incs[i], incs[j], cell)) {
                    worst = std::max(worst, ov.depth);
                    const Vec3 n = ov.degenerate ? random_unit_vector(rng) : ov.normal;
                    disp[i] -= 0.5 * ov.depth * n;
                    disp[j] += 0.5 * ov.depth * n;
                }
            }
        }
        if (worst <= spec.md_tolerance) {
            return make_sample(spec, std::move(incs));
        }
        for (std::size_t i = 0; i < incs.size(); ++i) {
            Vec3 d = disp[i];
            const double len = d.norm();
            if (len > cap) d *= cap / len;
            set_center(incs[i], wrap_position(center_of(incs[i]) + d, cell));
        }
    }
    throw RelaxationFailure(fmt::format("MD relaxation left overlap {:.3e} after {} iterations", worst,
                                        spec.max_attempts));
}

Sample generate(const GenerationSpec& spec) {
    RandomStream rng(spec.seed);
    return spec.method == PlacementMethod::RSA ? generate_rsa(spec, rng) : generate_md(spec, rng);
}

Sample puff_up(const Sample& sample, double factor, std::size_t fraction_probes) {
    if (!(factor >= 1.0)) throw ConfigError(fmt::format("puff factor {} must be >= 1", factor));
    Sample out = sample;
    out.spec.puff_factor = factor;
    if (factor == 1.0) return out;
    for (auto& inc : out.inclusions) {
        std::visit(
            [&](auto& s) {
                using T = std::decay_t<decltype(s)>;
                s.radius *= factor;
                if constexpr (std::is_same_v<T, Cylinder>) {
                    if (sample.spec.puff_axial) s.half_length *= factor;
                }
            },
            inc);
    }
    if (fraction_probes > 0) {
        RandomStream rng(splitmix64(sample.spec.seed ^ kPuffStreamSalt));
        out.achieved_fraction = volume_fraction_estimate(out, fraction_probes, rng);
    } else {
        out.achieved_fraction = std::min(1.0, analytic_fraction(out));
    }
    return out;
}

double max_overlap_depth(const Sample& sample) {
    if (sample.inclusions.size() < 2) return 0.0;
    const CellList list = make_cell_list(sample.inclusions, sample.cell);
    double worst = 0.0;
    for (std::size_t i = 0; i < sample.inclusions.size(); ++i) {
        for (std::size_t j : list.candidates(sample.inclusions[i])) {
            if (j <= i) continue;
            worst = std::max(worst, deepest_overlap(sample.inclusions[i], sample.inclusions[j], sample.cell).depth);
        }
    }
    return worst;
}

}  // namespace stochhom
