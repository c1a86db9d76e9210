#include "stochhom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stochhom/cell_list.hpp"
#include "stochhom/sample.hpp"

namespace stochhom {

namespace {

struct Core {
    Vec3 a;
    Vec3 b;  // equal to a for spheres
    double radius;
};

Core core_of(const Inclusion& inc, const Vec3& center) {
    return std::visit(
        [&](const auto& s) -> Core {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return {center, center, s.radius};
            } else {
                return {center - s.half_length * s.axis, center + s.half_length * s.axis, s.radius};
            }
        },
        inc);
}

// Every allowed lattice shift of b relative to a. The zero-shift displacement
// is the minimum image along wrapped axes and the raw difference otherwise.
template <typename Fn>
void for_each_image(const Vec3& ca, const Vec3& cb, const UnitCell& cell, const WrapMask& wrap,
                    double reach, Fn&& fn) {
    const double L = cell.edge_length;
    Vec3 base = cb - ca;
    const Vec3 mi = min_image_delta(ca, cb, cell);
    for (int k = 0; k < 3; ++k) {
        if (wrap[k]) base[k] = mi[k];
    }
    const int rx = wrap[0] ? 1 : 0;
    const int ry = wrap[1] ? 1 : 0;
    const int rz = wrap[2] ? 1 : 0;
    for (int i = -rx; i <= rx; ++i) {
        for (int j = -ry; j <= ry; ++j) {
            for (int k = -rz; k <= rz; ++k) {
                const Vec3 d = base + L * Vec3(i, j, k);
                if (d.norm() > reach) continue;
                fn(d);
            }
        }
    }
}

PairOverlap overlap_at(const Inclusion& a, const Inclusion& b, const Vec3& delta) {
    const Core ca = core_of(a, Vec3::Zero());
    const Core cb = core_of(b, delta);
    const SegmentClosest cl = closest_segment_segment(ca.a, ca.b, cb.a, cb.b);
    const Vec3 diff = cl.p2 - cl.p1;
    const double d = diff.norm();
    PairOverlap out;
    out.depth = ca.radius + cb.radius - d;
    out.point = 0.5 * (cl.p1 + cl.p2);
    if (d > 0.0) {
        out.normal = diff / d;
    } else {
        out.degenerate = true;
    }
    return out;
}

}  // namespace

const Vec3& center_of(const Inclusion& inc) {
    return std::visit([](const auto& s) -> const Vec3& { return s.center; }, inc);
}

double radius_of(const Inclusion& inc) {
    return std::visit([](const auto& s) { return s.radius; }, inc);
}

double bounding_radius(const Inclusion& inc) {
    return std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return s.radius;
            } else {
                return s.half_length + s.radius;
            }
        },
        inc);
}

double shape_volume(const Inclusion& inc) {
    return std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return 4.0 / 3.0 * std::numbers::pi * s.radius * s.radius * s.radius;
            } else {
                return std::numbers::pi * s.radius * s.radius * 2.0 * s.half_length;
            }
        },
        inc);
}

Vec3 min_image_delta(const Vec3& p, const Vec3& q, const UnitCell& cell) {
    const double L = cell.edge_length;
    Vec3 d = q - p;
    for (int k = 0; k < 3; ++k) {
        const double x = d[k] / L;
        // x - ceil(x - 1/2) lies in (-1/2, 1/2].
        d[k] = (x - std::ceil(x - 0.5)) * L;
    }
    return d;
}

Vec3 wrap_position(const Vec3& p, const UnitCell& cell) {
    const double L = cell.edge_length;
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
        double x = std::fmod(p[k], L);
        if (x < 0.0) x += L;
        if (x >= L) x = 0.0;
        out[k] = x;
    }
    return out;
}

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return a;
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

SegmentClosest closest_segment_segment(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    // Ericson, Real-Time Collision Detection, 5.1.9.
    constexpr double eps = 1e-300;
    const Vec3 d1 = a1 - a0;
    const Vec3 d2 = b1 - b0;
    const Vec3 r = a0 - b0;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);
    double s = 0.0;
    double t = 0.0;
    if (a <= eps && e <= eps) {
        s = t = 0.0;
    } else if (a <= eps) {
        s = 0.0;
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            t = 0.0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            // Parallel segments: any s works, pick 0 and let the clamps fix t.
            s = denom > 1e-14 * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    SegmentClosest out;
    out.s = s;
    out.t = t;
    out.p1 = a0 + s * d1;
    out.p2 = b0 + t * d2;
    return out;
}

std::vector<PairOverlap> overlapping_images(const Inclusion& a, const Inclusion& b, const UnitCell& cell,
                                            const WrapMask& wrap) {
    std::vector<PairOverlap> out;
    const double reach = bounding_radius(a) + bounding_radius(b);
    for_each_image(center_of(a), center_of(b), cell, wrap, reach, [&](const Vec3& d) {
        PairOverlap ov = overlap_at(a, b, d);
        if (ov.depth > 0.0) out.push_back(ov);
    });
    return out;
}

PairOverlap deepest_overlap(const Inclusion& a, const Inclusion& b, const UnitCell& cell,
                            const WrapMask& wrap) {
    const double reach = bounding_radius(a) + bounding_radius(b);
    std::optional<PairOverlap> best;
    for_each_image(center_of(a), center_of(b), cell, wrap, reach, [&](const Vec3& d) {
        PairOverlap ov = overlap_at(a, b, d);
        if (!best || ov.depth > best->depth) best = ov;
    });
    if (best) return *best;
    // Nothing within reach: report the minimum-image separation, which is negative depth.
    Vec3 d = center_of(b) - center_of(a);
    const Vec3 mi = min_image_delta(center_of(a), center_of(b), cell);
    for (int k = 0; k < 3; ++k) {
        if (wrap[k]) d[k] = mi[k];
    }
    return overlap_at(a, b, d);
}

ContactKind pair_kind(const Inclusion& a, const Inclusion& b) {
    const bool sa = is_sphere(a);
    const bool sb = is_sphere(b);
    if (sa && sb) return ContactKind::SphereSphere;
    if (sa || sb) return ContactKind::SphereCylinder;
    return ContactKind::CylinderCylinder;
}

std::optional<Contact> inclusion_contact(const Inclusion& a, const Inclusion& b, const UnitCell& cell,
                                         std::size_t id_a, std::size_t id_b) {
    const PairOverlap ov = deepest_overlap(a, b, cell);
    if (!(ov.depth > 0.0)) return std::nullopt;
    Contact c;
    c.kind = pair_kind(a, b);
    c.overlap_depth = ov.depth;
    c.first = id_a;
    c.second = id_b;
    c.point = wrap_position(center_of(a) + ov.point, cell);
    return c;
}

std::optional<Contact> sphere_sphere_contact(const Sphere& a, const Sphere& b, const UnitCell& cell) {
    return inclusion_contact(Inclusion{a}, Inclusion{b}, cell);
}

std::optional<Contact> sphere_cylinder_contact(const Sphere& s, const Cylinder& c, const UnitCell& cell) {
    return inclusion_contact(Inclusion{s}, Inclusion{c}, cell);
}

std::optional<Contact> cylinder_cylinder_contact(const Cylinder& a, const Cylinder& b,
                                                 const UnitCell& cell) {
    return inclusion_contact(Inclusion{a}, Inclusion{b}, cell);
}

std::optional<Contact> boundary_contact(const Inclusion& inc, Face face, const UnitCell& cell,
                                        std::size_t id) {
    const int k = face_axis(face);
    const bool high = face_is_high(face);
    const double L = cell.edge_length;
    const Core core = core_of(inc, center_of(inc));

    // Closest core point to the plane: the extreme endpoint along k.
    Vec3 closest;
    if (core.a[k] == core.b[k]) {
        closest = 0.5 * (core.a + core.b);
    } else if ((core.a[k] < core.b[k]) != high) {
        closest = core.a;
    } else {
        closest = core.b;
    }
    const double dist = high ? L - closest[k] : closest[k];
    const double depth = core.radius - dist;
    if (!(depth > 0.0)) return std::nullopt;

    Contact c;
    c.kind = ContactKind::InclusionBoundary;
    c.overlap_depth = depth;
    c.first = id;
    c.second = static_cast<std::size_t>(face);
    c.boundary_sphere = is_sphere(inc);
    c.point = closest;
    c.point[k] = high ? L : 0.0;
    return c;
}

bool contains_point(const Inclusion& inc, const Vec3& p, const UnitCell& cell) {
    const Vec3& c = center_of(inc);
    if (const auto* s = std::get_if<Sphere>(&inc)) {
        return min_image_delta(c, p, cell).squaredNorm() < s->radius * s->radius;
    }
    const auto& cyl = std::get<Cylinder>(inc);
    bool inside = false;
    for_each_image(c, p, cell, kWrapAll, bounding_radius(inc), [&](const Vec3& v) {
        if (inside) return;
        const double t = v.dot(cyl.axis);
        if (std::abs(t) > cyl.half_length) return;
        inside = (v - t * cyl.axis).squaredNorm() < cyl.radius * cyl.radius;
    });
    return inside;
}

Vec3 random_unit_vector(RandomStream& rng) {
    const double z = uniform(rng, -1.0, 1.0);
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

double analytic_fraction(const Sample& sample) {
    double v = 0.0;
    for (const auto& inc : sample.inclusions) v += shape_volume(inc);
    const double L = sample.cell.edge_length;
    return v / (L * L * L);
}

double analytic_fraction(const GenerationSpec& spec) {
    const double rs = spec.sphere_radius;
    const double rc = spec.cylinder_radius;
    const double vs = 4.0 / 3.0 * std::numbers::pi * rs * rs * rs;
    const double vc = std::numbers::pi * rc * rc * (spec.cylinder_aspect * rc);
    const double L = spec.edge_length;
    return (static_cast<double>(spec.n_spheres) * vs + static_cast<double>(spec.n_cylinders) * vc) /
           (L * L * L);
}

double volume_fraction_estimate(const Sample& sample, std::size_t n_probes, RandomStream& rng) {
    if (n_probes == 0) n_probes = 1;
    const double L = sample.cell.edge_length;
    if (sample.inclusions.empty()) {
        // Keep stream consumption independent of content.
        for (std::size_t i = 0; i < 3 * n_probes; ++i) (void)rng();
        return 0.0;
    }
    const CellList list = make_cell_list(sample.inclusions, sample.cell);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_probes; ++i) {
        const Vec3 p(uniform01(rng) * L, uniform01(rng) * L, uniform01(rng) * L);
        for (std::size_t id : list.at_point(p)) {
            if (contains_point(sample.inclusions[id], p, sample.cell)) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(n_probes);
}

}  // namespace stochhom
