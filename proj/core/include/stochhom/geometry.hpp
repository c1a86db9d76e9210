#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "stochhom/random.hpp"

namespace stochhom {

using Vec3 = Eigen::Vector3d;

/// Periodic cubic cell. All lengths are expressed in the same dimensionless unit
/// as edge_length (1 by default).
struct UnitCell {
    double edge_length = 1.0;
};

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
};

/// Finite cylinder of length 2*half_length along a unit axis.
struct Cylinder {
    Vec3 center = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();
    double half_length = 0.0;
    double radius = 0.0;

    [[nodiscard]] Vec3 end_a() const { return center - half_length * axis; }
    [[nodiscard]] Vec3 end_b() const { return center + half_length * axis; }
    [[nodiscard]] double aspect() const { return 2.0 * half_length / radius; }
};

using Inclusion = std::variant<Sphere, Cylinder>;

[[nodiscard]] inline bool is_sphere(const Inclusion& inc) { return std::holds_alternative<Sphere>(inc); }
[[nodiscard]] const Vec3& center_of(const Inclusion& inc);
[[nodiscard]] double radius_of(const Inclusion& inc);
/// Radius of the smallest ball around the center enclosing the inclusion's capsule.
[[nodiscard]] double bounding_radius(const Inclusion& inc);
/// Volume of the true shape (flat-capped for cylinders).
[[nodiscard]] double shape_volume(const Inclusion& inc);

enum class ContactKind : std::uint8_t {
    SphereSphere,
    SphereCylinder,
    CylinderCylinder,
    InclusionBoundary,
};

/// Cube faces: 2*axis + (0 for the low face at 0, 1 for the high face at L).
enum class Face : std::uint8_t { XLow = 0, XHigh, YLow, YHigh, ZLow, ZHigh };

[[nodiscard]] constexpr int face_axis(Face f) { return static_cast<int>(f) / 2; }
[[nodiscard]] constexpr bool face_is_high(Face f) { return static_cast<int>(f) % 2 == 1; }
[[nodiscard]] constexpr Face make_face(int axis, bool high) {
    return static_cast<Face>(2 * axis + (high ? 1 : 0));
}

struct Contact {
    ContactKind kind = ContactKind::SphereSphere;
    double overlap_depth = 0.0;
    /// Inclusion ids; for InclusionBoundary `second` is the face id.
    std::size_t first = 0;
    std::size_t second = 0;
    /// Set for boundary contacts: whether the inclusion is a sphere.
    bool boundary_sphere = false;
    /// Point of deepest contact. For boundary contacts it lies on the face plane.
    Vec3 point = Vec3::Zero();
};

/// Which lattice shifts are allowed when looking for periodic images. An axis
/// with wrap disabled only considers the zero shift along it.
using WrapMask = std::array<bool, 3>;
inline constexpr WrapMask kWrapAll{true, true, true};

/// Shortest periodic displacement q - p. Each component lies in (-L/2, L/2];
/// exact half-cell ties resolve to +L/2.
[[nodiscard]] Vec3 min_image_delta(const Vec3& p, const Vec3& q, const UnitCell& cell);

/// Wrap a point into [0, L)^3.
[[nodiscard]] Vec3 wrap_position(const Vec3& p, const UnitCell& cell);

struct SegmentClosest {
    double s = 0.0;  ///< parameter on the first segment, [0,1]
    double t = 0.0;  ///< parameter on the second segment, [0,1]
    Vec3 p1 = Vec3::Zero();
    Vec3 p2 = Vec3::Zero();
    [[nodiscard]] double distance() const { return (p2 - p1).norm(); }
};

/// Closest points between segments [a0,a1] and [b0,b1].
[[nodiscard]] SegmentClosest closest_segment_segment(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                                     const Vec3& b1);
[[nodiscard]] Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

/// Pairwise overlap geometry for one periodic image.
struct PairOverlap {
    double depth = 0.0;     ///< r_a + r_b - d, may be negative
    Vec3 normal = Vec3::UnitX();  ///< unit vector from a's closest point toward b's
    Vec3 point = Vec3::Zero();    ///< midpoint of the closest points, in a's frame
    bool degenerate = false;      ///< closest points coincide, normal is arbitrary
};

/// Overlap of every periodic image of b against a that has positive depth.
[[nodiscard]] std::vector<PairOverlap> overlapping_images(const Inclusion& a, const Inclusion& b,
                                                          const UnitCell& cell,
                                                          const WrapMask& wrap = kWrapAll);
/// Deepest image overlap (may be non-positive), considering every allowed image.
[[nodiscard]] PairOverlap deepest_overlap(const Inclusion& a, const Inclusion& b, const UnitCell& cell,
                                          const WrapMask& wrap = kWrapAll);

[[nodiscard]] std::optional<Contact> sphere_sphere_contact(const Sphere& a, const Sphere& b,
                                                           const UnitCell& cell);
[[nodiscard]] std::optional<Contact> sphere_cylinder_contact(const Sphere& s, const Cylinder& c,
                                                             const UnitCell& cell);
[[nodiscard]] std::optional<Contact> cylinder_cylinder_contact(const Cylinder& a, const Cylinder& b,
                                                               const UnitCell& cell);
/// Dispatches on the two shapes. Ids are copied into the returned contact.
[[nodiscard]] std::optional<Contact> inclusion_contact(const Inclusion& a, const Inclusion& b,
                                                       const UnitCell& cell, std::size_t id_a = 0,
                                                       std::size_t id_b = 1);

[[nodiscard]] ContactKind pair_kind(const Inclusion& a, const Inclusion& b);

/// Penetration of an inclusion past a face plane, no periodic wrapping.
/// The contact point is the closest axis point projected onto the face.
[[nodiscard]] std::optional<Contact> boundary_contact(const Inclusion& inc, Face face,
                                                      const UnitCell& cell, std::size_t id = 0);

/// Exact point membership, periodic. Cylinders are flat-capped here.
[[nodiscard]] bool contains_point(const Inclusion& inc, const Vec3& p, const UnitCell& cell);

/// Uniform direction on the unit sphere (area-preserving z/phi map).
[[nodiscard]] Vec3 random_unit_vector(RandomStream& rng);

}  // namespace stochhom
