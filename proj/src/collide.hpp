#pragma once

#include "simbridge/geometry.hpp"
#include "simbridge/heightfield.hpp"

#include <optional>
#include <span>
#include <vector>

namespace simbridge::collide {

// One narrowphase result in world coordinates. The normal points from
// shape A to shape B; penetration is >= 0 (margin contacts carry 0).
struct ContactPoint {
    Vec3 point;
    Vec3 normal;
    double penetration = 0.0;
};

// Closest point on a triangle to p.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Exact point-vs-convex-polytope query over the hull triangles.
// distance > 0: p outside, `closest` on the surface.
// distance <= 0: p inside; `closest` is the projection onto the nearest
// face plane and `normal` that face's outward normal.
struct PointQuery {
    double distance = 0.0;
    Vec3 closest;
    Vec3 normal;
};
PointQuery point_vs_convex(const Vec3& p, std::span<const Vec3> verts,
                           std::span<const std::array<std::uint32_t, 3>> tris);

// GJK distance between two convex point clouds. Returns separation > 0 with
// witness points, or overlap = true.
struct GjkResult {
    bool overlap = false;
    double distance = 0.0;
    Vec3 witness_a;
    Vec3 witness_b;
};
GjkResult gjk_distance(std::span<const Vec3> a, std::span<const Vec3> b);

// EPA penetration depth and direction for overlapping hulls. The polytope
// is capped at 64 faces; ties resolve to the lowest face index. Normal
// points from A into B.
struct EpaResult {
    Vec3 normal;
    double depth = 0.0;
    Vec3 point; // representative contact point
};
std::optional<EpaResult> epa_penetration(std::span<const Vec3> a, std::span<const Vec3> b);

// Sphere-vs-convex and convex-vs-convex wrappers used by the stepper.
std::optional<ContactPoint> sphere_vs_convex(const Vec3& center, double radius,
                                             std::span<const Vec3> verts,
                                             std::span<const std::array<std::uint32_t, 3>> tris,
                                             double margin);
std::optional<ContactPoint> convex_vs_convex(std::span<const Vec3> a, std::span<const Vec3> b);

// Deepest-vertex height test against a heightfield placed at `offset`.
// `points` are candidate deepest vertices in world space. The normal is the
// terrain surface normal (toward +z).
std::optional<ContactPoint> points_vs_heightfield(std::span<const Vec3> points,
                                                  const HeightField& field, const Vec3& offset,
                                                  double margin);

} // namespace simbridge::collide
