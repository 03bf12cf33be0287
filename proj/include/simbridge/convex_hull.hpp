#pragma once

#include "simbridge/geometry.hpp"

#include <span>

namespace simbridge {

// A triangle mesh restricted to a convex polytope: outward-oriented faces,
// every vertex on the hull.
struct ConvexPart {
    TriMesh mesh;
    Vec3 centroid() const;
    double volume() const;
    // True when every vertex of `m` lies within `tol` of this part's
    // half-space intersection.
    bool contains(const Vec3& p, double tol = 1e-9) const;
};

// 3-D quickhull. Requires >= 4 points spanning a non-degenerate volume;
// throws ValidationError for coplanar/collinear input. Output faces are
// outward-oriented and vertices are exactly the extreme points of the set.
ConvexPart convex_hull(std::span<const Vec3> points);

// Convexity check used by the decomposition invariants: every vertex within
// `tol` of the part's own hull.
bool is_convex_part(const TriMesh& mesh, double tol = 1e-6);

} // namespace simbridge
