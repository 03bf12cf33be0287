#pragma once

#include "simbridge/convex_hull.hpp"
#include "simbridge/geometry.hpp"

#include <vector>

namespace simbridge {

struct DecomposeParams {
    double threshold = 0.05; // concavity at or below this stops recursion
    int max_depth = 6;
};

struct DecomposeResult {
    std::vector<ConvexPart> parts;
    // Set when recursion depth ran out while concavity was still above the
    // threshold; the parts returned are the hulls at the cut frontier.
    bool depth_exhausted = false;
};

// Recursive axis-aligned-cut approximate convex decomposition.
//
// If concavity(mesh) <= threshold the result is the single convex hull.
// Otherwise the mesh is clipped by the axis-aligned plane minimizing the sum
// of the two children's hull concavities, chosen among 9 uniform offsets per
// axis between the 10th and 90th percentile of vertex coordinates (ties
// broken by lowest axis, then lowest offset), and both children recurse.
// Cross-sections are capped with the hull of the intersection polygon, so
// parts may overfill concave cuts; the union always covers the input.
DecomposeResult decompose(const TriMesh& mesh, const DecomposeParams& params = {});

// Clips `mesh` against the plane axis = offset. Returns the two capped
// halves (below, above); either may be empty if the plane misses the mesh.
std::pair<TriMesh, TriMesh> clip_mesh(const TriMesh& mesh, int axis, double offset);

} // namespace simbridge
