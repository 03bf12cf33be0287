#pragma once

#include "simbridge/convex_hull.hpp"
#include "simbridge/geometry.hpp"

#include <vector>

namespace simbridge::testsupport {

// Watertight prism: a simple CCW polygon in the xy plane extruded over
// z in [0, height]. Caps are ear-clipped so concave outlines work.
TriMesh extrude_polygon(const std::vector<Eigen::Vector2d>& outline, double height);

// L cross-section covering 3 of the 4 unit quadrants of its 2x2 bounding
// square, unit depth: volume 3, hull volume 4, concavity 0.25.
TriMesh make_l_prism();

// C cross-section: 2x2 outer square with a notch of depth `d` (0 < d < 2)
// cut into the +x side, extruded to unit depth.
TriMesh make_c_channel(double notch_depth);

// Torus around the z axis.
TriMesh make_torus(double major_radius, double minor_radius, int major_segments,
                   int minor_segments);

// Open unit cube (one face removed): the canonical non-watertight fixture.
TriMesh make_open_box();

// Parity ray-cast pointwise oracle; independent of the hull/volume code
// under test.
bool point_in_mesh(const TriMesh& mesh, const Vec3& p);

// Voxel-volume oracle at `res`^3 over the mesh bounds, column scans along x.
double voxel_volume(const TriMesh& mesh, int res);

// Voxel volume of the union of convex parts, sampled on the reference
// mesh's voxel grid.
double voxel_union_volume(const std::vector<ConvexPart>& parts, const TriMesh& grid_source,
                          int res);

} // namespace simbridge::testsupport
