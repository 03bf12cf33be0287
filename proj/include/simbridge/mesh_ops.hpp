#pragma once

#include "simbridge/geometry.hpp"

#include <utility>
#include <vector>

namespace simbridge {

// Divergence-theorem volume of a watertight, consistently oriented mesh
// (every edge shared by exactly two triangles). Positive for outward
// orientation. Throws ValidationError listing boundary edges otherwise.
double mesh_volume(const TriMesh& mesh);

// Signed volume with no watertightness check; used internally where capped
// clip results are only approximately closed.
double signed_volume(const TriMesh& mesh);

// Edges that are not shared by exactly two triangles. Empty iff watertight.
std::vector<std::pair<std::uint32_t, std::uint32_t>> boundary_edges(const TriMesh& mesh);

// (hull_volume - mesh_volume) / hull_volume, clamped to [0,1].
double concavity(const TriMesh& mesh);

// Mass properties of a closed mesh at uniform density 1: volume, centroid,
// inertia tensor about the centroid.
struct MassProperties {
    double volume = 0.0;
    Vec3 centroid{0.0, 0.0, 0.0};
    Mat3 inertia = Mat3::Zero();
};
MassProperties mass_properties(const TriMesh& mesh);

} // namespace simbridge
