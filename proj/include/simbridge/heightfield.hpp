#pragma once

#include "simbridge/geometry.hpp"
#include "simbridge/scene.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace simbridge {

// Regular elevation grid. Samples are corner-aligned: sample (i,j) sits at
// origin + (i*dx, j*dy). Storage is row-major by y: heights[j*nx + i].
struct HeightField {
    int nx = 0;
    int ny = 0;
    Eigen::Vector2d origin{0.0, 0.0};
    double dx = 0.0;
    double dy = 0.0;
    double base = 0.0; // height assigned on ray miss (bbox bottom)
    std::vector<double> heights;

    double at(int i, int j) const { return heights[static_cast<std::size_t>(j) * nx + i]; }
    double& at(int i, int j) { return heights[static_cast<std::size_t>(j) * nx + i]; }

    // Surface height under (x,y) using the two-triangle split of each cell;
    // absent outside the grid.
    std::optional<double> height_at(double x, double y) const;
    // Outward (upward) surface normal of the triangle under (x,y).
    std::optional<Vec3> normal_at(double x, double y) const;
};

// Moeller-Trumbore with barycentric tolerance 1e-9. Returns the nearest
// non-negative hit distance; degenerate triangles never hit.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c);

struct SampleOptions {
    int workers = 0; // 0 = hardware concurrency
    bool warn_empty = true;
};

// Casts one downward ray per grid node from the bbox top. Height is the
// topmost hit inside the bbox, else the bbox bottom. The result is
// bit-identical for any worker count (rows own disjoint output cells).
HeightField sample_heightfield(const LandscapeRegion& region, const TriMesh& mesh,
                               const SampleOptions& options = {});

// hfield.bin: "HFLD" magic, u32 nx, u32 ny, f64 origin x/y, f64 dx/dy,
// f64 base, then nx*ny f64 heights row-major by y, all little-endian.
std::vector<std::uint8_t> heightfield_to_bytes(const HeightField& hf);
HeightField heightfield_from_bytes(const std::vector<std::uint8_t>& bytes);
void save_heightfield(const HeightField& hf, const std::filesystem::path& path);
HeightField load_heightfield(const std::filesystem::path& path);

} // namespace simbridge
