#include "simbridge/geometry.hpp"

#include "simbridge/errors.hpp"

#include <string>

namespace simbridge {

void validate_mesh(const TriMesh& mesh) {
    const auto n = static_cast<std::uint32_t>(mesh.vertices.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (auto idx : tri) {
            if (idx >= n) {
                throw ValidationError("triangle " + std::to_string(t) + " references vertex " +
                                      std::to_string(idx) + " out of range (vertex count " +
                                      std::to_string(n) + ")");
            }
        }
        const double area =
            triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        if (!(area > 1e-12)) {
            throw ValidationError("triangle " + std::to_string(t) + " is degenerate (area " +
                                  std::to_string(area) + " m^2)");
        }
    }
}

} // namespace simbridge
