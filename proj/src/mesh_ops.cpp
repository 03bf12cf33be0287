#include "simbridge/mesh_ops.hpp"

#include "simbridge/convex_hull.hpp"
#include "simbridge/errors.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace simbridge {

double signed_volume(const TriMesh& mesh) {
    double vol = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        vol += a.dot(b.cross(c));
    }
    return vol / 6.0;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> boundary_edges(const TriMesh& mesh) {
    // Counts directed edges; a watertight, consistently oriented mesh has
    // every undirected edge appear once in each direction.
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> count;
    for (const auto& t : mesh.triangles) {
        const std::array<std::pair<std::uint32_t, std::uint32_t>, 3> edges{
            {{t[0], t[1]}, {t[1], t[2]}, {t[2], t[0]}}};
        for (auto [a, b] : edges) {
            auto key = std::minmax(a, b);
            count[{key.first, key.second}] += (a < b) ? 1 : -1;
        }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bad;
    for (const auto& [edge, c] : count) {
        if (c != 0) bad.push_back(edge);
    }
    // Also catch edges used twice in the same direction (count 0 but 4 uses
    // never happens for manifold meshes; duplicated triangles cancel out in
    // the signed count, so track totals too).
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> total;
    for (const auto& t : mesh.triangles) {
        const std::array<std::pair<std::uint32_t, std::uint32_t>, 3> edges{
            {{t[0], t[1]}, {t[1], t[2]}, {t[2], t[0]}}};
        for (auto [a, b] : edges) {
            auto key = std::minmax(a, b);
            total[{key.first, key.second}] += 1;
        }
    }
    for (const auto& [edge, c] : total) {
        if (c != 2 && !std::count(bad.begin(), bad.end(), edge)) bad.push_back(edge);
    }
    std::sort(bad.begin(), bad.end());
    return bad;
}

double mesh_volume(const TriMesh& mesh) {
    validate_mesh(mesh);
    auto bad = boundary_edges(mesh);
    if (!bad.empty()) {
        std::string msg = "mesh is not watertight; boundary edges:";
        std::size_t shown = 0;
        for (const auto& [a, b] : bad) {
            msg += " (" + std::to_string(a) + "," + std::to_string(b) + ")";
            if (++shown == 16) {
                msg += " ... [" + std::to_string(bad.size()) + " total]";
                break;
            }
        }
        throw ValidationError(msg);
    }
    return signed_volume(mesh);
}

double concavity(const TriMesh& mesh) {
    const double mesh_vol = mesh_volume(mesh);
    const double hull_vol = convex_hull(mesh.vertices).volume();
    if (hull_vol <= 0.0) return 0.0;
    return std::clamp((hull_vol - mesh_vol) / hull_vol, 0.0, 1.0);
}

MassProperties mass_properties(const TriMesh& mesh) {
    // Covariance of the canonical tetrahedron, mapped through each
    // origin-rooted tetra and accumulated with signed volumes.
    Mat3 canonical;
    canonical << 1.0 / 60.0, 1.0 / 120.0, 1.0 / 120.0, //
        1.0 / 120.0, 1.0 / 60.0, 1.0 / 120.0,          //
        1.0 / 120.0, 1.0 / 120.0, 1.0 / 60.0;

    double volume = 0.0;
    Vec3 moment = Vec3::Zero();
    Mat3 covariance = Mat3::Zero();
    for (const auto& t : mesh.triangles) {
        Mat3 T;
        T.col(0) = mesh.vertices[t[0]];
        T.col(1) = mesh.vertices[t[1]];
        T.col(2) = mesh.vertices[t[2]];
        const double det = T.determinant(); // 6x signed tetra volume
        volume += det / 6.0;
        moment += det / 24.0 * (T.col(0) + T.col(1) + T.col(2));
        covariance += det * T * canonical * T.transpose();
    }

    MassProperties props;
    props.volume = volume;
    if (std::abs(volume) < 1e-30) return props;
    props.centroid = moment / volume;
    // Inertia about the origin at density 1, then shifted to the centroid.
    Mat3 inertia_origin = Mat3::Identity() * covariance.trace() - covariance;
    const Vec3& r = props.centroid;
    Mat3 shift = volume * (Mat3::Identity() * r.squaredNorm() - r * r.transpose());
    props.inertia = inertia_origin - shift;
    return props;
}

} // namespace simbridge
