#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace simbridge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Rigid transform plus per-axis scale. Quaternion is (w,x,y,z), unit norm.
struct Transform {
    Vec3 position{0.0, 0.0, 0.0};
    Quat orientation{1.0, 0.0, 0.0, 0.0};
    Vec3 scale{1.0, 1.0, 1.0};

    Vec3 apply(const Vec3& p) const {
        return position + orientation * p.cwiseProduct(scale).eval();
    }
    bool has_uniform_scale(double tol = 1e-12) const {
        return std::abs(scale.x() - scale.y()) <= tol && std::abs(scale.x() - scale.z()) <= tol;
    }
};

struct Aabb {
    Vec3 min{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::max()};
    Vec3 max{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
             std::numeric_limits<double>::lowest()};

    void grow(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    bool overlaps(const Aabb& o) const {
        return (min.array() <= o.max.array()).all() && (o.min.array() <= max.array()).all();
    }
    Vec3 extent() const { return max - min; }
};

// Indexed triangle mesh. Indices are 0-based; OBJ I/O converts from 1-based.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    Aabb bounds() const {
        Aabb box;
        for (const auto& v : vertices) box.grow(v);
        return box;
    }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

// Checks index ranges and rejects triangles with area <= 1e-12 m^2.
// Throws ValidationError on the first violation.
void validate_mesh(const TriMesh& mesh);

} // namespace simbridge
