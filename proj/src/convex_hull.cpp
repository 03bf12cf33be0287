#include "simbridge/convex_hull.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/mesh_ops.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace simbridge {

namespace {

struct Face {
    std::array<std::uint32_t, 3> v;
    Vec3 normal;
    double offset; // plane: normal . x = offset
    std::vector<std::uint32_t> outside;
    bool alive = true;
};

double signed_dist(const Face& f, const Vec3& p) { return f.normal.dot(p) - f.offset; }

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

Face make_face(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::span<const Vec3> pts,
               const Vec3& interior) {
    Face f;
    f.v = {a, b, c};
    Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    double len = n.norm();
    if (len > 0.0) n /= len;
    f.normal = n;
    f.offset = n.dot(pts[a]);
    if (signed_dist(f, interior) > 0.0) {
        std::swap(f.v[1], f.v[2]);
        f.normal = -f.normal;
        f.offset = -f.offset;
    }
    return f;
}

} // namespace

ConvexPart convex_hull(std::span<const Vec3> points) {
    const std::size_t n = points.size();
    if (n < 4) throw ValidationError("convex hull needs at least 4 points, got " + std::to_string(n));

    Aabb box;
    for (const auto& p : points) box.grow(p);
    const double diag = box.extent().norm();
    const double eps = 1e-10 * std::max(1.0, diag);

    // Initial simplex: the two most distant bbox-extreme points, the point
    // farthest from their line, then the point farthest from that plane.
    std::uint32_t i0 = 0, i1 = 0;
    {
        double best = -1.0;
        std::array<std::uint32_t, 6> extremes{};
        for (int axis = 0; axis < 3; ++axis) {
            std::uint32_t lo = 0, hi = 0;
            for (std::uint32_t i = 1; i < n; ++i) {
                if (points[i][axis] < points[lo][axis]) lo = i;
                if (points[i][axis] > points[hi][axis]) hi = i;
            }
            extremes[2 * axis] = lo;
            extremes[2 * axis + 1] = hi;
        }
        for (auto a : extremes) {
            for (auto b : extremes) {
                double d = (points[a] - points[b]).squaredNorm();
                if (d > best) {
                    best = d;
                    i0 = a;
                    i1 = b;
                }
            }
        }
        if (std::sqrt(std::max(best, 0.0)) <= eps) {
            throw ValidationError("degenerate input: all points coincide");
        }
    }
    std::uint32_t i2 = 0;
    {
        double best = -1.0;
        const Vec3 dir = (points[i1] - points[i0]).normalized();
        for (std::uint32_t i = 0; i < n; ++i) {
            const Vec3 rel = points[i] - points[i0];
            double d = (rel - rel.dot(dir) * dir).squaredNorm();
            if (d > best) {
                best = d;
                i2 = i;
            }
        }
        if (std::sqrt(std::max(best, 0.0)) <= eps) {
            throw ValidationError("degenerate input: points are collinear");
        }
    }
    std::uint32_t i3 = 0;
    {
        double best = -1.0;
        const Vec3 nrm =
            (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
        for (std::uint32_t i = 0; i < n; ++i) {
            double d = std::abs(nrm.dot(points[i] - points[i0]));
            if (d > best) {
                best = d;
                i3 = i;
            }
        }
        if (best <= eps) throw ValidationError("degenerate input: points are coplanar");
    }

    const Vec3 interior =
        0.25 * (points[i0] + points[i1] + points[i2] + points[i3]);

    std::vector<Face> faces;
    faces.push_back(make_face(i0, i1, i2, points, interior));
    faces.push_back(make_face(i0, i1, i3, points, interior));
    faces.push_back(make_face(i0, i2, i3, points, interior));
    faces.push_back(make_face(i1, i2, i3, points, interior));

    // Conflict lists: each point goes to the first face it is outside of.
    for (std::uint32_t i = 0; i < n; ++i) {
        if (i == i0 || i == i1 || i == i2 || i == i3) continue;
        for (auto& f : faces) {
            if (signed_dist(f, points[i]) > eps) {
                f.outside.push_back(i);
                break;
            }
        }
    }

    for (std::size_t guard = 0; guard <= n; ++guard) {
        // Lowest-index face with pending points keeps the result
        // independent of evaluation order.
        std::size_t fi = faces.size();
        for (std::size_t i = 0; i < faces.size(); ++i) {
            if (faces[i].alive && !faces[i].outside.empty()) {
                fi = i;
                break;
            }
        }
        if (fi == faces.size()) break;

        // Farthest outside point (ties by lowest point index).
        std::uint32_t apex = faces[fi].outside[0];
        double best = -1.0;
        for (auto pi : faces[fi].outside) {
            double d = signed_dist(faces[fi], points[pi]);
            if (d > best || (d == best && pi < apex)) {
                best = d;
                apex = pi;
            }
        }
        const Vec3& p = points[apex];

        // Flood-fill the visible region from fi across shared edges.
        std::unordered_map<std::uint64_t, std::uint32_t> edge_owner;
        for (std::uint32_t i = 0; i < faces.size(); ++i) {
            if (!faces[i].alive) continue;
            const auto& v = faces[i].v;
            edge_owner[edge_key(v[0], v[1])] = i;
            edge_owner[edge_key(v[1], v[2])] = i;
            edge_owner[edge_key(v[2], v[0])] = i;
        }
        std::vector<std::uint32_t> visible;
        std::vector<char> seen(faces.size(), 0);
        std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(fi)};
        seen[fi] = 1;
        while (!stack.empty()) {
            std::uint32_t cur = stack.back();
            stack.pop_back();
            visible.push_back(cur);
            const auto& v = faces[cur].v;
            const std::array<std::pair<std::uint32_t, std::uint32_t>, 3> edges{
                {{v[0], v[1]}, {v[1], v[2]}, {v[2], v[0]}}};
            for (auto [a, b] : edges) {
                auto it = edge_owner.find(edge_key(b, a));
                if (it == edge_owner.end()) continue;
                std::uint32_t nb = it->second;
                if (!seen[nb] && signed_dist(faces[nb], p) > eps) {
                    seen[nb] = 1;
                    stack.push_back(nb);
                }
            }
        }

        // Horizon: directed edges of visible faces whose twin is hidden.
        std::vector<std::pair<std::uint32_t, std::uint32_t>> horizon;
        for (auto vi : visible) {
            const auto& v = faces[vi].v;
            const std::array<std::pair<std::uint32_t, std::uint32_t>, 3> edges{
                {{v[0], v[1]}, {v[1], v[2]}, {v[2], v[0]}}};
            for (auto [a, b] : edges) {
                auto it = edge_owner.find(edge_key(b, a));
                if (it == edge_owner.end() || !seen[it->second]) horizon.emplace_back(a, b);
            }
        }

        std::vector<std::uint32_t> orphans;
        for (auto vi : visible) {
            faces[vi].alive = false;
            for (auto pi : faces[vi].outside) {
                if (pi != apex) orphans.push_back(pi);
            }
            faces[vi].outside.clear();
        }

        std::vector<std::uint32_t> fresh;
        for (auto [a, b] : horizon) {
            fresh.push_back(static_cast<std::uint32_t>(faces.size()));
            faces.push_back(make_face(a, b, apex, points, interior));
        }
        for (auto pi : orphans) {
            for (auto ni : fresh) {
                if (signed_dist(faces[ni], points[pi]) > eps) {
                    faces[ni].outside.push_back(pi);
                    break;
                }
            }
        }
    }

    // Compact to the used vertex set, preserving input order.
    std::vector<std::uint32_t> used;
    for (const auto& f : faces) {
        if (!f.alive) continue;
        used.insert(used.end(), f.v.begin(), f.v.end());
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());

    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    ConvexPart part;
    part.mesh.vertices.reserve(used.size());
    for (auto idx : used) {
        remap[idx] = static_cast<std::uint32_t>(part.mesh.vertices.size());
        part.mesh.vertices.push_back(points[idx]);
    }
    for (const auto& f : faces) {
        if (!f.alive) continue;
        part.mesh.triangles.push_back({remap[f.v[0]], remap[f.v[1]], remap[f.v[2]]});
    }
    return part;
}

double ConvexPart::volume() const { return signed_volume(mesh); }

Vec3 ConvexPart::centroid() const {
    // Volume-weighted sum of tetrahedron centroids about the origin.
    double vol = 0.0;
    Vec3 acc = Vec3::Zero();
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        double v = a.dot(b.cross(c)) / 6.0;
        vol += v;
        acc += v * (a + b + c) / 4.0;
    }
    if (std::abs(vol) < 1e-30) return Vec3::Zero();
    return acc / vol;
}

bool ConvexPart::contains(const Vec3& p, double tol) const {
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        Vec3 n = (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
        double len = n.norm();
        if (len <= 0.0) continue;
        n /= len;
        if (n.dot(p - a) > tol) return false;
    }
    return true;
}

bool is_convex_part(const TriMesh& mesh, double tol) {
    if (mesh.vertices.size() < 4) return false;
    ConvexPart hull;
    try {
        hull = convex_hull(mesh.vertices);
    } catch (const ValidationError&) {
        return false;
    }
    // Every vertex must sit on the hull boundary: its distance to the
    // nearest face plane may not exceed tol.
    for (const auto& v : mesh.vertices) {
        double nearest = std::numeric_limits<double>::max();
        for (const auto& t : hull.mesh.triangles) {
            const Vec3& a = hull.mesh.vertices[t[0]];
            Vec3 n = (hull.mesh.vertices[t[1]] - a).cross(hull.mesh.vertices[t[2]] - a);
            double len = n.norm();
            if (len <= 0.0) continue;
            n /= len;
            nearest = std::min(nearest, std::abs(n.dot(v - a)));
        }
        if (nearest > tol) return false;
    }
    return true;
}

} // namespace simbridge
