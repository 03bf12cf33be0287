#include "test_support.hpp"

#include "simbridge/heightfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace simbridge::testsupport {

namespace {

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool point_in_triangle(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                       const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    const double d1 = cross2(a, b, p);
    const double d2 = cross2(b, c, p);
    const double d3 = cross2(c, a, p);
    return d1 > 0.0 && d2 > 0.0 && d3 > 0.0;
}

// Ear clipping for a simple CCW polygon.
std::vector<std::array<int, 3>> triangulate(const std::vector<Eigen::Vector2d>& poly) {
    std::vector<int> ring(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) ring[i] = static_cast<int>(i);
    std::vector<std::array<int, 3>> tris;
    int guard = 0;
    while (ring.size() > 3 && guard++ < 10000) {
        bool clipped = false;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const int ia = ring[(i + ring.size() - 1) % ring.size()];
            const int ib = ring[i];
            const int ic = ring[(i + 1) % ring.size()];
            if (cross2(poly[ia], poly[ib], poly[ic]) <= 1e-12) continue; // reflex or flat
            bool contains_other = false;
            for (int other : ring) {
                if (other == ia || other == ib || other == ic) continue;
                if (point_in_triangle(poly[other], poly[ia], poly[ib], poly[ic])) {
                    contains_other = true;
                    break;
                }
            }
            if (contains_other) continue;
            tris.push_back({ia, ib, ic});
            ring.erase(ring.begin() + static_cast<long>(i));
            clipped = true;
            break;
        }
        if (!clipped) break; // degenerate input; caller's fixtures are well formed
    }
    if (ring.size() == 3) tris.push_back({ring[0], ring[1], ring[2]});
    return tris;
}

} // namespace

TriMesh extrude_polygon(const std::vector<Eigen::Vector2d>& outline, double height) {
    TriMesh mesh;
    const int n = static_cast<int>(outline.size());
    for (const auto& p : outline) mesh.vertices.emplace_back(p.x(), p.y(), 0.0);
    for (const auto& p : outline) mesh.vertices.emplace_back(p.x(), p.y(), height);

    const auto caps = triangulate(outline);
    for (const auto& t : caps) {
        // Bottom cap faces -z, top cap +z.
        mesh.triangles.push_back({static_cast<std::uint32_t>(t[0]), static_cast<std::uint32_t>(t[2]),
                                  static_cast<std::uint32_t>(t[1])});
        mesh.triangles.push_back({static_cast<std::uint32_t>(t[0] + n),
                                  static_cast<std::uint32_t>(t[1] + n),
                                  static_cast<std::uint32_t>(t[2] + n)});
    }
    for (int i = 0; i < n; ++i) {
        const auto a = static_cast<std::uint32_t>(i);
        const auto b = static_cast<std::uint32_t>((i + 1) % n);
        mesh.triangles.push_back({a, b, b + n});
        mesh.triangles.push_back({a, b + n, a + n});
    }
    return mesh;
}

TriMesh make_l_prism() {
    return extrude_polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, 1.0);
}

TriMesh make_c_channel(double d) {
    return extrude_polygon(
        {{0, 0}, {2, 0}, {2, 0.5}, {2 - d, 0.5}, {2 - d, 1.5}, {2, 1.5}, {2, 2}, {0, 2}}, 1.0);
}

TriMesh make_torus(double R, double r, int nmaj, int nmin) {
    TriMesh mesh;
    for (int i = 0; i < nmaj; ++i) {
        const double u = 2.0 * std::numbers::pi * i / nmaj;
        for (int j = 0; j < nmin; ++j) {
            const double v = 2.0 * std::numbers::pi * j / nmin;
            const double w = R + r * std::cos(v);
            mesh.vertices.emplace_back(w * std::cos(u), w * std::sin(u), r * std::sin(v));
        }
    }
    const auto vid = [&](int i, int j) {
        return static_cast<std::uint32_t>(((i % nmaj) * nmin) + (j % nmin));
    };
    for (int i = 0; i < nmaj; ++i) {
        for (int j = 0; j < nmin; ++j) {
            const auto a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d2 = vid(i, j + 1);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d2});
        }
    }
    return mesh;
}

TriMesh make_open_box() {
    TriMesh mesh;
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.emplace_back((i & 1) ? 1.0 : 0.0, (i & 2) ? 1.0 : 0.0, (i & 4) ? 1.0 : 0.0);
    }
    const std::array<std::array<std::uint32_t, 4>, 5> faces{{
        {0, 2, 3, 1}, // -z
        {0, 1, 5, 4}, // -y
        {2, 6, 7, 3}, // +y
        {0, 4, 6, 2}, // -x
        {1, 3, 7, 5}, // +x (top face +z omitted)
    }};
    for (const auto& f : faces) {
        mesh.triangles.push_back({f[0], f[1], f[2]});
        mesh.triangles.push_back({f[0], f[2], f[3]});
    }
    return mesh;
}

bool point_in_mesh(const TriMesh& mesh, const Vec3& p) {
    // Slightly irrational direction dodges edge and face-parallel hits.
    const Vec3 dir = Vec3(1.0, 1.2345678e-4, 2.3456789e-4).normalized();
    int crossings = 0;
    for (const auto& t : mesh.triangles) {
        const auto hit =
            ray_triangle(p, dir, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        if (hit && *hit > 0.0) ++crossings;
    }
    return (crossings % 2) == 1;
}

double voxel_volume(const TriMesh& mesh, int res) {
    const Aabb box = mesh.bounds();
    const Vec3 cell = box.extent() / static_cast<double>(res);
    const double cell_volume = cell.x() * cell.y() * cell.z();
    // Half-cell sample offsets never land on the fixtures' axis-aligned
    // face planes, so an exact +x scan is safe and keeps the parity exact.
    const Vec3 dir(1.0, 0.0, 0.0);

    // One column scan per (y, z): collect crossing distances, then classify
    // every x sample by crossing parity.
    long inside = 0;
    for (int k = 0; k < res; ++k) {
        for (int j = 0; j < res; ++j) {
            const Vec3 origin(box.min.x() - 1.0, box.min.y() + (j + 0.5) * cell.y(),
                              box.min.z() + (k + 0.5) * cell.z());
            std::vector<double> hits;
            for (const auto& t : mesh.triangles) {
                const auto hit = ray_triangle(origin, dir, mesh.vertices[t[0]],
                                              mesh.vertices[t[1]], mesh.vertices[t[2]]);
                if (hit) hits.push_back(*hit);
            }
            std::sort(hits.begin(), hits.end());
            for (int i = 0; i < res; ++i) {
                const double x = box.min.x() + (i + 0.5) * cell.x();
                const double dist = x - origin.x(); // dir is ~unit-x
                const auto below =
                    std::upper_bound(hits.begin(), hits.end(), dist) - hits.begin();
                if (below % 2 == 1) ++inside;
            }
        }
    }
    return static_cast<double>(inside) * cell_volume;
}

double voxel_union_volume(const std::vector<ConvexPart>& parts, const TriMesh& grid_source,
                          int res) {
    const Aabb box = grid_source.bounds();
    const Vec3 cell = box.extent() / static_cast<double>(res);
    const double cell_volume = cell.x() * cell.y() * cell.z();
    long inside = 0;
    for (int k = 0; k < res; ++k) {
        for (int j = 0; j < res; ++j) {
            for (int i = 0; i < res; ++i) {
                const Vec3 p(box.min.x() + (i + 0.5) * cell.x(), box.min.y() + (j + 0.5) * cell.y(),
                             box.min.z() + (k + 0.5) * cell.z());
                for (const auto& part : parts) {
                    if (part.contains(p, 1e-9)) {
                        ++inside;
                        break;
                    }
                }
            }
        }
    }
    return static_cast<double>(inside) * cell_volume;
}

} // namespace simbridge::testsupport
