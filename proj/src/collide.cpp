#include "collide.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace simbridge::collide {

namespace {

constexpr double kEps = 1e-12;

Vec3 support_of(std::span<const Vec3> verts, const Vec3& dir, std::size_t* index = nullptr) {
    std::size_t best = 0;
    double best_dot = verts[0].dot(dir);
    for (std::size_t i = 1; i < verts.size(); ++i) {
        const double d = verts[i].dot(dir);
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    if (index) *index = best;
    return verts[best];
}

struct MinkVert {
    Vec3 m; // a - b
    Vec3 a;
    Vec3 b;
};

MinkVert mink_support(std::span<const Vec3> a, std::span<const Vec3> b, const Vec3& dir) {
    const Vec3 pa = support_of(a, dir);
    const Vec3 pb = support_of(b, -dir);
    return {pa - pb, pa, pb};
}

// Closest point to the origin on a simplex of 1..4 Minkowski vertices;
// shrinks the simplex to the supporting sub-simplex and fills barycentric
// weights.
Vec3 closest_on_simplex(std::vector<MinkVert>& simplex, std::vector<double>& weights) {
    const auto seg_closest = [](const Vec3& a, const Vec3& b, double& t) {
        const Vec3 ab = b - a;
        const double denom = ab.squaredNorm();
        t = denom > kEps ? std::clamp(-a.dot(ab) / denom, 0.0, 1.0) : 0.0;
        return (a + t * ab).eval();
    };

    if (simplex.size() == 1) {
        weights = {1.0};
        return simplex[0].m;
    }
    if (simplex.size() == 2) {
        double t = 0.0;
        const Vec3 p = seg_closest(simplex[0].m, simplex[1].m, t);
        if (t <= 0.0) {
            simplex = {simplex[0]};
            weights = {1.0};
        } else if (t >= 1.0) {
            simplex = {simplex[1]};
            weights = {1.0};
        } else {
            weights = {1.0 - t, t};
        }
        return p;
    }

    // Triangle and tetrahedron: try every sub-simplex, keep the closest
    // valid projection.
    double best = std::numeric_limits<double>::max();
    std::vector<MinkVert> best_simplex;
    std::vector<double> best_weights;
    Vec3 best_point = Vec3::Zero();

    const auto consider = [&](std::vector<MinkVert> sub, std::vector<double> w, const Vec3& p) {
        const double d = p.squaredNorm();
        if (d < best - kEps) {
            best = d;
            best_simplex = std::move(sub);
            best_weights = std::move(w);
            best_point = p;
        }
    };

    const std::size_t n = simplex.size();
    for (std::size_t i = 0; i < n; ++i) consider({simplex[i]}, {1.0}, simplex[i].m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double t = 0.0;
            const Vec3 p = seg_closest(simplex[i].m, simplex[j].m, t);
            if (t > 0.0 && t < 1.0) consider({simplex[i], simplex[j]}, {1.0 - t, t}, p);
        }
    }
    const auto tri_consider = [&](std::size_t i, std::size_t j, std::size_t k) {
        const Vec3& a = simplex[i].m;
        const Vec3& b = simplex[j].m;
        const Vec3& c = simplex[k].m;
        const Vec3 ab = b - a, ac = c - a;
        Vec3 nrm = ab.cross(ac);
        const double nn = nrm.squaredNorm();
        if (nn < kEps) return;
        const Vec3 p = a - (a.dot(nrm) / nn) * nrm; // project origin onto plane
        // Barycentrics of p in (a,b,c).
        const Vec3 v0 = ab, v1 = ac, v2 = p - a;
        const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
        const double d20 = v2.dot(v0), d21 = v2.dot(v1);
        const double denom = d00 * d11 - d01 * d01;
        if (std::abs(denom) < kEps) return;
        const double v = (d11 * d20 - d01 * d21) / denom;
        const double w = (d00 * d21 - d01 * d20) / denom;
        const double u = 1.0 - v - w;
        if (u > 0.0 && v > 0.0 && w > 0.0) {
            consider({simplex[i], simplex[j], simplex[k]}, {u, v, w}, p);
        }
    };
    if (n >= 3) {
        tri_consider(0, 1, 2);
        if (n == 4) {
            tri_consider(0, 1, 3);
            tri_consider(0, 2, 3);
            tri_consider(1, 2, 3);
        }
    }
    if (n == 4) {
        // Origin inside the tetrahedron?
        const Vec3& a = simplex[0].m;
        const Vec3& b = simplex[1].m;
        const Vec3& c = simplex[2].m;
        const Vec3& d = simplex[3].m;
        Eigen::Matrix3d T;
        T.col(0) = b - a;
        T.col(1) = c - a;
        T.col(2) = d - a;
        if (std::abs(T.determinant()) > kEps) {
            const Vec3 lambda = T.inverse() * (-a);
            const double u = 1.0 - lambda.sum();
            if (lambda.minCoeff() > 0.0 && u > 0.0) {
                weights = {u, lambda.x(), lambda.y(), lambda.z()};
                return Vec3::Zero();
            }
        }
    }

    simplex = std::move(best_simplex);
    weights = std::move(best_weights);
    return best_point;
}

} // namespace

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection 5.1.5.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    }
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

PointQuery point_vs_convex(const Vec3& p, std::span<const Vec3> verts,
                           std::span<const std::array<std::uint32_t, 3>> tris) {
    PointQuery q;
    bool inside = true;
    double worst_plane = -std::numeric_limits<double>::max();
    Vec3 worst_normal = Vec3::UnitZ();
    double best_surface = std::numeric_limits<double>::max();
    Vec3 best_point = Vec3::Zero();

    for (const auto& t : tris) {
        const Vec3& a = verts[t[0]];
        const Vec3& b = verts[t[1]];
        const Vec3& c = verts[t[2]];
        Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        if (len <= kEps) continue;
        n /= len;
        const double d = n.dot(p - a);
        if (d > 0.0) inside = false;
        if (d > worst_plane) {
            worst_plane = d;
            worst_normal = n;
        }
        const Vec3 cp = closest_on_triangle(p, a, b, c);
        const double surf = (p - cp).norm();
        if (surf < best_surface) {
            best_surface = surf;
            best_point = cp;
        }
    }

    if (inside) {
        q.distance = worst_plane; // <= 0
        q.normal = worst_normal;
        q.closest = p - worst_plane * worst_normal;
    } else {
        q.distance = best_surface;
        q.closest = best_point;
        q.normal = best_surface > kEps ? ((p - best_point) / best_surface).eval()
                                       : worst_normal;
    }
    return q;
}

GjkResult gjk_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
    GjkResult out;
    std::vector<MinkVert> simplex{mink_support(a, b, Vec3(1.0, 0.0, 0.0))};
    std::vector<double> weights{1.0};
    Vec3 v = simplex[0].m;

    for (int iter = 0; iter < 64; ++iter) {
        const double vlen2 = v.squaredNorm();
        if (vlen2 < 1e-18) {
            out.overlap = true;
            return out;
        }
        const MinkVert w = mink_support(a, b, -v);
        // No progress toward the origin: v is the separation vector.
        if (vlen2 - v.dot(w.m) <= 1e-12 * vlen2 + 1e-18) break;
        simplex.push_back(w);
        v = closest_on_simplex(simplex, weights);
        if (simplex.size() == 4 && v.squaredNorm() < 1e-18) {
            out.overlap = true;
            return out;
        }
    }

    out.distance = v.norm();
    out.witness_a = Vec3::Zero();
    out.witness_b = Vec3::Zero();
    for (std::size_t i = 0; i < simplex.size(); ++i) {
        out.witness_a += weights[i] * simplex[i].a;
        out.witness_b += weights[i] * simplex[i].b;
    }
    if (out.distance < 1e-9) out.overlap = true;
    return out;
}

namespace {

struct EpaFace {
    std::array<int, 3> v;
    Vec3 normal;
    double dist = 0.0; // distance of the face plane from the origin
    bool alive = true;
};

bool build_face(EpaFace& f, const std::vector<MinkVert>& verts) {
    const Vec3& a = verts[f.v[0]].m;
    const Vec3& b = verts[f.v[1]].m;
    const Vec3& c = verts[f.v[2]].m;
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len < 1e-14) return false;
    n /= len;
    double d = n.dot(a);
    if (d < 0.0) { // orient outward from the origin
        std::swap(f.v[1], f.v[2]);
        n = -n;
        d = -d;
    }
    f.normal = n;
    f.dist = d;
    return true;
}

} // namespace

std::optional<EpaResult> epa_penetration(std::span<const Vec3> a, std::span<const Vec3> b) {
    // Seed polytope: supports along the axes, deduplicated.
    std::vector<MinkVert> verts;
    const std::array<Vec3, 6> dirs{Vec3(1, 0, 0),  Vec3(-1, 0, 0), Vec3(0, 1, 0),
                                   Vec3(0, -1, 0), Vec3(0, 0, 1),  Vec3(0, 0, -1)};
    for (const auto& d : dirs) {
        const MinkVert w = mink_support(a, b, d);
        bool dup = false;
        for (const auto& v : verts) {
            if ((v.m - w.m).squaredNorm() < 1e-20) dup = true;
        }
        if (!dup) verts.push_back(w);
    }
    if (verts.size() < 4) return std::nullopt; // flat Minkowski difference

    // Initial hull: first 4 affinely independent vertices.
    int i3 = -1;
    Eigen::Matrix3d T;
    for (std::size_t i = 3; i < verts.size(); ++i) {
        T.col(0) = verts[1].m - verts[0].m;
        T.col(1) = verts[2].m - verts[0].m;
        T.col(2) = verts[i].m - verts[0].m;
        if (std::abs(T.determinant()) > 1e-18) {
            i3 = static_cast<int>(i);
            break;
        }
    }
    if (i3 < 0) return std::nullopt;

    std::vector<MinkVert> poly{verts[0], verts[1], verts[2], verts[static_cast<std::size_t>(i3)]};
    std::vector<EpaFace> faces(4);
    faces[0].v = {0, 1, 2};
    faces[1].v = {0, 1, 3};
    faces[2].v = {0, 2, 3};
    faces[3].v = {1, 2, 3};
    for (auto& f : faces) {
        if (!build_face(f, poly)) return std::nullopt;
    }

    for (int iter = 0; iter < 64; ++iter) {
        // Closest alive face (ties go to the lowest index).
        int best = -1;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            if (!faces[i].alive) continue;
            if (best < 0 || faces[i].dist < faces[static_cast<std::size_t>(best)].dist) {
                best = static_cast<int>(i);
            }
        }
        if (best < 0) return std::nullopt;
        EpaFace& face = faces[static_cast<std::size_t>(best)];
        const MinkVert w = mink_support(a, b, face.normal);
        const double growth = face.normal.dot(w.m) - face.dist;
        std::size_t alive_count = 0;
        for (const auto& f : faces) alive_count += f.alive ? 1 : 0;
        if (growth < 1e-9 || alive_count >= 64) {
            EpaResult out;
            out.normal = face.normal;
            out.depth = face.dist;
            // Project the origin onto the face and mix the witnesses.
            const Vec3& pa0 = poly[static_cast<std::size_t>(face.v[0])].m;
            const Vec3& pa1 = poly[static_cast<std::size_t>(face.v[1])].m;
            const Vec3& pa2 = poly[static_cast<std::size_t>(face.v[2])].m;
            const Vec3 p = face.dist * face.normal;
            const Vec3 v0 = pa1 - pa0, v1 = pa2 - pa0, v2 = p - pa0;
            const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
            const double d20 = v2.dot(v0), d21 = v2.dot(v1);
            const double denom = d00 * d11 - d01 * d01;
            double bv = 0.0, bw = 0.0;
            if (std::abs(denom) > kEps) {
                bv = (d11 * d20 - d01 * d21) / denom;
                bw = (d00 * d21 - d01 * d20) / denom;
            }
            const double bu = 1.0 - bv - bw;
            const Vec3 wa = bu * poly[static_cast<std::size_t>(face.v[0])].a +
                            bv * poly[static_cast<std::size_t>(face.v[1])].a +
                            bw * poly[static_cast<std::size_t>(face.v[2])].a;
            const Vec3 wb = bu * poly[static_cast<std::size_t>(face.v[0])].b +
                            bv * poly[static_cast<std::size_t>(face.v[1])].b +
                            bw * poly[static_cast<std::size_t>(face.v[2])].b;
            out.point = 0.5 * (wa + wb);
            return out;
        }

        // Expand: remove faces visible from w, stitch the horizon.
        const int wi = static_cast<int>(poly.size());
        poly.push_back(w);
        std::vector<std::pair<int, int>> horizon;
        for (auto& f : faces) {
            if (!f.alive) continue;
            if (f.normal.dot(w.m) > f.dist + 1e-12) {
                f.alive = false;
                const std::array<std::pair<int, int>, 3> edges{
                    {{f.v[0], f.v[1]}, {f.v[1], f.v[2]}, {f.v[2], f.v[0]}}};
                for (auto e : edges) {
                    auto twin = std::find(horizon.begin(), horizon.end(),
                                          std::make_pair(e.second, e.first));
                    if (twin != horizon.end()) {
                        horizon.erase(twin);
                    } else {
                        horizon.push_back(e);
                    }
                }
            }
        }
        if (horizon.empty()) return std::nullopt;
        for (auto [ea, eb] : horizon) {
            EpaFace nf;
            nf.v = {ea, eb, wi};
            if (!build_face(nf, poly)) continue;
            faces.push_back(nf);
        }
    }
    return std::nullopt;
}

std::optional<ContactPoint> sphere_vs_convex(const Vec3& center, double radius,
                                             std::span<const Vec3> verts,
                                             std::span<const std::array<std::uint32_t, 3>> tris,
                                             double margin) {
    const PointQuery q = point_vs_convex(center, verts, tris);
    if (q.distance > radius + margin) return std::nullopt;
    // Normal points from the hull toward the sphere in both branches: for an
    // interior centre it is the nearest face's outward normal.
    ContactPoint c;
    c.normal = q.normal;
    c.penetration = std::max(0.0, radius - q.distance);
    c.point = q.closest;
    return c;
}

std::optional<ContactPoint> convex_vs_convex(std::span<const Vec3> a, std::span<const Vec3> b) {
    const GjkResult g = gjk_distance(a, b);
    if (!g.overlap) {
        if (g.distance > 1e-4) return std::nullopt; // margin for resting contacts
        ContactPoint c;
        c.normal = (g.witness_b - g.witness_a).normalized();
        c.penetration = 0.0;
        c.point = 0.5 * (g.witness_a + g.witness_b);
        return c;
    }
    const auto epa = epa_penetration(a, b);
    if (!epa) return std::nullopt;
    ContactPoint c;
    c.normal = epa->normal;
    c.penetration = epa->depth;
    c.point = epa->point;
    return c;
}

std::optional<ContactPoint> points_vs_heightfield(std::span<const Vec3> points,
                                                  const HeightField& field, const Vec3& offset,
                                                  double margin) {
    std::optional<ContactPoint> best;
    double deepest = -margin;
    for (const auto& p : points) {
        const auto h = field.height_at(p.x() - offset.x(), p.y() - offset.y());
        if (!h) continue;
        const double depth = (*h + offset.z()) - p.z();
        if (depth > deepest) {
            deepest = depth;
            ContactPoint c;
            c.point = Vec3(p.x(), p.y(), *h + offset.z());
            c.normal = field.normal_at(p.x() - offset.x(), p.y() - offset.y())
                           .value_or(Vec3(0.0, 0.0, 1.0));
            c.penetration = std::max(0.0, depth);
            best = c;
        }
    }
    return best;
}

} // namespace simbridge::collide
