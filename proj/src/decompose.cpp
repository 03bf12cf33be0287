#include "simbridge/decompose.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/mesh_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace simbridge {

namespace {

double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// Hull-vs-signed-volume concavity without the watertightness gate; clip
// children are only approximately closed where caps overfill.
std::optional<double> loose_concavity(const TriMesh& mesh) {
    if (mesh.vertices.size() < 4 || mesh.triangles.empty()) return std::nullopt;
    ConvexPart hull;
    try {
        hull = convex_hull(mesh.vertices);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
    const double hull_vol = hull.volume();
    if (hull_vol <= 0.0) return std::nullopt;
    return std::clamp((hull_vol - signed_volume(mesh)) / hull_vol, 0.0, 1.0);
}

struct ClipBuilder {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::map<std::uint32_t, std::uint32_t> kept; // source vertex -> local id

    std::uint32_t intern(const TriMesh& src, std::uint32_t source_id) {
        auto it = kept.find(source_id);
        if (it != kept.end()) return it->second;
        auto id = static_cast<std::uint32_t>(vertices.size());
        vertices.push_back(src.vertices[source_id]);
        kept.emplace(source_id, id);
        return id;
    }
    std::uint32_t add_point(const Vec3& p) {
        vertices.push_back(p);
        return static_cast<std::uint32_t>(vertices.size() - 1);
    }
};

} // namespace

std::pair<TriMesh, TriMesh> clip_mesh(const TriMesh& mesh, int axis, double offset) {
    // Intersection points are computed once per undirected edge so both
    // sides and all incident triangles share bit-identical cut vertices.
    std::map<std::pair<std::uint32_t, std::uint32_t>, Vec3> cuts;
    auto cut_point = [&](std::uint32_t a, std::uint32_t b) -> const Vec3& {
        auto key = std::minmax(a, b);
        auto it = cuts.find({key.first, key.second});
        if (it != cuts.end()) return it->second;
        const Vec3& pa = mesh.vertices[key.first];
        const Vec3& pb = mesh.vertices[key.second];
        const double t = (offset - pa[axis]) / (pb[axis] - pa[axis]);
        Vec3 p = pa + t * (pb - pa);
        p[axis] = offset;
        return cuts.emplace(std::make_pair(key.first, key.second), p).first->second;
    };

    ClipBuilder sides[2]; // 0 = below (<= offset), 1 = above (>= offset)
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> cut_ids[2];
    auto cut_id = [&](int side, std::uint32_t a, std::uint32_t b) {
        auto key = std::minmax(a, b);
        auto it = cut_ids[side].find({key.first, key.second});
        if (it != cut_ids[side].end()) return it->second;
        auto id = sides[side].add_point(cut_point(a, b));
        cut_ids[side].emplace(std::make_pair(key.first, key.second), id);
        return id;
    };

    for (const auto& tri : mesh.triangles) {
        for (int side = 0; side < 2; ++side) {
            const double sign = side == 0 ? 1.0 : -1.0;
            std::vector<std::uint32_t> poly;
            for (int e = 0; e < 3; ++e) {
                const std::uint32_t p = tri[e];
                const std::uint32_t q = tri[(e + 1) % 3];
                const double dp = sign * (mesh.vertices[p][axis] - offset);
                const double dq = sign * (mesh.vertices[q][axis] - offset);
                if (dp <= 0.0) poly.push_back(sides[side].intern(mesh, p));
                if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
                    poly.push_back(cut_id(side, p, q));
                }
            }
            for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
                if (poly[0] != poly[i] && poly[i] != poly[i + 1] && poly[0] != poly[i + 1]) {
                    sides[side].triangles.push_back({poly[0], poly[i], poly[i + 1]});
                }
            }
        }
    }

    // Cap each side with the convex hull of its on-plane vertices. Caps may
    // overfill a concave cross-section; parts only need to cover the mesh.
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
        std::vector<std::uint32_t> ring;
        for (std::uint32_t i = 0; i < sides[side].vertices.size(); ++i) {
            if (sides[side].vertices[i][axis] == offset) ring.push_back(i);
        }
        if (ring.size() < 3) continue;
        // Andrew monotone chain in the cut plane.
        std::sort(ring.begin(), ring.end(), [&](std::uint32_t a, std::uint32_t b) {
            const Vec3& pa = sides[side].vertices[a];
            const Vec3& pb = sides[side].vertices[b];
            if (pa[u] != pb[u]) return pa[u] < pb[u];
            if (pa[v] != pb[v]) return pa[v] < pb[v];
            return a < b;
        });
        ring.erase(std::unique(ring.begin(), ring.end(),
                               [&](std::uint32_t a, std::uint32_t b) {
                                   const Vec3& pa = sides[side].vertices[a];
                                   const Vec3& pb = sides[side].vertices[b];
                                   return pa[u] == pb[u] && pa[v] == pb[v];
                               }),
                   ring.end());
        if (ring.size() < 3) continue;
        auto cross2 = [&](std::uint32_t o, std::uint32_t a, std::uint32_t b) {
            const Vec3& po = sides[side].vertices[o];
            const Vec3& pa = sides[side].vertices[a];
            const Vec3& pb = sides[side].vertices[b];
            return (pa[u] - po[u]) * (pb[v] - po[v]) - (pa[v] - po[v]) * (pb[u] - po[u]);
        };
        std::vector<std::uint32_t> hull2(2 * ring.size());
        std::size_t k = 0;
        for (auto idx : ring) {
            while (k >= 2 && cross2(hull2[k - 2], hull2[k - 1], idx) <= 0.0) --k;
            hull2[k++] = idx;
        }
        const std::size_t lower = k + 1;
        for (auto it = ring.rbegin() + 1; it != ring.rend(); ++it) {
            while (k >= lower && cross2(hull2[k - 2], hull2[k - 1], *it) <= 0.0) --k;
            hull2[k++] = *it;
        }
        hull2.resize(k - 1); // CCW in (u, v)
        if (hull2.size() < 3) continue;
        // CCW in (u,v) has normal +axis; the below side caps with +axis
        // outward, the above side with -axis.
        for (std::size_t i = 1; i + 1 < hull2.size(); ++i) {
            if (side == 0) {
                sides[side].triangles.push_back({hull2[0], hull2[i], hull2[i + 1]});
            } else {
                sides[side].triangles.push_back({hull2[0], hull2[i + 1], hull2[i]});
            }
        }
    }

    TriMesh below{std::move(sides[0].vertices), std::move(sides[0].triangles)};
    TriMesh above{std::move(sides[1].vertices), std::move(sides[1].triangles)};
    return {std::move(below), std::move(above)};
}

namespace {

void decompose_rec(const TriMesh& mesh, const DecomposeParams& params, int depth,
                   DecomposeResult& out) {
    auto conc = loose_concavity(mesh);
    if (!conc) return; // degenerate sliver: nothing to cover
    ConvexPart hull = convex_hull(mesh.vertices);

    if (*conc <= params.threshold) {
        out.parts.push_back(std::move(hull));
        return;
    }
    if (depth >= params.max_depth) {
        out.parts.push_back(std::move(hull));
        out.depth_exhausted = true;
        return;
    }

    // 9 offsets per axis, uniform between the 10th and 90th percentile of
    // vertex coordinates; best cut = lowest sum of child hull concavities,
    // ties broken by lowest axis then lowest offset.
    struct Candidate {
        int axis;
        double offset;
        TriMesh below, above;
        double score;
    };
    std::optional<Candidate> best;
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> coords;
        coords.reserve(mesh.vertices.size());
        for (const auto& p : mesh.vertices) coords.push_back(p[axis]);
        const double p10 = percentile(coords, 0.1);
        const double p90 = percentile(coords, 0.9);
        if (!(p90 > p10)) continue;
        for (int k = 1; k <= 9; ++k) {
            const double offset = p10 + (p90 - p10) * static_cast<double>(k) / 10.0;
            auto [below, above] = clip_mesh(mesh, axis, offset);
            auto cb = loose_concavity(below);
            auto ca = loose_concavity(above);
            if (!cb || !ca) continue; // empty child: skip this plane
            const double score = *cb + *ca;
            if (!best || score < best->score) {
                best = Candidate{axis, offset, std::move(below), std::move(above), score};
            }
        }
    }

    if (!best) {
        // No usable cut; same contract as running out of depth.
        out.parts.push_back(std::move(hull));
        out.depth_exhausted = true;
        return;
    }
    decompose_rec(best->below, params, depth + 1, out);
    decompose_rec(best->above, params, depth + 1, out);
}

} // namespace

DecomposeResult decompose(const TriMesh& mesh, const DecomposeParams& params) {
    if (!(params.threshold > 0.0 && params.threshold <= 1.0)) {
        throw ValidationError("decompose threshold must be in (0,1]");
    }
    if (params.max_depth < 0) throw ValidationError("decompose max_depth must be >= 0");
    mesh_volume(mesh); // watertightness gate on the input
    DecomposeResult out;
    decompose_rec(mesh, params, 0, out);
    return out;
}

} // namespace simbridge
