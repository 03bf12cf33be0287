#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "simbridge/convex_hull.hpp"
#include "simbridge/decompose.hpp"
#include "simbridge/errors.hpp"
#include "simbridge/mesh_cache.hpp"
#include "simbridge/mesh_ops.hpp"
#include "simbridge/obj_io.hpp"
#include "simbridge/spec_compiler.hpp"
#include "support/test_support.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace simbridge;
namespace ts = simbridge::testsupport;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("simbridge_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::set<std::array<long, 3>> vertex_keys(const TriMesh& m) {
    std::set<std::array<long, 3>> keys;
    for (const auto& v : m.vertices) {
        keys.insert({std::lround(v.x() * 1e9), std::lround(v.y() * 1e9), std::lround(v.z() * 1e9)});
    }
    return keys;
}

} // namespace

TEST_CASE("parse_obj: minimal triangle") {
    TriMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    CHECK(m.vertices.size() == 3);
    CHECK(m.triangles.size() == 1);
    CHECK(m.triangles[0] == std::array<std::uint32_t, 3>{0, 1, 2});
}

TEST_CASE("parse_obj: quad face fans into two triangles") {
    TriMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    REQUIRE(m.triangles.size() == 2);
    CHECK(m.triangles[0] == std::array<std::uint32_t, 3>{0, 1, 2});
    CHECK(m.triangles[1] == std::array<std::uint32_t, 3>{0, 2, 3});
}

TEST_CASE("parse_obj: out-of-range index names the line") {
    try {
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("parse_obj: malformed record carries a line number") {
    CHECK_THROWS_AS(parse_obj("v 0 0 0\nvx 1 2 3\n"), ParseError);
    CHECK_THROWS_AS(parse_obj("v 0 0\n"), ParseError);
}

TEST_CASE("obj round-trip is exact") {
    TriMesh m = ts::make_torus(1.0, 0.3, 8, 6);
    const std::string text = write_obj(m);
    TriMesh back = parse_obj(text);
    REQUIRE(back.vertices.size() == m.vertices.size());
    REQUIRE(back.triangles.size() == m.triangles.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        CHECK(back.vertices[i] == m.vertices[i]); // bit-exact through %.17g
    }
    CHECK(write_obj(back) == text); // deterministic bytes
}

TEST_CASE("convex_hull: interior point of a cube is dropped") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) {
        pts.emplace_back((i & 1) ? 1.0 : 0.0, (i & 2) ? 1.0 : 0.0, (i & 4) ? 1.0 : 0.0);
    }
    pts.emplace_back(0.5, 0.5, 0.5);
    ConvexPart hull = convex_hull(pts);
    CHECK(hull.mesh.vertices.size() == 8);
    CHECK(hull.volume() == doctest::Approx(1.0));
}

TEST_CASE("convex_hull: tetrahedron is already convex") {
    std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    ConvexPart hull = convex_hull(pts);
    CHECK(hull.mesh.vertices.size() == 4);
    CHECK(hull.mesh.triangles.size() == 4);
    CHECK(hull.volume() == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("convex_hull: containment over random points in the unit ball") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> pts;
    while (pts.size() < 1000) {
        Vec3 p(u(rng), u(rng), u(rng));
        if (p.norm() <= 1.0) pts.push_back(p);
    }
    ConvexPart hull = convex_hull(pts);
    for (const auto& p : pts) {
        CHECK(hull.contains(p, 1e-9));
    }
    CHECK(hull.volume() < 4.0 / 3.0 * std::numbers::pi + 1e-9);
    CHECK(hull.volume() > 0.0);
}

TEST_CASE("convex_hull: degenerate input is rejected") {
    std::vector<Vec3> collinear{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    CHECK_THROWS_AS(convex_hull(collinear), ValidationError);
    std::vector<Vec3> coplanar{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0}};
    CHECK_THROWS_AS(convex_hull(coplanar), ValidationError);
    std::vector<Vec3> few{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK_THROWS_AS(convex_hull(few), ValidationError);
}

TEST_CASE("convex_hull: idempotence on random clouds") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int round = 0; round < 10; ++round) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 60; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
        ConvexPart hull = convex_hull(pts);
        ConvexPart again = convex_hull(hull.mesh.vertices);
        CHECK(vertex_keys(hull.mesh) == vertex_keys(again.mesh));
    }
}

TEST_CASE("mesh_volume: unit cube and unit tetrahedron") {
    CHECK(mesh_volume(make_box_mesh({0.5, 0.5, 0.5})) == doctest::Approx(1.0));
    std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    CHECK(mesh_volume(convex_hull(pts).mesh) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("mesh_volume: open mesh reports boundary edges") {
    try {
        mesh_volume(ts::make_open_box());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("boundary edges") != std::string::npos);
    }
}

TEST_CASE("concavity: convex meshes score zero") {
    CHECK(concavity(make_box_mesh({1, 2, 3})) == doctest::Approx(0.0));
    CHECK(concavity(make_uv_sphere(1.0)) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("concavity: L-prism scores 0.25 analytically") {
    CHECK(concavity(ts::make_l_prism()) == doctest::Approx(0.25));
}

TEST_CASE("concavity: deeper C-channels are more concave, voxel cross-check") {
    double previous = 0.0;
    for (double depth : {0.4, 0.8, 1.2, 1.6}) {
        TriMesh channel = ts::make_c_channel(depth);
        const double c = concavity(channel);
        CHECK(c > 0.0);
        CHECK(c < 1.0);
        CHECK(c > previous);
        previous = c;

        // Volume-ratio concavity against the voxel oracle.
        const double vox = ts::voxel_volume(channel, 64);
        const double hull = convex_hull(channel.vertices).volume();
        CHECK(c == doctest::Approx((hull - vox) / hull).epsilon(0.02));
    }
}

TEST_CASE("mass_properties: cube inertia matches the analytic value") {
    TriMesh cube = make_box_mesh({0.5, 0.5, 0.5});
    MassProperties props = mass_properties(cube);
    CHECK(props.volume == doctest::Approx(1.0));
    CHECK(props.centroid.norm() == doctest::Approx(0.0).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) {
        CHECK(props.inertia(i, i) == doctest::Approx(1.0 / 6.0));
    }
}

TEST_CASE("decompose: a convex box is a single part") {
    DecomposeResult result = decompose(make_box_mesh({1, 1, 1}), {0.05, 6});
    CHECK(result.parts.size() == 1);
    CHECK_FALSE(result.depth_exhausted);
    CHECK(result.parts[0].volume() == doctest::Approx(8.0));
}

TEST_CASE("decompose: L-prism splits and conserves volume") {
    TriMesh prism = ts::make_l_prism();
    DecomposeResult result = decompose(prism, {0.05, 6});
    CHECK(result.parts.size() >= 2);
    const double mesh_vox = ts::voxel_volume(prism, 64);
    const double union_vox = ts::voxel_union_volume(result.parts, prism, 64);
    CHECK(std::abs(union_vox - mesh_vox) / mesh_vox <= 0.05);
    double hull_sum = 0.0;
    for (const auto& p : result.parts) hull_sum += p.volume();
    CHECK(hull_sum >= mesh_volume(prism) - 1e-9);
}

TEST_CASE("decompose: torus parts are convex and bounded by 2^depth") {
    TriMesh torus = ts::make_torus(1.0, 0.35, 24, 12);
    DecomposeResult result = decompose(torus, {0.05, 6});
    CHECK(result.parts.size() <= 64);
    for (const auto& part : result.parts) {
        CHECK(is_convex_part(part.mesh, 1e-6));
    }
}

TEST_CASE("decompose: zero depth returns the hull with a warning flag") {
    DecomposeResult result = decompose(ts::make_l_prism(), {0.05, 0});
    CHECK(result.parts.size() == 1);
    CHECK(result.depth_exhausted);
}

TEST_CASE("decompose: identical runs are deterministic") {
    TriMesh torus = ts::make_torus(1.0, 0.35, 16, 8);
    DecomposeResult a = decompose(torus, {0.08, 5});
    DecomposeResult b = decompose(torus, {0.08, 5});
    REQUIRE(a.parts.size() == b.parts.size());
    for (std::size_t i = 0; i < a.parts.size(); ++i) {
        CHECK(write_obj(a.parts[i].mesh) == write_obj(b.parts[i].mesh));
    }
}

TEST_CASE("cache: put then get returns byte-identical parts") {
    MeshCache cache(temp_dir("cache_rt"));
    TriMesh prism = ts::make_l_prism();
    DecomposeParams params{0.05, 6};
    DecomposeResult result = decompose(prism, params);
    const CacheKey key = cache_key(prism, params);
    cache.put(key, result.parts, params, mesh_content_hash(prism));
    auto hit = cache.get(key);
    REQUIRE(hit.has_value());
    REQUIRE(hit->size() == result.parts.size());
    for (std::size_t i = 0; i < hit->size(); ++i) {
        CHECK(write_obj((*hit)[i].mesh) == write_obj(result.parts[i].mesh));
    }
}

TEST_CASE("cache: unknown key misses") {
    MeshCache cache(temp_dir("cache_miss"));
    CacheKey key;
    key.bytes.fill(0xab);
    CHECK_FALSE(cache.get(key).has_value());
}

TEST_CASE("cache: parameters are part of the key") {
    TriMesh prism = ts::make_l_prism();
    const CacheKey a = cache_key(prism, {0.05, 6});
    const CacheKey b = cache_key(prism, {0.10, 6});
    const CacheKey c = cache_key(prism, {0.05, 5});
    CHECK(a.hex() != b.hex());
    CHECK(a.hex() != c.hex());
    CHECK(a.hex() == cache_key(prism, {0.05, 6}).hex());
}

TEST_CASE("cache: warm hits skip recomputation; corrupt entries read as misses") {
    MeshCache cache(temp_dir("cache_warm"));
    TriMesh prism = ts::make_l_prism();
    DecomposeParams params{0.05, 6};
    cache.decompose_cached(prism, params);
    CHECK(cache.recompute_count() == 1);
    cache.decompose_cached(prism, params);
    CHECK(cache.recompute_count() == 1); // warm

    // Corrupt the stored meta: the entry must degrade to a miss.
    const auto dir = cache.root() / cache_key(prism, params).hex();
    std::ofstream(dir / "meta.json") << "{ not json";
    cache.decompose_cached(prism, params);
    CHECK(cache.recompute_count() == 2);
}
