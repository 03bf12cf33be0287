#pragma once

#include "simbridge/decompose.hpp"
#include "simbridge/mesh_cache.hpp"
#include "simbridge/physics_spec.hpp"
#include "simbridge/scene.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace simbridge {

// Collision assets produced ahead of build_spec: convex parts per actor id
// (Simple -> one hull, Complex -> decomposition) and one heightfield per
// landscape id.
struct ProcessedAssets {
    std::map<std::string, std::vector<ConvexPart>> actor_parts;
    std::map<std::string, HeightField> landscape_fields;
};

struct ProcessOptions {
    DecomposeParams decompose;
    MeshCache* cache = nullptr;       // optional content-hash cache
    int heightfield_workers = 0;      // 0 = hardware concurrency
    int heightfield_resolution = 0;   // > 0 overrides per-region resolution
};

// Runs the mesh pipeline over every actor and landscape of the scene.
// Mesh-backed actors get their transform scale baked into vertices;
// primitives require uniform scale.
ProcessedAssets process_scene(const SceneDescription& scene, const ProcessOptions& options = {});

// Builds the spec from a processed scene: one body per actor, convex-mesh
// geoms for decomposed parts, heightfield geoms on static bodies, dynamic
// inertia from the convex parts at uniform density scaled to the mass.
PhysicsSpec build_spec(const SceneDescription& scene, const ProcessedAssets& assets);

// Merges a robot fragment into the spec: ids prefixed with "<robot>/",
// root bodies re-rooted at the spawn transform, sensors and actuators
// carried over. `base_dir` anchors the robot's spec_path.
void merge_robot(PhysicsSpec& spec, const RobotPawn& robot, const std::filesystem::path& base_dir);
void merge_robot_fragment(PhysicsSpec& spec, const PhysicsSpec& fragment, const std::string& robot_id,
                          const Transform& spawn);

// Primitive tessellations used for heightfield clutter scans.
TriMesh make_box_mesh(const Vec3& half_extents);
TriMesh make_uv_sphere(double radius, int segments = 16, int rings = 8);

// Full pipeline: load -> decompose/hull -> heightfields -> build_spec ->
// merge robots. The result still references in-memory assets; emit with
// write_compile_output to get the on-disk layout.
PhysicsSpec compile_scene(const SceneDescription& scene, const ProcessOptions& options = {});

// Writes out_dir/scene.xml plus out_dir/assets/*.obj and hfield binaries.
struct CompileOutput {
    std::filesystem::path scene_xml;
    std::vector<std::filesystem::path> asset_files;
};
CompileOutput write_compile_output(const PhysicsSpec& spec, const std::filesystem::path& out_dir);

} // namespace simbridge
