#pragma once

#include "simbridge/geometry.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace simbridge {

enum class Mobility { Static, Dynamic };
enum class Complexity { Simple, Complex };

const char* to_string(Mobility m);
const char* to_string(Complexity c);

struct SphereShape {
    double radius = 0.0;
};
struct BoxShape {
    Vec3 half_extents{0.0, 0.0, 0.0};
};

// Either a path to an OBJ asset or an analytic primitive.
using MeshRef = std::variant<std::filesystem::path, SphereShape, BoxShape>;

struct PhysicsComponent {
    Complexity complexity = Complexity::Simple;
    std::optional<Mobility> mobility_override;
    double mass = 1.0;        // kg, required > 0 for dynamic actors
    double friction = 0.5;    // >= 0
    double restitution = 0.0; // in [0,1]
};

struct SceneActor {
    std::string id;
    Transform transform;
    MeshRef mesh_ref;
    PhysicsComponent physics;
    Mobility native_mobility = Mobility::Static;
    bool include_in_heightfield = false;
};

struct LandscapeRegion {
    std::string id;
    std::filesystem::path mesh_ref;
    Aabb bbox;
    int nx = 2;
    int ny = 2;
};

struct RobotPawn {
    std::string id;
    std::filesystem::path spec_path;
    Transform spawn;
};

struct SceneDescription {
    std::vector<SceneActor> actors;
    std::vector<LandscapeRegion> landscapes;
    std::vector<RobotPawn> robots;
    Vec3 gravity{0.0, 0.0, -9.81};
    // Directory mesh/robot references resolve against; set by load_scene,
    // never serialized.
    std::filesystem::path base_dir;
};

// Override wins when present, otherwise the actor's native setting.
Mobility resolve_mobility(const SceneActor& actor);

// Loads and validates a scene JSON file. Mesh references are resolved
// relative to the scene file's directory and must exist.
SceneDescription load_scene(const std::filesystem::path& path);

// Parses scene JSON from a string; `base_dir` anchors relative mesh refs.
SceneDescription parse_scene(const std::string& text, const std::filesystem::path& base_dir);

std::string scene_to_json(const SceneDescription& scene);
void save_scene(const SceneDescription& scene, const std::filesystem::path& path);

} // namespace simbridge
