#pragma once

#include "simbridge/geometry.hpp"
#include "simbridge/heightfield.hpp"
#include "simbridge/scene.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace simbridge {

enum class GeomShape { Sphere, Box, ConvexMesh, HField };
enum class SensorKind { Imu, Force, Pose };
enum class ActuatorKind { Force, Position };
enum class ActuatorTarget { Joint, Body };
enum class JointType { Free, Hinge };

struct SpecGeom {
    GeomShape shape = GeomShape::Sphere;
    // Sphere: params[0] = radius. Box: params = half extents.
    Vec3 params{0.0, 0.0, 0.0};
    std::string asset; // mesh or hfield asset name for those shapes
    double friction = 0.5;
    double restitution = 0.0;
    Transform local; // pose within the body (scale unused)
};

struct SpecJoint {
    std::string name; // optional for free joints; hinge actuator targets need one
    JointType type = JointType::Free;
    Vec3 axis{0.0, 0.0, 1.0}; // hinge only
    Vec3 pos{0.0, 0.0, 0.0};  // hinge anchor in body frame
};

struct SpecBody {
    std::string id;
    std::string parent; // empty = world
    Mobility mobility = Mobility::Static;
    Transform transform; // relative to parent (world for root bodies)
    double mass = 0.0;
    Mat3 inertia = Mat3::Zero(); // about the CoM, body frame
    Vec3 com{0.0, 0.0, 0.0};     // centre of mass in body frame
    std::optional<SpecJoint> joint;
    std::vector<SpecGeom> geoms;
};

struct SpecSite {
    std::string id;
    std::string body;
    Transform local;
};

struct SpecSensor {
    std::string id;
    SensorKind kind = SensorKind::Pose;
    std::string site;
    // Declared sample rate in Hz (the `rate` XML extension); 0 means every
    // physics step. The runtime rounds to the nearest step divisor.
    double rate_hz = 0.0;
};

struct SpecActuator {
    std::string id;
    ActuatorTarget target_kind = ActuatorTarget::Body;
    std::string target; // joint name (body id) or body id
    ActuatorKind kind = ActuatorKind::Force;
};

// Mesh and heightfield assets referenced by geoms. `file` is the relative
// path used in emitted XML; the in-memory payload may be absent until
// loaded from disk.
struct MeshAsset {
    std::string name;
    std::string file;
    std::optional<TriMesh> mesh;
};
struct HFieldAsset {
    std::string name;
    std::string file;
    std::optional<HeightField> hfield;
};

// The compiled physics specification (the MjSpec analogue).
struct PhysicsSpec {
    std::string model = "scene";
    Vec3 gravity{0.0, 0.0, -9.81};
    std::vector<SpecBody> bodies;
    std::vector<SpecSite> sites;
    std::vector<SpecSensor> sensors;
    std::vector<SpecActuator> actuators;
    std::map<std::string, MeshAsset> meshes;
    std::map<std::string, HFieldAsset> hfields;

    const SpecBody* find_body(const std::string& id) const;
    const SpecSite* find_site(const std::string& id) const;
};

// Checks parent acyclicity, site/asset references, and dynamic-body mass;
// throws ValidationError naming the offender.
void validate_spec(const PhysicsSpec& spec);

enum class TopicDirection { Outbound, Inbound };
enum class PayloadKind : std::uint8_t {
    Subscribe = 0, // wire-level control frame, never bound to a spec topic
    Pose = 1,
    Imu = 2,
    Wrench = 3,
    JointCmd = 4,
    Raw = 5,
};

const char* to_string(SensorKind k);
const char* to_string(PayloadKind k);

struct TopicSpec {
    std::string name; // /sensors/<id> or /actuators/<id>
    TopicDirection direction = TopicDirection::Outbound;
    PayloadKind kind = PayloadKind::Raw;
};

// One outbound topic per sensor and one inbound per actuator, sorted by id.
std::vector<TopicSpec> derive_topics(const PhysicsSpec& spec);

// Semantic comparison used by the XML round-trip contract: same
// bodies/geoms/sites/sensors/actuators and asset references, transforms and
// scalars within `tol`. Returns a description of the first difference, or
// empty when equal.
std::string spec_diff(const PhysicsSpec& a, const PhysicsSpec& b, double tol = 1e-9);

} // namespace simbridge
