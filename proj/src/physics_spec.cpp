#include "simbridge/physics_spec.hpp"

#include "simbridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace simbridge {

const char* to_string(Mobility m) { return m == Mobility::Static ? "Static" : "Dynamic"; }
const char* to_string(Complexity c) { return c == Complexity::Simple ? "Simple" : "Complex"; }

const char* to_string(SensorKind k) {
    switch (k) {
    case SensorKind::Imu: return "imu";
    case SensorKind::Force: return "force";
    case SensorKind::Pose: return "pose";
    }
    return "?";
}

const char* to_string(PayloadKind k) {
    switch (k) {
    case PayloadKind::Subscribe: return "Subscribe";
    case PayloadKind::Pose: return "Pose";
    case PayloadKind::Imu: return "Imu";
    case PayloadKind::Wrench: return "Wrench";
    case PayloadKind::JointCmd: return "JointCmd";
    case PayloadKind::Raw: return "Raw";
    }
    return "?";
}

const SpecBody* PhysicsSpec::find_body(const std::string& id) const {
    for (const auto& b : bodies) {
        if (b.id == id) return &b;
    }
    return nullptr;
}

const SpecSite* PhysicsSpec::find_site(const std::string& id) const {
    for (const auto& s : sites) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

void validate_spec(const PhysicsSpec& spec) {
    std::set<std::string> body_ids;
    for (const auto& b : spec.bodies) {
        if (!body_ids.insert(b.id).second) throw ValidationError("duplicate body id '" + b.id + "'");
    }
    // Parent references resolve and contain no cycles.
    for (const auto& b : spec.bodies) {
        std::set<std::string> seen{b.id};
        const SpecBody* cur = &b;
        while (!cur->parent.empty()) {
            const SpecBody* p = spec.find_body(cur->parent);
            if (!p) {
                throw ValidationError("body '" + cur->id + "' references missing parent '" +
                                      cur->parent + "'");
            }
            if (!seen.insert(p->id).second) {
                throw ValidationError("body parent cycle through '" + p->id + "'");
            }
            cur = p;
        }
    }
    for (const auto& b : spec.bodies) {
        if (b.joint && b.joint->type == JointType::Free && !(b.mass > 0.0)) {
            throw ValidationError("dynamic body '" + b.id + "' needs mass > 0");
        }
        for (const auto& g : b.geoms) {
            if (g.shape == GeomShape::ConvexMesh && !spec.meshes.count(g.asset)) {
                throw ValidationError("body '" + b.id + "' references missing mesh asset '" +
                                      g.asset + "'");
            }
            if (g.shape == GeomShape::HField && !spec.hfields.count(g.asset)) {
                throw ValidationError("body '" + b.id + "' references missing hfield asset '" +
                                      g.asset + "'");
            }
            if (!(g.restitution >= 0.0 && g.restitution <= 1.0)) {
                throw ValidationError("geom restitution out of [0,1] on body '" + b.id + "'");
            }
        }
    }
    std::set<std::string> site_ids;
    for (const auto& s : spec.sites) {
        if (!site_ids.insert(s.id).second) throw ValidationError("duplicate site id '" + s.id + "'");
        if (!spec.find_body(s.body)) {
            throw ValidationError("site '" + s.id + "' references missing body '" + s.body + "'");
        }
    }
    std::set<std::string> wired;
    for (const auto& s : spec.sensors) {
        if (!wired.insert(s.id).second) throw ValidationError("duplicate sensor id '" + s.id + "'");
        if (!site_ids.count(s.site)) {
            throw ValidationError("sensor '" + s.id + "' references missing site '" + s.site + "'");
        }
        if (s.rate_hz < 0.0) {
            throw ValidationError("sensor '" + s.id + "' has negative rate");
        }
    }
    std::set<std::string> joint_names;
    for (const auto& b : spec.bodies) {
        if (b.joint && !b.joint->name.empty()) joint_names.insert(b.joint->name);
    }
    wired.clear();
    for (const auto& a : spec.actuators) {
        if (!wired.insert(a.id).second) {
            throw ValidationError("duplicate actuator id '" + a.id + "'");
        }
        if (a.target_kind == ActuatorTarget::Body && !spec.find_body(a.target)) {
            throw ValidationError("actuator '" + a.id + "' references missing body '" + a.target +
                                  "'");
        }
        if (a.target_kind == ActuatorTarget::Joint && !joint_names.count(a.target)) {
            throw ValidationError("actuator '" + a.id + "' references missing joint '" + a.target +
                                  "'");
        }
    }
}

std::vector<TopicSpec> derive_topics(const PhysicsSpec& spec) {
    std::vector<TopicSpec> topics;
    std::vector<const SpecSensor*> sensors;
    for (const auto& s : spec.sensors) sensors.push_back(&s);
    std::sort(sensors.begin(), sensors.end(),
              [](const SpecSensor* a, const SpecSensor* b) { return a->id < b->id; });
    for (const auto* s : sensors) {
        PayloadKind kind = PayloadKind::Pose;
        if (s->kind == SensorKind::Imu) kind = PayloadKind::Imu;
        if (s->kind == SensorKind::Force) kind = PayloadKind::Wrench;
        topics.push_back({"/sensors/" + s->id, TopicDirection::Outbound, kind});
    }
    std::vector<const SpecActuator*> actuators;
    for (const auto& a : spec.actuators) actuators.push_back(&a);
    std::sort(actuators.begin(), actuators.end(),
              [](const SpecActuator* a, const SpecActuator* b) { return a->id < b->id; });
    for (const auto* a : actuators) {
        const PayloadKind kind = a->target_kind == ActuatorTarget::Body ? PayloadKind::Wrench
                                                                        : PayloadKind::JointCmd;
        topics.push_back({"/actuators/" + a->id, TopicDirection::Inbound, kind});
    }
    return topics;
}

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool near(const Vec3& a, const Vec3& b, double tol) { return (a - b).cwiseAbs().maxCoeff() <= tol; }

bool near_quat(const Quat& a, const Quat& b, double tol) {
    // q and -q are the same rotation.
    const double direct = std::max({std::abs(a.w() - b.w()), std::abs(a.x() - b.x()),
                                    std::abs(a.y() - b.y()), std::abs(a.z() - b.z())});
    const double flipped = std::max({std::abs(a.w() + b.w()), std::abs(a.x() + b.x()),
                                     std::abs(a.y() + b.y()), std::abs(a.z() + b.z())});
    return std::min(direct, flipped) <= tol;
}

bool near_tf(const Transform& a, const Transform& b, double tol) {
    return near(a.position, b.position, tol) && near_quat(a.orientation, b.orientation, tol) &&
           near(a.scale, b.scale, tol);
}

} // namespace

std::string spec_diff(const PhysicsSpec& a, const PhysicsSpec& b, double tol) {
    std::ostringstream why;
    if (!near(a.gravity, b.gravity, tol)) return "gravity differs";
    if (a.bodies.size() != b.bodies.size()) {
        why << "body count " << a.bodies.size() << " vs " << b.bodies.size();
        return why.str();
    }
    auto body_of = [](const PhysicsSpec& s, const std::string& id) { return s.find_body(id); };
    for (const auto& ba : a.bodies) {
        const SpecBody* bb = body_of(b, ba.id);
        if (!bb) return "missing body '" + ba.id + "'";
        if (ba.parent != bb->parent) return "body '" + ba.id + "' parent differs";
        if (ba.mobility != bb->mobility) return "body '" + ba.id + "' mobility differs";
        if (!near_tf(ba.transform, bb->transform, tol)) {
            return "body '" + ba.id + "' transform differs";
        }
        if (ba.mobility == Mobility::Dynamic) {
            if (!near(ba.mass, bb->mass, tol * std::max(1.0, std::abs(ba.mass)))) {
                return "body '" + ba.id + "' mass differs";
            }
            if ((ba.inertia - bb->inertia).cwiseAbs().maxCoeff() >
                tol * std::max(1.0, ba.inertia.cwiseAbs().maxCoeff())) {
                return "body '" + ba.id + "' inertia differs";
            }
            if (!near(ba.com, bb->com, tol)) return "body '" + ba.id + "' com differs";
        }
        const bool ja = ba.joint.has_value(), jb = bb->joint.has_value();
        if (ja != jb) return "body '" + ba.id + "' joint presence differs";
        if (ja) {
            if (ba.joint->type != bb->joint->type) return "body '" + ba.id + "' joint type differs";
            if (ba.joint->name != bb->joint->name) return "body '" + ba.id + "' joint name differs";
            if (ba.joint->type == JointType::Hinge &&
                (!near(ba.joint->axis, bb->joint->axis, tol) ||
                 !near(ba.joint->pos, bb->joint->pos, tol))) {
                return "body '" + ba.id + "' hinge differs";
            }
        }
        if (ba.geoms.size() != bb->geoms.size()) return "body '" + ba.id + "' geom count differs";
        for (std::size_t i = 0; i < ba.geoms.size(); ++i) {
            const auto& ga = ba.geoms[i];
            const auto& gb = bb->geoms[i];
            if (ga.shape != gb.shape) return "body '" + ba.id + "' geom shape differs";
            if (ga.asset != gb.asset) return "body '" + ba.id + "' geom asset differs";
            if (!near(ga.params, gb.params, tol) || !near(ga.friction, gb.friction, tol) ||
                !near(ga.restitution, gb.restitution, tol) || !near_tf(ga.local, gb.local, tol)) {
                return "body '" + ba.id + "' geom " + std::to_string(i) + " differs";
            }
        }
    }
    if (a.sites.size() != b.sites.size()) return "site count differs";
    for (const auto& sa : a.sites) {
        const SpecSite* sb = b.find_site(sa.id);
        if (!sb) return "missing site '" + sa.id + "'";
        if (sa.body != sb->body || !near_tf(sa.local, sb->local, tol)) {
            return "site '" + sa.id + "' differs";
        }
    }
    if (a.sensors.size() != b.sensors.size()) return "sensor count differs";
    for (const auto& sa : a.sensors) {
        auto it = std::find_if(b.sensors.begin(), b.sensors.end(),
                               [&](const SpecSensor& s) { return s.id == sa.id; });
        if (it == b.sensors.end()) return "missing sensor '" + sa.id + "'";
        if (sa.kind != it->kind || sa.site != it->site || !near(sa.rate_hz, it->rate_hz, tol)) {
            return "sensor '" + sa.id + "' differs";
        }
    }
    if (a.actuators.size() != b.actuators.size()) return "actuator count differs";
    for (const auto& aa : a.actuators) {
        auto it = std::find_if(b.actuators.begin(), b.actuators.end(),
                               [&](const SpecActuator& x) { return x.id == aa.id; });
        if (it == b.actuators.end()) return "missing actuator '" + aa.id + "'";
        if (aa.target_kind != it->target_kind || aa.target != it->target || aa.kind != it->kind) {
            return "actuator '" + aa.id + "' differs";
        }
    }
    if (a.meshes.size() != b.meshes.size()) return "mesh asset count differs";
    for (const auto& [name, ma] : a.meshes) {
        auto it = b.meshes.find(name);
        if (it == b.meshes.end()) return "missing mesh asset '" + name + "'";
        if (ma.file != it->second.file) return "mesh asset '" + name + "' file differs";
    }
    if (a.hfields.size() != b.hfields.size()) return "hfield asset count differs";
    for (const auto& [name, ha] : a.hfields) {
        auto it = b.hfields.find(name);
        if (it == b.hfields.end()) return "missing hfield asset '" + name + "'";
        if (ha.file != it->second.file) return "hfield asset '" + name + "' file differs";
    }
    return {};
}

} // namespace simbridge
