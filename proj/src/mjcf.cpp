#include "simbridge/mjcf.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/obj_io.hpp"
#include "xml.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace simbridge {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

std::string fmt(const Quat& q) {
    return fmt(q.w()) + " " + fmt(q.x()) + " " + fmt(q.y()) + " " + fmt(q.z());
}

struct Writer {
    std::string out;
    int depth = 0;

    void open(const std::string& tag, const std::string& attrs, bool self_close) {
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        out += "<" + tag;
        if (!attrs.empty()) out += " " + attrs;
        out += self_close ? "/>\n" : ">\n";
        if (!self_close) ++depth;
    }
    void close(const std::string& tag) {
        --depth;
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        out += "</" + tag + ">\n";
    }
};

std::string attr(const std::string& key, const std::string& value) {
    return key + "=\"" + xml::escape(value) + "\"";
}

void emit_geom(Writer& w, const SpecGeom& g) {
    std::string a;
    switch (g.shape) {
    case GeomShape::Sphere:
        a = attr("type", "sphere") + " " + attr("size", fmt(g.params.x()));
        break;
    case GeomShape::Box:
        a = attr("type", "box") + " " + attr("size", fmt(g.params));
        break;
    case GeomShape::ConvexMesh:
        a = attr("type", "mesh") + " " + attr("mesh", g.asset);
        break;
    case GeomShape::HField:
        a = attr("type", "hfield") + " " + attr("hfield", g.asset);
        break;
    }
    a += " " + attr("pos", fmt(g.local.position)) + " " + attr("quat", fmt(g.local.orientation));
    a += " " + attr("friction", fmt(g.friction));
    // Restitution travels in the geom user field (declared via nuser_geom).
    a += " " + attr("user", fmt(g.restitution));
    w.open("geom", a, true);
}

void emit_body(Writer& w, const PhysicsSpec& spec,
               const std::map<std::string, std::vector<const SpecBody*>>& children,
               const SpecBody& body) {
    w.open("body",
           attr("name", body.id) + " " + attr("pos", fmt(body.transform.position)) + " " +
               attr("quat", fmt(body.transform.orientation)),
           false);
    if (body.joint) {
        if (body.joint->type == JointType::Free) {
            w.open("freejoint",
                   body.joint->name.empty() ? std::string() : attr("name", body.joint->name), true);
        } else {
            std::string a;
            if (!body.joint->name.empty()) a = attr("name", body.joint->name) + " ";
            a += attr("type", "hinge") + " " + attr("axis", fmt(body.joint->axis)) + " " +
                 attr("pos", fmt(body.joint->pos));
            w.open("joint", a, true);
        }
    }
    if (body.mass > 0.0) {
        const Mat3& in = body.inertia;
        std::string full = fmt(in(0, 0)) + " " + fmt(in(1, 1)) + " " + fmt(in(2, 2)) + " " +
                           fmt(in(0, 1)) + " " + fmt(in(0, 2)) + " " + fmt(in(1, 2));
        w.open("inertial",
               attr("pos", fmt(body.com)) + " " + attr("mass", fmt(body.mass)) + " " +
                   attr("fullinertia", full),
               true);
    }
    for (const auto& g : body.geoms) emit_geom(w, g);
    for (const auto& s : spec.sites) {
        if (s.body != body.id) continue;
        w.open("site",
               attr("name", s.id) + " " + attr("pos", fmt(s.local.position)) + " " +
                   attr("quat", fmt(s.local.orientation)),
               true);
    }
    auto it = children.find(body.id);
    if (it != children.end()) {
        for (const auto* child : it->second) emit_body(w, spec, children, *child);
    }
    w.close("body");
}

} // namespace

std::string emit_mjcf(const PhysicsSpec& spec) {
    validate_spec(spec);
    Writer w;
    w.open("mujoco", attr("model", spec.model), false);
    w.open("option", attr("gravity", fmt(spec.gravity)), true);
    w.open("size", attr("nuser_geom", "1"), true);

    if (!spec.meshes.empty() || !spec.hfields.empty()) {
        w.open("asset", "", false);
        for (const auto& [name, mesh] : spec.meshes) {
            w.open("mesh", attr("name", name) + " " + attr("file", mesh.file), true);
        }
        for (const auto& [name, hf] : spec.hfields) {
            w.open("hfield", attr("name", name) + " " + attr("file", hf.file), true);
        }
        w.close("asset");
    }

    std::map<std::string, std::vector<const SpecBody*>> children;
    std::vector<const SpecBody*> roots;
    for (const auto& b : spec.bodies) {
        if (b.parent.empty()) {
            roots.push_back(&b);
        } else {
            children[b.parent].push_back(&b);
        }
    }
    w.open("worldbody", "", false);
    for (const auto* b : roots) emit_body(w, spec, children, *b);
    w.close("worldbody");

    if (!spec.sensors.empty()) {
        w.open("sensor", "", false);
        for (const auto& s : spec.sensors) {
            std::string rate = s.rate_hz > 0.0 ? " " + attr("rate", fmt(s.rate_hz)) : "";
            switch (s.kind) {
            case SensorKind::Imu:
                w.open("accelerometer", attr("name", s.id) + " " + attr("site", s.site) + rate,
                       true);
                w.open("gyro", attr("name", s.id + "_gyro") + " " + attr("site", s.site), true);
                break;
            case SensorKind::Force:
                w.open("force", attr("name", s.id) + " " + attr("site", s.site) + rate, true);
                break;
            case SensorKind::Pose:
                w.open("framepos",
                       attr("name", s.id) + " " + attr("objtype", "site") + " " +
                           attr("objname", s.site) + rate,
                       true);
                w.open("framequat",
                       attr("name", s.id + "_quat") + " " + attr("objtype", "site") + " " +
                           attr("objname", s.site),
                       true);
                break;
            }
        }
        w.close("sensor");
    }

    if (!spec.actuators.empty()) {
        w.open("actuator", "", false);
        for (const auto& a : spec.actuators) {
            if (a.target_kind == ActuatorTarget::Joint) {
                const char* tag = a.kind == ActuatorKind::Force ? "motor" : "position";
                w.open(tag, attr("name", a.id) + " " + attr("joint", a.target), true);
            } else {
                // Body transmission; force-kind only at this level.
                w.open("general", attr("name", a.id) + " " + attr("body", a.target), true);
            }
        }
        w.close("actuator");
    }

    w.close("mujoco");
    return w.out;
}

namespace {

double parse_number(const std::string& text, const std::string& where) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) {
        throw ParseError(where + ": bad number '" + text + "'");
    }
    return v;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t count,
                                  const std::string& where) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) out.push_back(parse_number(tok, where));
    if (out.size() != count) {
        throw ParseError(where + ": expected " + std::to_string(count) + " numbers, got " +
                         std::to_string(out.size()));
    }
    return out;
}

Vec3 parse_vec3(const std::string& text, const std::string& where) {
    auto v = parse_numbers(text, 3, where);
    return {v[0], v[1], v[2]};
}

Quat parse_quat(const std::string& text, const std::string& where) {
    auto v = parse_numbers(text, 4, where);
    return {v[0], v[1], v[2], v[3]};
}

void check_attrs(const xml::Node& node, const std::string& path,
                 std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : node.attrs) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            throw ParseError(path + ": unsupported attribute '" + key + "'");
        }
    }
}

std::string require_attr(const xml::Node& node, const std::string& path, const char* key) {
    const std::string* v = node.attr(key);
    if (!v) throw ParseError(path + ": missing attribute '" + std::string(key) + "'");
    return *v;
}

struct BodyContext {
    PhysicsSpec* spec;
    bool ancestor_jointed = false;
};

void parse_geom(const xml::Node& node, const std::string& path, SpecBody& body) {
    check_attrs(node, path, {"type", "size", "mesh", "hfield", "pos", "quat", "friction", "user",
                             "name", "rgba"});
    SpecGeom geom;
    const std::string type = require_attr(node, path, "type");
    if (type == "sphere") {
        geom.shape = GeomShape::Sphere;
        geom.params.x() = parse_number(require_attr(node, path, "size"), path);
    } else if (type == "box") {
        geom.shape = GeomShape::Box;
        geom.params = parse_vec3(require_attr(node, path, "size"), path);
    } else if (type == "mesh") {
        geom.shape = GeomShape::ConvexMesh;
        geom.asset = require_attr(node, path, "mesh");
    } else if (type == "hfield") {
        geom.shape = GeomShape::HField;
        geom.asset = require_attr(node, path, "hfield");
    } else {
        throw ParseError(path + ": unsupported geom type '" + type + "'");
    }
    if (const auto* v = node.attr("pos")) geom.local.position = parse_vec3(*v, path);
    if (const auto* v = node.attr("quat")) geom.local.orientation = parse_quat(*v, path);
    if (const auto* v = node.attr("friction")) {
        // MuJoCo allows 1-3 friction coefficients; only sliding is used.
        std::istringstream in(*v);
        std::string tok;
        if (!(in >> tok)) throw ParseError(path + ": empty friction");
        geom.friction = parse_number(tok, path);
    }
    if (const auto* v = node.attr("user")) geom.restitution = parse_number(*v, path);
    body.geoms.push_back(std::move(geom));
}

void parse_body(const xml::Node& node, const std::string& parent_path, BodyContext ctx,
                const std::string& parent_id) {
    const std::string name = require_attr(node, parent_path + "/body", "name");
    const std::string path = parent_path + "/body[" + name + "]";
    check_attrs(node, path, {"name", "pos", "quat"});

    SpecBody body;
    body.id = name;
    body.parent = parent_id;
    if (const auto* v = node.attr("pos")) body.transform.position = parse_vec3(*v, path);
    if (const auto* v = node.attr("quat")) body.transform.orientation = parse_quat(*v, path);

    bool jointed = ctx.ancestor_jointed;
    for (const auto& child : node.children) {
        if (child.name == "freejoint") {
            check_attrs(child, path + "/freejoint", {"name"});
            SpecJoint joint;
            joint.type = JointType::Free;
            if (const auto* v = child.attr("name")) joint.name = *v;
            body.joint = joint;
            jointed = true;
        } else if (child.name == "joint") {
            check_attrs(child, path + "/joint", {"name", "type", "axis", "pos", "range", "damping"});
            SpecJoint joint;
            const std::string* type = child.attr("type");
            if (type && *type == "free") {
                joint.type = JointType::Free;
            } else if (!type || *type == "hinge") {
                joint.type = JointType::Hinge;
                if (const auto* v = child.attr("axis")) joint.axis = parse_vec3(*v, path + "/joint");
                if (const auto* v = child.attr("pos")) joint.pos = parse_vec3(*v, path + "/joint");
            } else {
                throw ParseError(path + "/joint: unsupported joint type '" + *type + "'");
            }
            if (const auto* v = child.attr("name")) joint.name = *v;
            if (body.joint) throw ParseError(path + ": multiple joints on one body");
            body.joint = joint;
            jointed = true;
        } else if (child.name == "inertial") {
            check_attrs(child, path + "/inertial", {"pos", "mass", "fullinertia", "diaginertia"});
            body.mass = parse_number(require_attr(child, path + "/inertial", "mass"),
                                     path + "/inertial");
            if (const auto* v = child.attr("pos")) body.com = parse_vec3(*v, path + "/inertial");
            if (const auto* v = child.attr("fullinertia")) {
                auto n = parse_numbers(*v, 6, path + "/inertial");
                body.inertia << n[0], n[3], n[4], n[3], n[1], n[5], n[4], n[5], n[2];
            } else if (const auto* v2 = child.attr("diaginertia")) {
                auto n = parse_numbers(*v2, 3, path + "/inertial");
                body.inertia = Vec3(n[0], n[1], n[2]).asDiagonal();
            }
        } else if (child.name == "geom") {
            parse_geom(child, path + "/geom", body);
        } else if (child.name == "site") {
            check_attrs(child, path + "/site", {"name", "pos", "quat", "size"});
            SpecSite site;
            site.id = require_attr(child, path + "/site", "name");
            site.body = name;
            if (const auto* v = child.attr("pos")) site.local.position = parse_vec3(*v, path);
            if (const auto* v = child.attr("quat")) site.local.orientation = parse_quat(*v, path);
            ctx.spec->sites.push_back(std::move(site));
        } else if (child.name == "body") {
            // handled after this body is appended
        } else {
            throw ParseError(path + ": unsupported element <" + child.name + ">");
        }
    }
    body.mobility = jointed ? Mobility::Dynamic : Mobility::Static;
    ctx.spec->bodies.push_back(std::move(body));

    BodyContext child_ctx{ctx.spec, jointed};
    for (const auto& child : node.children) {
        if (child.name == "body") parse_body(child, path, child_ctx, name);
    }
}

struct PendingPair {
    std::string site;
    bool completed = false;
};

void parse_sensors(const xml::Node& node, PhysicsSpec& spec) {
    std::map<std::string, PendingPair> accels; // name -> site, awaiting gyro
    std::map<std::string, PendingPair> poses;  // name -> site, awaiting framequat
    for (const auto& child : node.children) {
        const std::string path = "mujoco/sensor/" + child.name;
        if (child.name == "accelerometer") {
            check_attrs(child, path, {"name", "site", "rate"});
            SpecSensor s;
            s.id = require_attr(child, path, "name");
            s.kind = SensorKind::Imu;
            s.site = require_attr(child, path, "site");
            if (const auto* v = child.attr("rate")) s.rate_hz = parse_number(*v, path);
            accels[s.id] = {s.site, false};
            spec.sensors.push_back(std::move(s));
        } else if (child.name == "gyro") {
            check_attrs(child, path, {"name", "site"});
            const std::string gname = require_attr(child, path, "name");
            const std::string site = require_attr(child, path, "site");
            const std::string suffix = "_gyro";
            if (gname.size() <= suffix.size() ||
                gname.compare(gname.size() - suffix.size(), suffix.size(), suffix) != 0) {
                throw ParseError(path + ": gyro '" + gname +
                                 "' is not paired with an accelerometer (expected <name>_gyro)");
            }
            const std::string base = gname.substr(0, gname.size() - suffix.size());
            auto it = accels.find(base);
            if (it == accels.end() || it->second.site != site) {
                throw ParseError(path + ": gyro '" + gname +
                                 "' has no matching accelerometer on site '" + site + "'");
            }
            it->second.completed = true;
        } else if (child.name == "force") {
            check_attrs(child, path, {"name", "site", "rate"});
            SpecSensor s;
            s.id = require_attr(child, path, "name");
            s.kind = SensorKind::Force;
            s.site = require_attr(child, path, "site");
            if (const auto* v = child.attr("rate")) s.rate_hz = parse_number(*v, path);
            spec.sensors.push_back(std::move(s));
        } else if (child.name == "framepos") {
            check_attrs(child, path, {"name", "objtype", "objname", "rate"});
            if (require_attr(child, path, "objtype") != "site") {
                throw ParseError(path + ": only site-attached framepos is supported");
            }
            SpecSensor s;
            s.id = require_attr(child, path, "name");
            s.kind = SensorKind::Pose;
            s.site = require_attr(child, path, "objname");
            if (const auto* v = child.attr("rate")) s.rate_hz = parse_number(*v, path);
            poses[s.id] = {s.site, false};
            spec.sensors.push_back(std::move(s));
        } else if (child.name == "framequat") {
            check_attrs(child, path, {"name", "objtype", "objname"});
            const std::string qname = require_attr(child, path, "name");
            const std::string suffix = "_quat";
            if (qname.size() <= suffix.size() ||
                qname.compare(qname.size() - suffix.size(), suffix.size(), suffix) != 0) {
                throw ParseError(path + ": framequat '" + qname +
                                 "' is not paired with a framepos (expected <name>_quat)");
            }
            const std::string base = qname.substr(0, qname.size() - suffix.size());
            auto it = poses.find(base);
            if (it == poses.end() || it->second.site != require_attr(child, path, "objname")) {
                throw ParseError(path + ": framequat '" + qname + "' has no matching framepos");
            }
            it->second.completed = true;
        } else {
            throw ParseError(path + ": unsupported sensor element");
        }
    }
    for (const auto& [name, pending] : accels) {
        if (!pending.completed) {
            throw ParseError("mujoco/sensor: accelerometer '" + name + "' is missing its gyro");
        }
    }
    for (const auto& [name, pending] : poses) {
        if (!pending.completed) {
            throw ParseError("mujoco/sensor: framepos '" + name + "' is missing its framequat");
        }
    }
}

void parse_actuators(const xml::Node& node, PhysicsSpec& spec) {
    for (const auto& child : node.children) {
        const std::string path = "mujoco/actuator/" + child.name;
        SpecActuator a;
        if (child.name == "motor" || child.name == "position") {
            check_attrs(child, path, {"name", "joint", "kp", "gear"});
            a.id = require_attr(child, path, "name");
            a.target_kind = ActuatorTarget::Joint;
            a.target = require_attr(child, path, "joint");
            a.kind = child.name == "motor" ? ActuatorKind::Force : ActuatorKind::Position;
        } else if (child.name == "general") {
            check_attrs(child, path, {"name", "body", "gear"});
            a.id = require_attr(child, path, "name");
            a.target_kind = ActuatorTarget::Body;
            a.target = require_attr(child, path, "body");
            a.kind = ActuatorKind::Force;
        } else {
            throw ParseError(path + ": unsupported actuator element");
        }
        spec.actuators.push_back(std::move(a));
    }
}

} // namespace

PhysicsSpec parse_mjcf(const std::string& text) {
    xml::Node root = xml::parse(text);
    if (root.name != "mujoco") {
        throw ParseError("expected <mujoco> root element, got <" + root.name + ">");
    }
    check_attrs(root, "mujoco", {"model"});
    PhysicsSpec spec;
    if (const auto* v = root.attr("model")) spec.model = *v;

    for (const auto& child : root.children) {
        const std::string path = "mujoco/" + child.name;
        if (child.name == "option") {
            check_attrs(child, path, {"gravity", "timestep"});
            if (const auto* v = child.attr("gravity")) spec.gravity = parse_vec3(*v, path);
        } else if (child.name == "size") {
            check_attrs(child, path, {"nuser_geom"});
        } else if (child.name == "asset") {
            for (const auto& asset : child.children) {
                const std::string apath = path + "/" + asset.name;
                if (asset.name == "mesh") {
                    check_attrs(asset, apath, {"name", "file"});
                    MeshAsset m;
                    m.name = require_attr(asset, apath, "name");
                    m.file = require_attr(asset, apath, "file");
                    spec.meshes.emplace(m.name, std::move(m));
                } else if (asset.name == "hfield") {
                    check_attrs(asset, apath, {"name", "file", "size"});
                    HFieldAsset h;
                    h.name = require_attr(asset, apath, "name");
                    h.file = require_attr(asset, apath, "file");
                    spec.hfields.emplace(h.name, std::move(h));
                } else {
                    throw ParseError(apath + ": unsupported asset element");
                }
            }
        } else if (child.name == "worldbody") {
            for (const auto& elem : child.children) {
                if (elem.name != "body") {
                    throw ParseError("mujoco/worldbody: unsupported element <" + elem.name + ">");
                }
                parse_body(elem, "mujoco/worldbody", BodyContext{&spec, false}, "");
            }
        } else if (child.name == "sensor") {
            parse_sensors(child, spec);
        } else if (child.name == "actuator") {
            parse_actuators(child, spec);
        } else {
            throw ParseError(path + ": unsupported element");
        }
    }
    validate_spec(spec);
    return spec;
}

PhysicsSpec load_mjcf(const std::filesystem::path& xml_path) {
    std::ifstream in(xml_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + xml_path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    PhysicsSpec spec = parse_mjcf(buf.str());

    const auto base = xml_path.parent_path();
    for (auto& [name, mesh] : spec.meshes) {
        mesh.mesh = load_obj(base / mesh.file);
    }
    for (auto& [name, hf] : spec.hfields) {
        hf.hfield = load_heightfield(base / hf.file);
    }
    return spec;
}

} // namespace simbridge
