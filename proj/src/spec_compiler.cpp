#include "simbridge/spec_compiler.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/mesh_ops.hpp"
#include "simbridge/mjcf.hpp"
#include "simbridge/obj_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

namespace simbridge {

namespace {

std::string sanitize_for_file(const std::string& name) {
    std::string out = name;
    std::replace(out.begin(), out.end(), '/', '_');
    return out;
}

TriMesh baked_actor_mesh(const SceneDescription& scene, const SceneActor& actor) {
    const auto* file = std::get_if<std::filesystem::path>(&actor.mesh_ref);
    if (!file) throw ValidationError("actor '" + actor.id + "' has no mesh asset");
    TriMesh mesh = load_obj(scene.base_dir / *file);
    validate_mesh(mesh);
    // Non-uniform scale is legal for meshes: it is baked into the vertices.
    for (auto& v : mesh.vertices) v = v.cwiseProduct(actor.transform.scale);
    return mesh;
}

double uniform_scale_or_throw(const SceneActor& actor) {
    if (!actor.transform.has_uniform_scale(1e-12)) {
        throw ValidationError("actor '" + actor.id +
                              "': non-uniform scale is not supported on primitive shapes");
    }
    return actor.transform.scale.x();
}

Transform world_of(const Transform& tf) {
    Transform out = tf;
    out.scale = Vec3::Ones();
    return out;
}

void append_transformed(TriMesh& dst, const TriMesh& src, const Transform& tf) {
    const auto base = static_cast<std::uint32_t>(dst.vertices.size());
    for (const auto& v : src.vertices) dst.vertices.push_back(tf.apply(v));
    for (const auto& t : src.triangles) {
        dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
}

struct CombinedInertia {
    double mass = 0.0;
    Vec3 com = Vec3::Zero();
    Mat3 inertia = Mat3::Zero();
};

// Uniform density over all parts, scaled so the total equals `mass`.
CombinedInertia inertia_from_parts(const std::vector<ConvexPart>& parts, double mass) {
    std::vector<MassProperties> props;
    double total_volume = 0.0;
    for (const auto& p : parts) {
        props.push_back(mass_properties(p.mesh));
        total_volume += props.back().volume;
    }
    if (!(total_volume > 0.0)) {
        throw ValidationError("convex parts have non-positive total volume");
    }
    const double density = mass / total_volume;

    CombinedInertia out;
    out.mass = mass;
    for (const auto& p : props) out.com += density * p.volume * p.centroid;
    out.com /= mass;
    for (const auto& p : props) {
        const Vec3 d = p.centroid - out.com;
        const double m = density * p.volume;
        out.inertia += density * p.inertia +
                       m * (Mat3::Identity() * d.squaredNorm() - d * d.transpose());
    }
    return out;
}

} // namespace

TriMesh make_box_mesh(const Vec3& he) {
    TriMesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.emplace_back((i & 1) ? he.x() : -he.x(), (i & 2) ? he.y() : -he.y(),
                                (i & 4) ? he.z() : -he.z());
    }
    const std::array<std::array<std::uint32_t, 4>, 6> faces{{
        {0, 2, 3, 1}, // -z
        {4, 5, 7, 6}, // +z
        {0, 1, 5, 4}, // -y
        {2, 6, 7, 3}, // +y
        {0, 4, 6, 2}, // -x
        {1, 3, 7, 5}, // +x
    }};
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

TriMesh make_uv_sphere(double radius, int segments, int rings) {
    TriMesh m;
    m.vertices.emplace_back(0.0, 0.0, radius);
    for (int r = 1; r < rings; ++r) {
        const double phi = std::numbers::pi * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double theta = 2.0 * std::numbers::pi * s / segments;
            m.vertices.emplace_back(radius * std::sin(phi) * std::cos(theta),
                                    radius * std::sin(phi) * std::sin(theta),
                                    radius * std::cos(phi));
        }
    }
    m.vertices.emplace_back(0.0, 0.0, -radius);
    const auto ring_start = [&](int r) { return 1 + (r - 1) * segments; };
    const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
    for (int s = 0; s < segments; ++s) {
        const int sn = (s + 1) % segments;
        m.triangles.push_back({0, static_cast<std::uint32_t>(ring_start(1) + s),
                               static_cast<std::uint32_t>(ring_start(1) + sn)});
        m.triangles.push_back({south, static_cast<std::uint32_t>(ring_start(rings - 1) + sn),
                               static_cast<std::uint32_t>(ring_start(rings - 1) + s)});
    }
    for (int r = 1; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int sn = (s + 1) % segments;
            const auto a = static_cast<std::uint32_t>(ring_start(r) + s);
            const auto b = static_cast<std::uint32_t>(ring_start(r) + sn);
            const auto c = static_cast<std::uint32_t>(ring_start(r + 1) + s);
            const auto d = static_cast<std::uint32_t>(ring_start(r + 1) + sn);
            m.triangles.push_back({a, c, d});
            m.triangles.push_back({a, d, b});
        }
    }
    return m;
}

namespace {

// Pole triangles wind so normals face outward; the north cap above goes
// (pole, s, sn) which is CCW seen from +z.
// (kept next to make_uv_sphere on purpose)

} // namespace

ProcessedAssets process_scene(const SceneDescription& scene, const ProcessOptions& options) {
    ProcessedAssets assets;

    for (const auto& actor : scene.actors) {
        if (!std::holds_alternative<std::filesystem::path>(actor.mesh_ref)) {
            uniform_scale_or_throw(actor); // primitives stay analytic
            continue;
        }
        TriMesh mesh = baked_actor_mesh(scene, actor);
        if (actor.physics.complexity == Complexity::Simple) {
            assets.actor_parts[actor.id] = {convex_hull(mesh.vertices)};
        } else {
            DecomposeResult result;
            if (options.cache) {
                result = options.cache->decompose_cached(mesh, options.decompose);
            } else {
                result = decompose(mesh, options.decompose);
            }
            assets.actor_parts[actor.id] = std::move(result.parts);
        }
    }

    for (const auto& region : scene.landscapes) {
        TriMesh scan = load_obj(scene.base_dir / region.mesh_ref);
        // Tagged clutter joins the scan in world coordinates.
        for (const auto& actor : scene.actors) {
            if (!actor.include_in_heightfield) continue;
            if (const auto* file = std::get_if<std::filesystem::path>(&actor.mesh_ref)) {
                TriMesh local = load_obj(scene.base_dir / *file);
                Transform tf = actor.transform;
                append_transformed(scan, local, tf);
            } else if (const auto* sphere = std::get_if<SphereShape>(&actor.mesh_ref)) {
                append_transformed(scan, make_uv_sphere(sphere->radius * uniform_scale_or_throw(actor)),
                                   world_of(actor.transform));
            } else {
                const auto& box = std::get<BoxShape>(actor.mesh_ref);
                append_transformed(scan,
                                   make_box_mesh(box.half_extents * uniform_scale_or_throw(actor)),
                                   world_of(actor.transform));
            }
        }
        LandscapeRegion effective = region;
        if (options.heightfield_resolution > 1) {
            effective.nx = options.heightfield_resolution;
            effective.ny = options.heightfield_resolution;
        }
        SampleOptions sample;
        sample.workers = options.heightfield_workers;
        assets.landscape_fields[region.id] = sample_heightfield(effective, scan, sample);
    }

    return assets;
}

PhysicsSpec build_spec(const SceneDescription& scene, const ProcessedAssets& assets) {
    PhysicsSpec spec;
    spec.gravity = scene.gravity;

    for (const auto& actor : scene.actors) {
        SpecBody body;
        body.id = actor.id;
        body.mobility = resolve_mobility(actor);
        body.transform = world_of(actor.transform);
        if (body.mobility == Mobility::Dynamic) {
            if (!(actor.physics.mass > 0.0)) {
                throw ValidationError("dynamic actor '" + actor.id + "' needs mass > 0");
            }
            body.joint = SpecJoint{.name = {}, .type = JointType::Free};
            body.mass = actor.physics.mass;
        }

        if (const auto* sphere = std::get_if<SphereShape>(&actor.mesh_ref)) {
            const double r = sphere->radius * uniform_scale_or_throw(actor);
            SpecGeom geom;
            geom.shape = GeomShape::Sphere;
            geom.params.x() = r;
            geom.friction = actor.physics.friction;
            geom.restitution = actor.physics.restitution;
            body.geoms.push_back(geom);
            if (body.mobility == Mobility::Dynamic) {
                body.inertia = Mat3::Identity() * (0.4 * body.mass * r * r);
            }
        } else if (const auto* box = std::get_if<BoxShape>(&actor.mesh_ref)) {
            const Vec3 he = box->half_extents * uniform_scale_or_throw(actor);
            SpecGeom geom;
            geom.shape = GeomShape::Box;
            geom.params = he;
            geom.friction = actor.physics.friction;
            geom.restitution = actor.physics.restitution;
            body.geoms.push_back(geom);
            if (body.mobility == Mobility::Dynamic) {
                const double m = body.mass;
                body.inertia = Vec3(m / 3.0 * (he.y() * he.y() + he.z() * he.z()),
                                    m / 3.0 * (he.x() * he.x() + he.z() * he.z()),
                                    m / 3.0 * (he.x() * he.x() + he.y() * he.y()))
                                   .asDiagonal();
            }
        } else {
            auto it = assets.actor_parts.find(actor.id);
            if (it == assets.actor_parts.end() || it->second.empty()) {
                throw ValidationError("missing processed parts for actor '" + actor.id + "'");
            }
            const auto& parts = it->second;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                char suffix[32];
                std::snprintf(suffix, sizeof(suffix), "_part%03zu", i);
                const std::string name = actor.id + suffix;
                MeshAsset asset;
                asset.name = name;
                asset.file = "assets/" + sanitize_for_file(name) + ".obj";
                asset.mesh = parts[i].mesh;
                spec.meshes.emplace(name, std::move(asset));

                SpecGeom geom;
                geom.shape = GeomShape::ConvexMesh;
                geom.asset = name;
                geom.friction = actor.physics.friction;
                geom.restitution = actor.physics.restitution;
                body.geoms.push_back(std::move(geom));
            }
            if (body.mobility == Mobility::Dynamic) {
                auto combined = inertia_from_parts(parts, body.mass);
                body.com = combined.com;
                body.inertia = combined.inertia;
            }
        }
        spec.bodies.push_back(std::move(body));
    }

    for (const auto& region : scene.landscapes) {
        auto it = assets.landscape_fields.find(region.id);
        if (it == assets.landscape_fields.end()) {
            throw ValidationError("missing heightfield for landscape '" + region.id + "'");
        }
        HFieldAsset asset;
        asset.name = region.id;
        asset.file = "assets/" + sanitize_for_file(region.id) + "_hfield.bin";
        asset.hfield = it->second;
        spec.hfields.emplace(region.id, std::move(asset));

        SpecBody body;
        body.id = region.id;
        body.mobility = Mobility::Static;
        SpecGeom geom;
        geom.shape = GeomShape::HField;
        geom.asset = region.id;
        geom.friction = 1.0;
        body.geoms.push_back(std::move(geom));
        spec.bodies.push_back(std::move(body));
    }

    validate_spec(spec);
    return spec;
}

void merge_robot_fragment(PhysicsSpec& spec, const PhysicsSpec& fragment,
                          const std::string& robot_id, const Transform& spawn) {
    if ((spawn.scale - Vec3::Ones()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ValidationError("robot '" + robot_id + "': spawn scale must be 1");
    }
    const std::string prefix = robot_id + "/";

    // Ids are unique per kind (MuJoCo keeps separate name spaces too).
    std::set<std::string> taken_bodies, taken_sites, taken_sensors, taken_actuators;
    for (const auto& b : spec.bodies) taken_bodies.insert(b.id);
    for (const auto& s : spec.sites) taken_sites.insert(s.id);
    for (const auto& s : spec.sensors) taken_sensors.insert(s.id);
    for (const auto& a : spec.actuators) taken_actuators.insert(a.id);
    auto claim = [&robot_id](std::set<std::string>& taken, const std::string& id) {
        if (!taken.insert(id).second) {
            throw ValidationError("robot '" + robot_id + "': id collision on '" + id + "'");
        }
    };

    for (const auto& src : fragment.bodies) {
        SpecBody body = src;
        body.id = prefix + src.id;
        claim(taken_bodies, body.id);
        if (src.parent.empty()) {
            // Re-root at the spawn pose.
            body.transform.position =
                spawn.position + spawn.orientation * src.transform.position;
            body.transform.orientation = spawn.orientation * src.transform.orientation;
        } else {
            body.parent = prefix + src.parent;
        }
        if (body.joint && !body.joint->name.empty()) body.joint->name = prefix + body.joint->name;
        for (auto& g : body.geoms) {
            if (!g.asset.empty()) g.asset = prefix + g.asset;
        }
        spec.bodies.push_back(std::move(body));
    }
    for (const auto& src : fragment.sites) {
        SpecSite site = src;
        site.id = prefix + src.id;
        claim(taken_sites, site.id);
        site.body = prefix + src.body;
        spec.sites.push_back(std::move(site));
    }
    for (const auto& src : fragment.sensors) {
        SpecSensor sensor = src;
        sensor.id = prefix + src.id;
        claim(taken_sensors, sensor.id);
        sensor.site = prefix + src.site;
        spec.sensors.push_back(std::move(sensor));
    }
    for (const auto& src : fragment.actuators) {
        SpecActuator actuator = src;
        actuator.id = prefix + src.id;
        claim(taken_actuators, actuator.id);
        actuator.target = prefix + src.target;
        spec.actuators.push_back(std::move(actuator));
    }
    for (const auto& [name, src] : fragment.meshes) {
        MeshAsset asset = src;
        asset.name = prefix + name;
        asset.file = "assets/" + sanitize_for_file(asset.name) + ".obj";
        if (spec.meshes.count(asset.name)) {
            throw ValidationError("robot '" + robot_id + "': mesh asset collision on '" +
                                  asset.name + "'");
        }
        spec.meshes.emplace(asset.name, std::move(asset));
    }
    for (const auto& [name, src] : fragment.hfields) {
        HFieldAsset asset = src;
        asset.name = prefix + name;
        asset.file = "assets/" + sanitize_for_file(asset.name) + "_hfield.bin";
        if (spec.hfields.count(asset.name)) {
            throw ValidationError("robot '" + robot_id + "': hfield asset collision on '" +
                                  asset.name + "'");
        }
        spec.hfields.emplace(asset.name, std::move(asset));
    }

    validate_spec(spec);
}

void merge_robot(PhysicsSpec& spec, const RobotPawn& robot, const std::filesystem::path& base_dir) {
    PhysicsSpec fragment = load_mjcf(base_dir / robot.spec_path);
    merge_robot_fragment(spec, fragment, robot.id, robot.spawn);
}

PhysicsSpec compile_scene(const SceneDescription& scene, const ProcessOptions& options) {
    ProcessedAssets assets = process_scene(scene, options);
    PhysicsSpec spec = build_spec(scene, assets);
    for (const auto& robot : scene.robots) {
        merge_robot(spec, robot, scene.base_dir);
    }
    return spec;
}

CompileOutput write_compile_output(const PhysicsSpec& spec, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "assets", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "assets").string() + ": " + ec.message());

    CompileOutput out;
    for (const auto& [name, asset] : spec.meshes) {
        if (!asset.mesh) throw IoError("mesh asset '" + name + "' has no payload to write");
        save_obj(*asset.mesh, out_dir / asset.file);
        out.asset_files.push_back(out_dir / asset.file);
    }
    for (const auto& [name, asset] : spec.hfields) {
        if (!asset.hfield) throw IoError("hfield asset '" + name + "' has no payload to write");
        save_heightfield(*asset.hfield, out_dir / asset.file);
        out.asset_files.push_back(out_dir / asset.file);
    }

    out.scene_xml = out_dir / "scene.xml";
    std::ofstream xml(out.scene_xml, std::ios::binary);
    if (!xml) throw IoError("cannot write " + out.scene_xml.string());
    xml << emit_mjcf(spec);
    if (!xml) throw IoError("short write: " + out.scene_xml.string());
    return out;
}

} // namespace simbridge
