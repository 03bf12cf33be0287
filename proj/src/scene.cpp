#include "simbridge/scene.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/mjcf.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace simbridge {

namespace {

using json = nlohmann::json;

int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("scene: missing field " + path + "." + key);
    return *it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ParseError("scene: " + path + " must be a number");
    return v.get<double>();
}

Vec3 vec3_of(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) {
        throw ParseError("scene: " + path + " must be an array of 3 numbers");
    }
    return {number(v[0], path), number(v[1], path), number(v[2], path)};
}

Transform transform_of(const json& v, const std::string& path) {
    Transform tf;
    if (v.is_null()) return tf;
    if (!v.is_object()) throw ParseError("scene: " + path + " must be an object");
    if (auto it = v.find("pos"); it != v.end()) tf.position = vec3_of(*it, path + ".pos");
    if (auto it = v.find("quat"); it != v.end()) {
        if (!it->is_array() || it->size() != 4) {
            throw ParseError("scene: " + path + ".quat must be an array of 4 numbers");
        }
        tf.orientation = Quat(number((*it)[0], path), number((*it)[1], path),
                              number((*it)[2], path), number((*it)[3], path));
    }
    if (auto it = v.find("scale"); it != v.end()) tf.scale = vec3_of(*it, path + ".scale");

    const double norm = tf.orientation.norm();
    if (std::abs(norm - 1.0) > 1e-9) {
        throw ParseError("scene: " + path + ".quat is not unit length (|q| = " +
                         std::to_string(norm) + ")");
    }
    if (!(tf.scale.array() > 0.0).all()) {
        throw ParseError("scene: " + path + ".scale components must be > 0");
    }
    return tf;
}

Mobility mobility_of(const json& v, const std::string& path) {
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "Static") return Mobility::Static;
    if (s == "Dynamic") return Mobility::Dynamic;
    throw ParseError("scene: " + path + " must be \"Static\" or \"Dynamic\"");
}

MeshRef mesh_ref_of(const json& v, const std::string& path) {
    if (v.is_string()) return std::filesystem::path(v.get<std::string>());
    if (v.is_object()) {
        if (auto it = v.find("sphere"); it != v.end()) {
            const double r = number(*it, path + ".sphere");
            if (!(r > 0.0)) throw ParseError("scene: " + path + ".sphere radius must be > 0");
            return SphereShape{r};
        }
        if (auto it = v.find("box"); it != v.end()) {
            const Vec3 he = vec3_of(*it, path + ".box");
            if (!(he.array() > 0.0).all()) {
                throw ParseError("scene: " + path + ".box half-extents must be > 0");
            }
            return BoxShape{he};
        }
    }
    throw ParseError("scene: " + path + " must be a path, {\"sphere\": r}, or {\"box\": [hx,hy,hz]}");
}

json transform_to_json(const Transform& tf) {
    return json{{"pos", {tf.position.x(), tf.position.y(), tf.position.z()}},
                {"quat", {tf.orientation.w(), tf.orientation.x(), tf.orientation.y(),
                          tf.orientation.z()}},
                {"scale", {tf.scale.x(), tf.scale.y(), tf.scale.z()}}};
}

} // namespace

Mobility resolve_mobility(const SceneActor& actor) {
    return actor.physics.mobility_override.value_or(actor.native_mobility);
}

SceneDescription parse_scene(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("scene: JSON parse error at line " +
                         std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError("scene: top level must be an object");

    SceneDescription scene;
    scene.base_dir = base_dir;
    if (auto it = doc.find("gravity"); it != doc.end()) {
        scene.gravity = vec3_of(*it, "gravity");
    }

    std::set<std::string> ids;
    auto claim_id = [&ids](const std::string& id, const std::string& path) {
        if (id.empty()) throw ParseError("scene: " + path + ".id must be non-empty");
        if (!ids.insert(id).second) {
            throw ValidationError("scene: duplicate id '" + id + "' (" + path + ")");
        }
    };

    if (auto it = doc.find("actors"); it != doc.end()) {
        if (!it->is_array()) throw ParseError("scene: actors must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& a = (*it)[i];
            const std::string path = "actors[" + std::to_string(i) + "]";
            SceneActor actor;
            actor.id = require(a, "id", path).get<std::string>();
            claim_id(actor.id, path);
            actor.mesh_ref = mesh_ref_of(require(a, "mesh", path), path + ".mesh");
            if (auto t = a.find("transform"); t != a.end()) {
                actor.transform = transform_of(*t, path + ".transform");
            }
            if (auto n = a.find("native_mobility"); n != a.end()) {
                actor.native_mobility = mobility_of(*n, path + ".native_mobility");
            }
            if (auto h = a.find("include_in_heightfield"); h != a.end()) {
                if (!h->is_boolean()) {
                    throw ParseError("scene: " + path + ".include_in_heightfield must be a bool");
                }
                actor.include_in_heightfield = h->get<bool>();
            }
            if (auto p = a.find("physics"); p != a.end()) {
                const std::string ppath = path + ".physics";
                if (auto c = p->find("complexity"); c != p->end()) {
                    const std::string s = c->is_string() ? c->get<std::string>() : "";
                    if (s == "Simple") actor.physics.complexity = Complexity::Simple;
                    else if (s == "Complex") actor.physics.complexity = Complexity::Complex;
                    else throw ParseError("scene: " + ppath +
                                          ".complexity must be \"Simple\" or \"Complex\"");
                }
                if (auto m = p->find("mobility"); m != p->end() && !m->is_null()) {
                    actor.physics.mobility_override = mobility_of(*m, ppath + ".mobility");
                }
                if (auto m = p->find("mass"); m != p->end()) {
                    actor.physics.mass = number(*m, ppath + ".mass");
                }
                if (auto f = p->find("friction"); f != p->end()) {
                    actor.physics.friction = number(*f, ppath + ".friction");
                }
                if (auto r = p->find("restitution"); r != p->end()) {
                    actor.physics.restitution = number(*r, ppath + ".restitution");
                }
            }
            if (actor.physics.friction < 0.0) {
                throw ValidationError("scene: " + path + " friction must be >= 0");
            }
            if (actor.physics.restitution < 0.0 || actor.physics.restitution > 1.0) {
                throw ValidationError("scene: " + path + " restitution must be in [0,1]");
            }
            if (resolve_mobility(actor) == Mobility::Dynamic && !(actor.physics.mass > 0.0)) {
                throw ValidationError("scene: dynamic actor '" + actor.id + "' needs mass > 0");
            }
            if (const auto* file = std::get_if<std::filesystem::path>(&actor.mesh_ref)) {
                if (!std::filesystem::exists(base_dir / *file)) {
                    throw ValidationError("scene: actor '" + actor.id + "' mesh not found: " +
                                          (base_dir / *file).string());
                }
            }
            scene.actors.push_back(std::move(actor));
        }
    }

    if (auto it = doc.find("landscapes"); it != doc.end()) {
        if (!it->is_array()) throw ParseError("scene: landscapes must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& l = (*it)[i];
            const std::string path = "landscapes[" + std::to_string(i) + "]";
            LandscapeRegion region;
            region.id = require(l, "id", path).get<std::string>();
            claim_id(region.id, path);
            region.mesh_ref = require(l, "mesh", path).get<std::string>();
            const json& bbox = require(l, "bbox", path);
            region.bbox.min = vec3_of(require(bbox, "min", path + ".bbox"), path + ".bbox.min");
            region.bbox.max = vec3_of(require(bbox, "max", path + ".bbox"), path + ".bbox.max");
            const json& res = require(l, "resolution", path);
            if (!res.is_array() || res.size() != 2) {
                throw ParseError("scene: " + path + ".resolution must be [nx, ny]");
            }
            region.nx = res[0].get<int>();
            region.ny = res[1].get<int>();
            if (region.nx < 2 || region.ny < 2) {
                throw ValidationError("scene: " + path + " resolution must be at least 2x2");
            }
            if (!(region.bbox.extent().x() > 0.0 && region.bbox.extent().y() > 0.0)) {
                throw ValidationError("scene: " + path + " bbox must have positive x/y extent");
            }
            if (!std::filesystem::exists(base_dir / region.mesh_ref)) {
                throw ValidationError("scene: landscape '" + region.id + "' mesh not found: " +
                                      (base_dir / region.mesh_ref).string());
            }
            scene.landscapes.push_back(std::move(region));
        }
    }

    if (auto it = doc.find("robots"); it != doc.end()) {
        if (!it->is_array()) throw ParseError("scene: robots must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& r = (*it)[i];
            const std::string path = "robots[" + std::to_string(i) + "]";
            RobotPawn robot;
            robot.id = require(r, "id", path).get<std::string>();
            claim_id(robot.id, path);
            robot.spec_path = require(r, "spec", path).get<std::string>();
            if (auto s = r.find("spawn"); s != r.end()) {
                robot.spawn = transform_of(*s, path + ".spawn");
            }
            const auto full = base_dir / robot.spec_path;
            if (!std::filesystem::exists(full)) {
                throw ValidationError("scene: robot '" + robot.id + "' spec not found: " +
                                      full.string());
            }
            // The fragment must parse as a valid spec.
            std::ifstream in(full, std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                parse_mjcf(buf.str());
            } catch (const Error& e) {
                throw ValidationError("scene: robot '" + robot.id + "' spec invalid: " + e.what());
            }
            scene.robots.push_back(std::move(robot));
        }
    }

    return scene;
}

SceneDescription load_scene(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scene file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str(), path.parent_path());
}

std::string scene_to_json(const SceneDescription& scene) {
    json doc;
    doc["gravity"] = {scene.gravity.x(), scene.gravity.y(), scene.gravity.z()};
    doc["actors"] = json::array();
    for (const auto& a : scene.actors) {
        json actor;
        actor["id"] = a.id;
        if (const auto* file = std::get_if<std::filesystem::path>(&a.mesh_ref)) {
            actor["mesh"] = file->generic_string();
        } else if (const auto* sphere = std::get_if<SphereShape>(&a.mesh_ref)) {
            actor["mesh"] = json{{"sphere", sphere->radius}};
        } else {
            const auto& box = std::get<BoxShape>(a.mesh_ref);
            actor["mesh"] = json{
                {"box", {box.half_extents.x(), box.half_extents.y(), box.half_extents.z()}}};
        }
        actor["transform"] = transform_to_json(a.transform);
        actor["native_mobility"] = to_string(a.native_mobility);
        if (a.include_in_heightfield) actor["include_in_heightfield"] = true;
        json physics{{"complexity", to_string(a.physics.complexity)},
                     {"mass", a.physics.mass},
                     {"friction", a.physics.friction},
                     {"restitution", a.physics.restitution}};
        if (a.physics.mobility_override) {
            physics["mobility"] = to_string(*a.physics.mobility_override);
        }
        actor["physics"] = std::move(physics);
        doc["actors"].push_back(std::move(actor));
    }
    doc["landscapes"] = json::array();
    for (const auto& l : scene.landscapes) {
        doc["landscapes"].push_back(
            json{{"id", l.id},
                 {"mesh", l.mesh_ref.generic_string()},
                 {"bbox",
                  {{"min", {l.bbox.min.x(), l.bbox.min.y(), l.bbox.min.z()}},
                   {"max", {l.bbox.max.x(), l.bbox.max.y(), l.bbox.max.z()}}}},
                 {"resolution", {l.nx, l.ny}}});
    }
    doc["robots"] = json::array();
    for (const auto& r : scene.robots) {
        doc["robots"].push_back(json{{"id", r.id},
                                     {"spec", r.spec_path.generic_string()},
                                     {"spawn", transform_to_json(r.spawn)}});
    }
    return doc.dump(2) + "\n";
}

void save_scene(const SceneDescription& scene, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write scene file: " + path.string());
    out << scene_to_json(scene);
    if (!out) throw IoError("short write: " + path.string());
}

} // namespace simbridge
