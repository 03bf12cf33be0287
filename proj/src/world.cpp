#include "simbridge/world.hpp"

#include "collide.hpp"
#include "simbridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace simbridge {

namespace {

struct Collider {
    GeomShape shape = GeomShape::Sphere;
    double radius = 0.0;                            // sphere
    Vec3 sphere_center{0.0, 0.0, 0.0};              // body frame
    std::vector<Vec3> verts;                        // hull/box corners, body frame
    std::vector<std::array<std::uint32_t, 3>> tris; // hull faces for point queries
    HeightField hfield;                             // static terrain payload
    double friction = 0.5;
    double restitution = 0.0;
};

struct PairMaterial {
    double friction = 0.0;
    double restitution = 0.0;
};

Transform compose(const Transform& a, const Transform& b) {
    Transform out;
    out.position = a.position + a.orientation * b.position;
    out.orientation = a.orientation * b.orientation;
    return out;
}

constexpr double kContactMargin = 5e-4;

} // namespace

struct World::Body {
    std::string id;
    bool dynamic = false;
    double mass = 0.0;
    double inv_mass = 0.0;
    Mat3 inertia_body = Mat3::Zero();
    Mat3 inv_inertia_body = Mat3::Zero();
    Vec3 com_local{0.0, 0.0, 0.0};

    // Orientation plus centre-of-mass position/velocity; the published
    // BodyState converts back to the body origin.
    Vec3 com_world{0.0, 0.0, 0.0};
    Quat orientation{1.0, 0.0, 0.0, 0.0};
    Vec3 velocity{0.0, 0.0, 0.0};
    Vec3 omega{0.0, 0.0, 0.0};

    Vec3 force_acc{0.0, 0.0, 0.0};
    Vec3 torque_acc{0.0, 0.0, 0.0};

    std::vector<Collider> colliders;

    Mat3 inv_inertia_world() const {
        const Mat3 R = orientation.toRotationMatrix();
        return R * inv_inertia_body * R.transpose();
    }
    Vec3 origin() const { return com_world - orientation * com_local; }
    Aabb bounds() const {
        Aabb box;
        const Vec3 x = origin();
        for (const auto& c : colliders) {
            if (c.shape == GeomShape::Sphere) {
                const Vec3 center = x + orientation * c.sphere_center;
                box.grow(center - Vec3::Constant(c.radius));
                box.grow(center + Vec3::Constant(c.radius));
            } else if (c.shape == GeomShape::HField) {
                double top = c.hfield.base;
                for (double h : c.hfield.heights) top = std::max(top, h);
                box.grow(x + Vec3(c.hfield.origin.x(), c.hfield.origin.y(), c.hfield.base));
                box.grow(x + Vec3(c.hfield.origin.x() + (c.hfield.nx - 1) * c.hfield.dx,
                                  c.hfield.origin.y() + (c.hfield.ny - 1) * c.hfield.dy, top));
            } else {
                for (const auto& v : c.verts) box.grow(x + orientation * v);
            }
        }
        box.min -= Vec3::Constant(2.0 * kContactMargin);
        box.max += Vec3::Constant(2.0 * kContactMargin);
        return box;
    }
};

struct World::Site {
    std::string id;
    int body = -1;
    Transform local; // in the owning world-body's frame
    Vec3 prev_velocity{0.0, 0.0, 0.0};
};

World::World(const PhysicsSpec& spec, double dt, SolverConfig solver)
    : dt_(dt), gravity_(spec.gravity), solver_(solver) {
    if (!(dt > 0.0)) throw ValidationError("world dt must be > 0");
    validate_spec(spec);

    std::map<std::string, std::vector<const SpecBody*>> children;
    std::vector<const SpecBody*> roots;
    for (const auto& b : spec.bodies) {
        if (b.parent.empty()) {
            roots.push_back(&b);
        } else {
            children[b.parent].push_back(&b);
        }
    }

    // Flatten depth-first in spec order, composing world transforms. A body
    // with a free joint starts a simulated assembly; hinge joints are frozen
    // at their reference pose and welded into the parent assembly.
    struct Flat {
        const SpecBody* body;
        Transform world;
        int world_body = -1;
        Transform to_root; // pose within the owning world body's frame
    };
    std::vector<Flat> flat;
    {
        struct Item {
            const SpecBody* body;
            Transform parent_world;
        };
        std::vector<Item> stack;
        for (auto it = roots.rbegin(); it != roots.rend(); ++it) stack.push_back({*it, {}});
        while (!stack.empty()) {
            Item item = stack.back();
            stack.pop_back();
            const Transform world = compose(item.parent_world, item.body->transform);
            flat.push_back({item.body, world});
            auto kids = children.find(item.body->id);
            if (kids != children.end()) {
                for (auto it = kids->second.rbegin(); it != kids->second.rend(); ++it) {
                    stack.push_back({*it, world});
                }
            }
        }
    }
    std::map<std::string, std::size_t> flat_index;
    for (std::size_t i = 0; i < flat.size(); ++i) flat_index[flat[i].body->id] = i;

    std::map<int, std::vector<std::size_t>> members_of;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const SpecBody* sb = flat[i].body;
        const bool free_root = sb->joint && sb->joint->type == JointType::Free;
        if (sb->joint && sb->joint->type == JointType::Hinge) {
            frozen_joints_.push_back(sb->joint->name.empty() ? sb->id : sb->joint->name);
        }

        int parent_world = -1;
        Transform parent_to_root;
        if (!sb->parent.empty()) {
            const Flat& parent = flat[flat_index.at(sb->parent)];
            parent_world = parent.world_body;
            parent_to_root = parent.to_root;
        }

        if (!free_root && parent_world >= 0 &&
            bodies_[static_cast<std::size_t>(parent_world)].dynamic) {
            flat[i].world_body = parent_world;
            flat[i].to_root = compose(parent_to_root, sb->transform);
        } else {
            Body wb;
            wb.id = sb->id;
            wb.dynamic = free_root;
            wb.orientation = flat[i].world.orientation;
            wb.com_world = flat[i].world.position; // com_local folded in below
            bodies_.push_back(std::move(wb));
            flat[i].world_body = static_cast<int>(bodies_.size() - 1);
        }
        members_of[flat[i].world_body].push_back(i);
    }

    for (auto& [world_index, members] : members_of) {
        Body& wb = bodies_[static_cast<std::size_t>(world_index)];
        const Transform& root_world = flat[members.front()].world;

        if (wb.dynamic) {
            double mass = 0.0;
            Vec3 com = Vec3::Zero();
            for (auto mi : members) {
                const SpecBody* sb = flat[mi].body;
                mass += sb->mass;
                com += sb->mass * (flat[mi].to_root.position + flat[mi].to_root.orientation * sb->com);
            }
            if (!(mass > 0.0)) {
                throw ValidationError("assembly '" + wb.id + "' has non-positive mass");
            }
            com /= mass;
            Mat3 inertia = Mat3::Zero();
            for (auto mi : members) {
                const SpecBody* sb = flat[mi].body;
                const Mat3 R = flat[mi].to_root.orientation.toRotationMatrix();
                const Vec3 member_com =
                    flat[mi].to_root.position + flat[mi].to_root.orientation * sb->com;
                const Vec3 d = member_com - com;
                inertia += R * sb->inertia * R.transpose() +
                           sb->mass * (Mat3::Identity() * d.squaredNorm() - d * d.transpose());
            }
            Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
            if (es.eigenvalues().minCoeff() <= 0.0) {
                throw ValidationError("assembly '" + wb.id +
                                      "' has a non-positive-definite inertia tensor");
            }
            wb.mass = mass;
            wb.inv_mass = 1.0 / mass;
            wb.com_local = com;
            wb.inertia_body = inertia;
            wb.inv_inertia_body = inertia.inverse();
            wb.com_world = root_world.position + root_world.orientation * com;
        }

        for (auto mi : members) {
            const SpecBody* sb = flat[mi].body;
            for (const auto& g : sb->geoms) {
                Collider col;
                col.shape = g.shape;
                col.friction = g.friction;
                col.restitution = g.restitution;
                const Transform pose = compose(flat[mi].to_root, g.local);
                switch (g.shape) {
                case GeomShape::Sphere:
                    col.radius = g.params.x();
                    col.sphere_center = pose.position;
                    break;
                case GeomShape::Box: {
                    const Vec3 he = g.params;
                    for (int corner = 0; corner < 8; ++corner) {
                        const Vec3 local((corner & 1) ? he.x() : -he.x(),
                                         (corner & 2) ? he.y() : -he.y(),
                                         (corner & 4) ? he.z() : -he.z());
                        col.verts.push_back(pose.apply(local));
                    }
                    static const std::array<std::array<std::uint32_t, 4>, 6> kFaces{{
                        {0, 2, 3, 1},
                        {4, 5, 7, 6},
                        {0, 1, 5, 4},
                        {2, 6, 7, 3},
                        {0, 4, 6, 2},
                        {1, 3, 7, 5},
                    }};
                    for (const auto& f : kFaces) {
                        col.tris.push_back({f[0], f[1], f[2]});
                        col.tris.push_back({f[0], f[2], f[3]});
                    }
                    break;
                }
                case GeomShape::ConvexMesh: {
                    auto it = spec.meshes.find(g.asset);
                    if (it == spec.meshes.end() || !it->second.mesh) {
                        throw ValidationError("mesh asset '" + g.asset +
                                              "' has no payload loaded for simulation");
                    }
                    const TriMesh& mesh = *it->second.mesh;
                    col.verts.reserve(mesh.vertices.size());
                    for (const auto& v : mesh.vertices) col.verts.push_back(pose.apply(v));
                    col.tris = mesh.triangles;
                    break;
                }
                case GeomShape::HField: {
                    if (wb.dynamic) {
                        throw ValidationError("heightfield geoms must be static ('" + sb->id + "')");
                    }
                    auto it = spec.hfields.find(g.asset);
                    if (it == spec.hfields.end() || !it->second.hfield) {
                        throw ValidationError("hfield asset '" + g.asset +
                                              "' has no payload loaded for simulation");
                    }
                    const Quat q = root_world.orientation * pose.orientation;
                    if (std::abs(std::abs(q.w()) - 1.0) > 1e-9) {
                        throw ValidationError("rotated heightfields are not supported ('" + sb->id +
                                              "')");
                    }
                    col.hfield = *it->second.hfield;
                    break;
                }
                }
                wb.colliders.push_back(std::move(col));
            }
        }
    }

    for (const auto& s : spec.sites) {
        const Flat& owner = flat[flat_index.at(s.body)];
        Site site;
        site.id = s.id;
        site.body = owner.world_body;
        site.local = compose(owner.to_root, s.local);
        sites_.push_back(std::move(site));
    }
    sensors_ = spec.sensors;
    contact_force_.assign(bodies_.size(), Vec3::Zero());

    for (auto& site : sites_) {
        const Body& b = bodies_[static_cast<std::size_t>(site.body)];
        const Vec3 site_world = b.origin() + b.orientation * site.local.position;
        site.prev_velocity = b.velocity + b.omega.cross(site_world - b.com_world);
    }
}

World::World(World&&) noexcept = default;
World& World::operator=(World&&) noexcept = default;
World::~World() = default;

int World::body_index(const std::string& id) const {
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        if (bodies_[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

std::size_t World::body_count() const { return bodies_.size(); }

const std::string& World::body_id(std::size_t index) const { return bodies_.at(index).id; }

bool World::has_body(const std::string& id) const { return body_index(id) >= 0; }

bool World::body_dynamic(const std::string& id) const {
    const int i = body_index(id);
    if (i < 0) throw ValidationError("unknown body '" + id + "'");
    return bodies_[static_cast<std::size_t>(i)].dynamic;
}

const BodyState& World::body_state(const std::string& id) const {
    static thread_local BodyState out;
    const int i = body_index(id);
    if (i < 0) throw ValidationError("unknown body '" + id + "'");
    const Body& b = bodies_[static_cast<std::size_t>(i)];
    out.position = b.origin();
    out.orientation = b.orientation;
    out.linear_velocity = b.velocity - b.omega.cross(b.orientation * b.com_local);
    out.angular_velocity = b.omega;
    return out;
}

void World::set_body_state(const std::string& id, const BodyState& state) {
    const int i = body_index(id);
    if (i < 0) throw ValidationError("unknown body '" + id + "'");
    Body& b = bodies_[static_cast<std::size_t>(i)];
    b.orientation = state.orientation.normalized();
    b.com_world = state.position + b.orientation * b.com_local;
    b.omega = state.angular_velocity;
    b.velocity = state.linear_velocity + b.omega.cross(b.orientation * b.com_local);
    for (auto& site : sites_) {
        if (site.body != i) continue;
        const Vec3 site_world = b.origin() + b.orientation * site.local.position;
        site.prev_velocity = b.velocity + b.omega.cross(site_world - b.com_world);
    }
}

std::vector<BodyState> World::body_states() const {
    std::vector<BodyState> out;
    out.reserve(bodies_.size());
    for (const auto& b : bodies_) {
        BodyState s;
        s.position = b.origin();
        s.orientation = b.orientation;
        s.linear_velocity = b.velocity - b.omega.cross(b.orientation * b.com_local);
        s.angular_velocity = b.omega;
        out.push_back(std::move(s));
    }
    return out;
}

void World::apply_external(const std::string& body, const Vec3& force, const Vec3& torque) {
    const int i = body_index(body);
    if (i < 0) throw ValidationError("unknown body '" + body + "'");
    if (!bodies_[static_cast<std::size_t>(i)].dynamic) {
        throw ValidationError("cannot apply external force to static body '" + body + "'");
    }
    pending_.push_back({i, force, torque});
}

namespace {
thread_local std::vector<PairMaterial> g_materials;
} // namespace

void World::detect_contacts(std::vector<Contact>& contacts) const {
    g_materials.clear();

    // Broadphase: id-sorted AABB sweep; the pair order also fixes the
    // impulse resolution order.
    std::vector<std::size_t> order(bodies_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return bodies_[a].id < bodies_[b].id; });

    std::vector<Aabb> boxes(bodies_.size());
    for (std::size_t i = 0; i < bodies_.size(); ++i) boxes[i] = bodies_[i].bounds();

    const auto world_verts = [](const Body& body, const Collider& c) {
        std::vector<Vec3> out;
        out.reserve(c.verts.size());
        const Vec3 x = body.origin();
        for (const auto& v : c.verts) out.push_back(x + body.orientation * v);
        return out;
    };

    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t ia = order[oi];
            const std::size_t ib = order[oj];
            const Body& a = bodies_[ia];
            const Body& b = bodies_[ib];
            if (!a.dynamic && !b.dynamic) continue;
            if (a.colliders.empty() || b.colliders.empty()) continue;
            if (!boxes[ia].overlaps(boxes[ib])) continue;

            for (const auto& ca : a.colliders) {
                for (const auto& cb : b.colliders) {
                    std::optional<collide::ContactPoint> hit;
                    bool flip = false; // result normal is b->a, flip to a->b

                    if (ca.shape == GeomShape::Sphere && cb.shape == GeomShape::Sphere) {
                        const Vec3 pa = a.origin() + a.orientation * ca.sphere_center;
                        const Vec3 pb = b.origin() + b.orientation * cb.sphere_center;
                        const Vec3 d = pb - pa;
                        const double dist = d.norm();
                        if (dist <= ca.radius + cb.radius + kContactMargin && dist > 1e-12) {
                            collide::ContactPoint c;
                            c.normal = d / dist;
                            c.penetration = std::max(0.0, ca.radius + cb.radius - dist);
                            c.point = pa + c.normal * (ca.radius - 0.5 * c.penetration);
                            hit = c;
                        }
                    } else if (ca.shape == GeomShape::HField || cb.shape == GeomShape::HField) {
                        const bool a_is_field = ca.shape == GeomShape::HField;
                        const Collider& field = a_is_field ? ca : cb;
                        const Collider& other = a_is_field ? cb : ca;
                        const Body& field_body = a_is_field ? a : b;
                        const Body& other_body = a_is_field ? b : a;
                        if (other.shape == GeomShape::HField) continue;

                        std::vector<Vec3> probes;
                        if (other.shape == GeomShape::Sphere) {
                            const Vec3 center =
                                other_body.origin() + other_body.orientation * other.sphere_center;
                            probes.push_back(center - Vec3(0.0, 0.0, other.radius));
                        } else {
                            probes = world_verts(other_body, other);
                        }
                        // Result normal points terrain -> object.
                        hit = collide::points_vs_heightfield(probes, field.hfield,
                                                             field_body.origin(), kContactMargin);
                        flip = !a_is_field;
                    } else if (ca.shape == GeomShape::Sphere || cb.shape == GeomShape::Sphere) {
                        const bool a_is_sphere = ca.shape == GeomShape::Sphere;
                        const Collider& sphere = a_is_sphere ? ca : cb;
                        const Collider& hull = a_is_sphere ? cb : ca;
                        const Body& sphere_body = a_is_sphere ? a : b;
                        const Body& hull_body = a_is_sphere ? b : a;
                        const Vec3 center =
                            sphere_body.origin() + sphere_body.orientation * sphere.sphere_center;
                        const auto verts = world_verts(hull_body, hull);
                        // Result normal points hull -> sphere.
                        hit = collide::sphere_vs_convex(center, sphere.radius, verts, hull.tris,
                                                        kContactMargin);
                        flip = a_is_sphere;
                    } else {
                        const auto va = world_verts(a, ca);
                        const auto vb = world_verts(b, cb);
                        hit = collide::convex_vs_convex(va, vb);
                    }

                    if (!hit) continue;
                    Contact contact;
                    contact.body_a = a.id;
                    contact.body_b = b.id;
                    contact.point = hit->point;
                    contact.normal = flip ? Vec3(-hit->normal) : hit->normal;
                    contact.penetration = hit->penetration;
                    contacts.push_back(std::move(contact));
                    g_materials.push_back(
                        {std::sqrt(std::max(0.0, ca.friction * cb.friction)),
                         std::max(ca.restitution, cb.restitution)});
                }
            }
        }
    }
}

void World::resolve_contacts(std::vector<Contact>& contacts) {
    struct Row {
        int a, b;
        Vec3 ra, rb;
        Vec3 normal, t1, t2;
        double target = 0.0;
        double friction = 0.0;
        double jn = 0.0, jt1 = 0.0, jt2 = 0.0;
        double kn = 1.0, kt1 = 1.0, kt2 = 1.0;
        Contact* record;
    };
    std::vector<Row> rows;
    rows.reserve(contacts.size());

    const auto vel_at = [&](const Body& body, const Vec3& r) {
        return body.velocity + body.omega.cross(r);
    };

    for (std::size_t ci = 0; ci < contacts.size(); ++ci) {
        Contact& c = contacts[ci];
        Row row;
        row.a = body_index(c.body_a);
        row.b = body_index(c.body_b);
        const Body& a = bodies_[static_cast<std::size_t>(row.a)];
        const Body& b = bodies_[static_cast<std::size_t>(row.b)];
        row.ra = c.point - a.com_world;
        row.rb = c.point - b.com_world;
        row.normal = c.normal;
        const Vec3 ref = std::abs(row.normal.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
        row.t1 = row.normal.cross(ref).normalized();
        row.t2 = row.normal.cross(row.t1);

        const Mat3 ia = a.dynamic ? a.inv_inertia_world() : Mat3::Zero();
        const Mat3 ib = b.dynamic ? b.inv_inertia_world() : Mat3::Zero();
        const auto effective_mass = [&](const Vec3& dir) {
            double k = a.inv_mass + b.inv_mass;
            const Vec3 ran = row.ra.cross(dir);
            const Vec3 rbn = row.rb.cross(dir);
            k += dir.dot((ia * ran).cross(row.ra)) + dir.dot((ib * rbn).cross(row.rb));
            return k;
        };
        row.kn = effective_mass(row.normal);
        row.kt1 = effective_mass(row.t1);
        row.kt2 = effective_mass(row.t2);

        const PairMaterial mat =
            ci < g_materials.size() ? g_materials[ci] : PairMaterial{0.5, 0.0};
        row.friction = mat.friction;

        // Restitution target from the pre-solve approach speed; Baumgarte
        // bias as the floor so stacks recover penetration.
        const double vn = (vel_at(b, row.rb) - vel_at(a, row.ra)).dot(row.normal);
        const double approach = -vn;
        const double bounce =
            approach > solver_.restitution_threshold ? mat.restitution * approach : 0.0;
        const double bias = solver_.baumgarte / dt_ * c.penetration;
        row.target = std::max(bounce, bias);
        row.record = &c;
        rows.push_back(std::move(row));
    }

    for (int iter = 0; iter < solver_.iterations; ++iter) {
        for (auto& row : rows) {
            Body& a = bodies_[static_cast<std::size_t>(row.a)];
            Body& b = bodies_[static_cast<std::size_t>(row.b)];
            const Mat3 ia = a.dynamic ? a.inv_inertia_world() : Mat3::Zero();
            const Mat3 ib = b.dynamic ? b.inv_inertia_world() : Mat3::Zero();

            const auto apply = [&](const Vec3& impulse) {
                if (a.dynamic) {
                    a.velocity -= impulse * a.inv_mass;
                    a.omega -= ia * row.ra.cross(impulse);
                }
                if (b.dynamic) {
                    b.velocity += impulse * b.inv_mass;
                    b.omega += ib * row.rb.cross(impulse);
                }
                contact_force_[static_cast<std::size_t>(row.a)] -= impulse;
                contact_force_[static_cast<std::size_t>(row.b)] += impulse;
            };

            const double vn = (vel_at(b, row.rb) - vel_at(a, row.ra)).dot(row.normal);
            const double jn0 = row.jn;
            row.jn = std::max(0.0, row.jn + (row.target - vn) / row.kn);
            apply(row.normal * (row.jn - jn0));

            const double max_t = row.friction * row.jn;
            const double vt1 = (vel_at(b, row.rb) - vel_at(a, row.ra)).dot(row.t1);
            const double jt10 = row.jt1;
            row.jt1 = std::clamp(row.jt1 - vt1 / row.kt1, -max_t, max_t);
            apply(row.t1 * (row.jt1 - jt10));

            const double vt2 = (vel_at(b, row.rb) - vel_at(a, row.ra)).dot(row.t2);
            const double jt20 = row.jt2;
            row.jt2 = std::clamp(row.jt2 - vt2 / row.kt2, -max_t, max_t);
            apply(row.t2 * (row.jt2 - jt20));
        }
    }

    for (const auto& row : rows) row.record->normal_impulse = row.jn;
}

void World::check_finite() const {
    for (const auto& b : bodies_) {
        if (!b.dynamic) continue;
        const bool ok = b.com_world.allFinite() && b.velocity.allFinite() && b.omega.allFinite() &&
                        std::isfinite(b.orientation.w()) && std::isfinite(b.orientation.x()) &&
                        std::isfinite(b.orientation.y()) && std::isfinite(b.orientation.z());
        if (!ok) {
            throw DivergenceError(
                b.id, "simulation diverged: non-finite state on body '" + b.id + "'");
        }
    }
}

StepResult World::step() {
    // Drain queued external forces; each acts for exactly this step.
    for (auto& b : bodies_) {
        b.force_acc = Vec3::Zero();
        b.torque_acc = Vec3::Zero();
    }
    for (const auto& f : pending_) {
        Body& b = bodies_[static_cast<std::size_t>(f.body)];
        b.force_acc += f.force;
        b.torque_acc += f.torque;
    }
    pending_.clear();

    // Integrate velocities (semi-implicit Euler).
    for (auto& b : bodies_) {
        if (!b.dynamic) continue;
        b.velocity += dt_ * (gravity_ + b.inv_mass * b.force_acc);
        b.omega += dt_ * (b.inv_inertia_world() * b.torque_acc);
    }

    // Contacts.
    std::fill(contact_force_.begin(), contact_force_.end(), Vec3::Zero());
    StepResult result;
    detect_contacts(result.contacts);
    resolve_contacts(result.contacts);

    // Integrate positions.
    for (auto& b : bodies_) {
        if (!b.dynamic) continue;
        b.com_world += dt_ * b.velocity;
        const Quat dq(0.0, b.omega.x(), b.omega.y(), b.omega.z());
        const Quat qdot = dq * b.orientation;
        b.orientation.w() += 0.5 * dt_ * qdot.w();
        b.orientation.x() += 0.5 * dt_ * qdot.x();
        b.orientation.y() += 0.5 * dt_ * qdot.y();
        b.orientation.z() += 0.5 * dt_ * qdot.z();
        b.orientation.normalize();
    }

    ++step_count_;
    check_finite();

    result.readings = eval_sensors();
    for (auto& site : sites_) {
        const Body& b = bodies_[static_cast<std::size_t>(site.body)];
        const Vec3 site_world = b.origin() + b.orientation * site.local.position;
        site.prev_velocity = b.velocity + b.omega.cross(site_world - b.com_world);
    }
    return result;
}

std::vector<SensorReading> World::eval_sensors() const {
    std::vector<SensorReading> readings;
    const double now = sim_time();
    for (const auto& sensor : sensors_) {
        if (sensor.rate_hz > 0.0 && step_count_ > 0) {
            const auto divisor = std::max<std::uint64_t>(
                1, static_cast<std::uint64_t>(std::llround(1.0 / (dt_ * sensor.rate_hz))));
            if (step_count_ % divisor != 0) continue;
        }
        const Site* site = nullptr;
        for (const auto& s : sites_) {
            if (s.id == sensor.site) {
                site = &s;
                break;
            }
        }
        if (!site) continue;
        const Body& b = bodies_[static_cast<std::size_t>(site->body)];
        const Quat site_rot = b.orientation * site->local.orientation;
        const Mat3 Rt = site_rot.toRotationMatrix().transpose();
        const Vec3 site_world = b.origin() + b.orientation * site->local.position;

        SensorReading reading;
        reading.sensor = sensor.id;
        reading.timestamp = now;
        switch (sensor.kind) {
        case SensorKind::Imu: {
            const Vec3 v = b.velocity + b.omega.cross(site_world - b.com_world);
            const Vec3 accel_world = (v - site->prev_velocity) / dt_ - gravity_;
            const Vec3 accel = Rt * accel_world;
            const Vec3 gyro = Rt * b.omega;
            reading.values = {accel.x(), accel.y(), accel.z(), gyro.x(), gyro.y(), gyro.z()};
            break;
        }
        case SensorKind::Force: {
            const Vec3 f = Rt * (contact_force_[static_cast<std::size_t>(site->body)] / dt_);
            reading.values = {f.x(), f.y(), f.z()};
            break;
        }
        case SensorKind::Pose: {
            reading.values = {site_world.x(), site_world.y(), site_world.z(), site_rot.w(),
                              site_rot.x(),   site_rot.y(),   site_rot.z()};
            break;
        }
        }
        readings.push_back(std::move(reading));
    }
    return readings;
}

} // namespace simbridge
