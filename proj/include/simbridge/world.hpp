#pragma once

#include "simbridge/physics_spec.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace simbridge {

struct BodyState {
    Vec3 position{0.0, 0.0, 0.0};
    Quat orientation{1.0, 0.0, 0.0, 0.0};
    Vec3 linear_velocity{0.0, 0.0, 0.0};
    Vec3 angular_velocity{0.0, 0.0, 0.0};
};

struct Contact {
    std::string body_a;
    std::string body_b;
    Vec3 point{0.0, 0.0, 0.0};
    Vec3 normal{0.0, 0.0, 1.0}; // unit, a -> b
    double penetration = 0.0;   // >= 0
    double normal_impulse = 0.0;
};

struct SensorReading {
    std::string sensor;
    double timestamp = 0.0;
    // Imu: accel xyz + gyro xyz (site frame). Force: 3 N (site frame).
    // Pose: px py pz qw qx qy qz.
    std::vector<double> values;
};

struct StepResult {
    std::vector<Contact> contacts;
    std::vector<SensorReading> readings;
};

struct SolverConfig {
    int iterations = 8;
    double baumgarte = 0.2;
    double restitution_threshold = 0.5; // m/s; below this impacts are inelastic
};

// Minimal deterministic rigid-body world. Bodies are free rigid bodies;
// hinge joints in the spec are frozen at their reference configuration
// (the child is welded to its parent) and noted in `frozen_joints`.
class World {
public:
    World(const PhysicsSpec& spec, double dt, SolverConfig solver = {});
    World(World&&) noexcept;
    World& operator=(World&&) noexcept;
    World(const World&) = delete;
    World& operator=(const World&) = delete;
    ~World();

    // Fixed phase order: drain external forces, integrate velocities,
    // detect contacts, resolve impulses, integrate positions, evaluate
    // sensors. Throws DivergenceError when a state goes non-finite.
    StepResult step();

    // Queues a world-frame force/torque on a dynamic body for exactly the
    // next step. Throws ValidationError for unknown or static targets.
    void apply_external(const std::string& body, const Vec3& force, const Vec3& torque = Vec3::Zero());

    std::vector<SensorReading> eval_sensors() const;

    double dt() const { return dt_; }
    std::uint64_t step_count() const { return step_count_; }
    double sim_time() const { return static_cast<double>(step_count_) * dt_; }
    const Vec3& gravity() const { return gravity_; }

    std::size_t body_count() const;
    const std::string& body_id(std::size_t index) const;
    bool has_body(const std::string& id) const;
    bool body_dynamic(const std::string& id) const;
    const BodyState& body_state(const std::string& id) const;
    void set_body_state(const std::string& id, const BodyState& state);
    std::vector<BodyState> body_states() const; // spec order

    const std::vector<std::string>& frozen_joints() const { return frozen_joints_; }
    const SolverConfig& solver() const { return solver_; }

private:
    struct Body;
    struct Site;
    struct PendingForce {
        int body = -1;
        Vec3 force{0.0, 0.0, 0.0};
        Vec3 torque{0.0, 0.0, 0.0};
    };

    int body_index(const std::string& id) const;
    void detect_contacts(std::vector<Contact>& contacts) const;
    void resolve_contacts(std::vector<Contact>& contacts);
    void check_finite() const;

    double dt_;
    Vec3 gravity_;
    SolverConfig solver_;
    std::uint64_t step_count_ = 0;
    std::vector<Body> bodies_;
    std::vector<Site> sites_;
    std::vector<SpecSensor> sensors_;
    std::vector<PendingForce> pending_;
    std::vector<std::string> frozen_joints_;
    std::vector<Vec3> contact_force_; // per body, world frame, this step
};

} // namespace simbridge
