#pragma once

#include "simbridge/world.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace simbridge {

// Immutable world state published after every physics step. The checksum
// covers every payload byte, so a consumer can prove it never saw a torn
// snapshot.
struct Snapshot {
    double sim_time = 0.0;
    std::uint64_t step = 0;
    bool terminal = false;
    std::vector<std::string> body_ids;
    std::vector<BodyState> states;
    std::vector<SensorReading> readings;
    std::vector<Contact> contacts;
    std::uint64_t checksum = 0;

    std::uint64_t compute_checksum() const;
    bool valid() const { return checksum == compute_checksum(); }
};

struct RuntimeConfig {
    double physics_hz = 1000.0;
    bool realtime = false; // pace to wall clock; free-run otherwise
    std::optional<std::uint64_t> max_steps;
};

// Runs the physics loop in its own thread and exposes the latest snapshot
// through a single mutex-guarded slot. Exactly one producer; any number of
// polling consumers.
class SyncRuntime {
public:
    SyncRuntime(World world, RuntimeConfig config);
    ~SyncRuntime();

    SyncRuntime(const SyncRuntime&) = delete;
    SyncRuntime& operator=(const SyncRuntime&) = delete;

    // Observers run on the physics thread once per step, after the snapshot
    // is published. Register before start().
    void add_observer(std::function<void(const Snapshot&)> fn);

    void start();
    bool running() const;
    // Blocks until the loop exits by itself (max_steps reached).
    void wait();

    Snapshot latest() const;

    // Thread-safe; consumed at the next step boundary. Unknown bodies are
    // reported through last_error() rather than synchronously.
    void push_force(const std::string& body, const Vec3& force, const Vec3& torque = Vec3::Zero());

    Snapshot stop();

    std::string last_error() const;

private:
    void loop();
    void publish(Snapshot snap);

    World world_;
    RuntimeConfig config_;
    mutable std::mutex slot_mutex_;
    Snapshot slot_;
    std::vector<std::function<void(const Snapshot&)>> observers_;

    struct ForceCmd {
        std::string body;
        Vec3 force;
        Vec3 torque;
    };
    std::mutex force_mutex_;
    std::vector<ForceCmd> force_queue_;

    mutable std::mutex status_mutex_;
    std::string last_error_;

    std::thread thread_;
    std::atomic<bool> stop_flag_{false};
    std::atomic<bool> started_{false};
    std::atomic<bool> finished_{false};
    mutable std::mutex done_mutex_;
    std::condition_variable done_cv_;
};

Snapshot make_snapshot(const World& world, const StepResult& result, bool terminal = false);

} // namespace simbridge
