#include "simbridge/runtime.hpp"

#include "simbridge/errors.hpp"

#include <chrono>
#include <cstring>

namespace simbridge {

namespace {

// FNV-1a 64 over the snapshot payload.
struct Fnv {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    void feed(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash ^= bytes[i];
            hash *= 0x00000100000001b3ull;
        }
    }
    void feed(double v) { feed(&v, sizeof(v)); }
    void feed(std::uint64_t v) { feed(&v, sizeof(v)); }
    void feed(const std::string& s) {
        const std::uint64_t n = s.size();
        feed(n);
        feed(s.data(), s.size());
    }
    void feed(const Vec3& v) {
        feed(v.x());
        feed(v.y());
        feed(v.z());
    }
    void feed(const Quat& q) {
        feed(q.w());
        feed(q.x());
        feed(q.y());
        feed(q.z());
    }
};

} // namespace

std::uint64_t Snapshot::compute_checksum() const {
    Fnv h;
    h.feed(sim_time);
    h.feed(step);
    h.feed(static_cast<std::uint64_t>(terminal));
    h.feed(static_cast<std::uint64_t>(body_ids.size()));
    for (const auto& id : body_ids) h.feed(id);
    for (const auto& s : states) {
        h.feed(s.position);
        h.feed(s.orientation);
        h.feed(s.linear_velocity);
        h.feed(s.angular_velocity);
    }
    h.feed(static_cast<std::uint64_t>(readings.size()));
    for (const auto& r : readings) {
        h.feed(r.sensor);
        h.feed(r.timestamp);
        h.feed(static_cast<std::uint64_t>(r.values.size()));
        for (double v : r.values) h.feed(v);
    }
    h.feed(static_cast<std::uint64_t>(contacts.size()));
    for (const auto& c : contacts) {
        h.feed(c.body_a);
        h.feed(c.body_b);
        h.feed(c.point);
        h.feed(c.normal);
        h.feed(c.penetration);
        h.feed(c.normal_impulse);
    }
    return h.hash;
}

Snapshot make_snapshot(const World& world, const StepResult& result, bool terminal) {
    Snapshot snap;
    snap.sim_time = world.sim_time();
    snap.step = world.step_count();
    snap.terminal = terminal;
    snap.body_ids.reserve(world.body_count());
    for (std::size_t i = 0; i < world.body_count(); ++i) snap.body_ids.push_back(world.body_id(i));
    snap.states = world.body_states();
    snap.readings = result.readings;
    snap.contacts = result.contacts;
    snap.checksum = snap.compute_checksum();
    return snap;
}

SyncRuntime::SyncRuntime(World world, RuntimeConfig config)
    : world_(std::move(world)), config_(std::move(config)) {
    if (!(config_.physics_hz > 0.0)) throw ValidationError("physics_hz must be > 0");
    StepResult initial;
    initial.readings = world_.eval_sensors();
    slot_ = make_snapshot(world_, initial, false);
}

SyncRuntime::~SyncRuntime() {
    stop_flag_.store(true);
    if (thread_.joinable()) thread_.join();
}

void SyncRuntime::add_observer(std::function<void(const Snapshot&)> fn) {
    if (started_.load()) throw Error("add_observer must run before start()");
    observers_.push_back(std::move(fn));
}

void SyncRuntime::start() {
    bool expected = false;
    if (!started_.compare_exchange_strong(expected, true)) {
        throw Error("runtime already started");
    }
    if (config_.max_steps && *config_.max_steps == 0) {
        // Empty run: publish the initial snapshot only.
        Snapshot snap = latest();
        for (auto& fn : observers_) fn(snap);
        finished_.store(true);
        done_cv_.notify_all();
        return;
    }
    thread_ = std::thread([this] { loop(); });
}

bool SyncRuntime::running() const { return started_.load() && !finished_.load(); }

void SyncRuntime::wait() {
    std::unique_lock lock(done_mutex_);
    done_cv_.wait(lock, [this] { return finished_.load(); });
}

void SyncRuntime::publish(Snapshot snap) {
    {
        std::lock_guard lock(slot_mutex_);
        slot_ = snap;
    }
    // Observers run on the physics thread, outside the slot lock, so a
    // callback may call latest() without deadlocking.
    for (auto& fn : observers_) fn(snap);
}

void SyncRuntime::loop() {
    using clock = std::chrono::steady_clock;
    const auto period =
        std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / config_.physics_hz));
    auto deadline = clock::now();

    while (!stop_flag_.load()) {
        if (config_.max_steps && world_.step_count() >= *config_.max_steps) break;
        if (config_.realtime) {
            deadline += period;
            std::this_thread::sleep_until(deadline);
        }

        {
            std::lock_guard lock(force_mutex_);
            for (const auto& cmd : force_queue_) {
                try {
                    world_.apply_external(cmd.body, cmd.force, cmd.torque);
                } catch (const Error& e) {
                    std::lock_guard status(status_mutex_);
                    last_error_ = e.what();
                }
            }
            force_queue_.clear();
        }

        StepResult result;
        try {
            result = world_.step();
        } catch (const Error& e) {
            {
                std::lock_guard status(status_mutex_);
                last_error_ = e.what();
            }
            break;
        }
        publish(make_snapshot(world_, result, false));
    }

    {
        std::lock_guard lock(slot_mutex_);
        slot_.terminal = true;
        slot_.checksum = slot_.compute_checksum();
    }
    finished_.store(true);
    {
        std::lock_guard lock(done_mutex_);
    }
    done_cv_.notify_all();
}

Snapshot SyncRuntime::latest() const {
    std::lock_guard lock(slot_mutex_);
    return slot_;
}

void SyncRuntime::push_force(const std::string& body, const Vec3& force, const Vec3& torque) {
    std::lock_guard lock(force_mutex_);
    force_queue_.push_back({body, force, torque});
}

Snapshot SyncRuntime::stop() {
    stop_flag_.store(true);
    if (thread_.joinable()) thread_.join();
    if (started_.load() && !finished_.load()) {
        // start() short-circuit path (max_steps == 0) already finished.
        finished_.store(true);
    }
    Snapshot snap = latest();
    if (!snap.terminal) {
        std::lock_guard lock(slot_mutex_);
        slot_.terminal = true;
        slot_.checksum = slot_.compute_checksum();
        snap = slot_;
    }
    return snap;
}

std::string SyncRuntime::last_error() const {
    std::lock_guard lock(status_mutex_);
    return last_error_;
}

} // namespace simbridge
