#pragma once

#include "simbridge/physics_spec.hpp"
#include "simbridge/runtime.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace simbridge {

// Bus message. Numeric payloads (Pose/Imu/Wrench/JointCmd) live in
// `values`; Raw and Subscribe payloads live in `bytes`.
struct Message {
    std::string topic;
    std::uint64_t timestamp_ns = 0;
    PayloadKind kind = PayloadKind::Raw;
    std::vector<double> values;
    std::vector<std::uint8_t> bytes;

    bool operator==(const Message&) const = default;
};

bool topic_well_formed(const std::string& topic);

// Wire frame, all little-endian:
//   u32 frame_len (bytes after this field) | u16 topic_len | topic UTF-8 |
//   u64 timestamp_ns | u8 kind tag | payload (f64 array or raw bytes)
// Tags: 0=Subscribe (control), 1=Pose, 2=Imu, 3=Wrench, 4=JointCmd, 5=Raw.
std::vector<std::uint8_t> encode_frame(const Message& message);
Message decode_frame(const std::vector<std::uint8_t>& bytes);

constexpr std::size_t kMaxFrameBytes = 16ull * 1024 * 1024;

// Blocking per-subscriber message queue.
class Subscription {
public:
    // Waits up to `timeout_ms` for the next message; nullopt on timeout or
    // once the bus (or remote connection) is closed and drained.
    std::optional<Message> next(int timeout_ms = 1000);
    bool closed() const;

private:
    friend class MessageBus;
    friend class BusClient;
    void push(const Message& m);
    void close();

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Message> queue_;
    bool closed_ = false;
};

// In-process topic bus. Every subscriber active at publish time receives
// the message exactly once, in per-topic publish order.
class MessageBus {
public:
    ~MessageBus();

    void publish(const Message& message);
    std::shared_ptr<Subscription> subscribe(const std::string& topic);
    void close();

    // First publish on a topic binds its payload kind; later mismatches
    // throw ValidationError.
    std::optional<PayloadKind> bound_kind(const std::string& topic) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, PayloadKind> bound_;
    std::map<std::string, std::vector<std::weak_ptr<Subscription>>> subs_;
    bool closed_ = false;
};

// TCP transport. The server forwards published frames to remote
// subscribers; remote publishes are injected into the local bus.
class BusServer {
public:
    BusServer(MessageBus& bus, std::uint16_t port);
    ~BusServer();
    std::uint16_t port() const { return port_; }
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
};

class BusClient {
public:
    explicit BusClient(const std::string& host, std::uint16_t port);
    ~BusClient();

    void publish(const Message& message);
    std::shared_ptr<Subscription> subscribe(const std::string& topic);
    bool connected() const;
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Auto-wiring between a spec and a runtime: sensor readings from every new
// snapshot are published on their derived topics, inbound actuator commands
// become external forces before the next step. Construct before
// runtime.start().
class SpecWiring {
public:
    SpecWiring(MessageBus& bus, const PhysicsSpec& spec, SyncRuntime& runtime);
    ~SpecWiring();

    std::uint64_t ignored_messages() const { return ignored_.load(); }
    const std::vector<TopicSpec>& topics() const { return topics_; }

private:
    void pump_actuators();

    MessageBus& bus_;
    SyncRuntime& runtime_;
    std::vector<TopicSpec> topics_;
    struct ActuatorSub {
        SpecActuator actuator;
        std::shared_ptr<Subscription> sub;
    };
    std::vector<ActuatorSub> actuator_subs_;
    std::atomic<std::uint64_t> ignored_{0};
};

} // namespace simbridge
