#include "simbridge/msgbus.hpp"

#include "simbridge/errors.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstring>

namespace simbridge {

namespace {

std::size_t payload_arity(PayloadKind kind) {
    switch (kind) {
    case PayloadKind::Pose: return 7;
    case PayloadKind::Imu: return 6;
    case PayloadKind::Wrench: return 3;
    default: return 0; // JointCmd: any; Raw/Subscribe: bytes
    }
}

bool numeric_kind(PayloadKind kind) {
    return kind == PayloadKind::Pose || kind == PayloadKind::Imu ||
           kind == PayloadKind::Wrench || kind == PayloadKind::JointCmd;
}

void validate_message(const Message& m) {
    if (!topic_well_formed(m.topic)) throw ValidationError("malformed topic '" + m.topic + "'");
    if (m.topic.size() > 65535) throw ValidationError("topic too long");
    if (numeric_kind(m.kind)) {
        const std::size_t arity = payload_arity(m.kind);
        if (arity && m.values.size() != arity) {
            throw ValidationError(std::string(to_string(m.kind)) + " payload needs " +
                                  std::to_string(arity) + " values, got " +
                                  std::to_string(m.values.size()));
        }
        if (!m.bytes.empty()) throw ValidationError("numeric payloads use values, not bytes");
    }
}

} // namespace

bool topic_well_formed(const std::string& topic) {
    if (topic.empty()) return false;
    for (char c : topic) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '/';
        if (!ok) return false;
    }
    return true;
}

std::vector<std::uint8_t> encode_frame(const Message& message) {
    validate_message(message);
    const std::size_t payload_bytes =
        numeric_kind(message.kind) ? message.values.size() * 8 : message.bytes.size();
    const std::size_t body = 2 + message.topic.size() + 8 + 1 + payload_bytes;
    if (4 + body > kMaxFrameBytes) throw ValidationError("frame exceeds 16 MiB");

    std::vector<std::uint8_t> out;
    out.reserve(4 + body);
    const auto put = [&out](const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    };
    const auto put_u32 = [&put](std::uint32_t v) { put(&v, 4); };
    const auto put_u16 = [&put](std::uint16_t v) { put(&v, 2); };

    put_u32(static_cast<std::uint32_t>(body));
    put_u16(static_cast<std::uint16_t>(message.topic.size()));
    put(message.topic.data(), message.topic.size());
    put(&message.timestamp_ns, 8);
    const std::uint8_t tag = static_cast<std::uint8_t>(message.kind);
    put(&tag, 1);
    if (numeric_kind(message.kind)) {
        for (double v : message.values) put(&v, 8);
    } else {
        put(message.bytes.data(), message.bytes.size());
    }
    return out;
}

Message decode_frame(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    const auto take = [&](void* dst, std::size_t n) {
        if (pos + n > bytes.size()) throw ParseError("frame truncated");
        std::memcpy(dst, bytes.data() + pos, n);
        pos += n;
    };
    std::uint32_t frame_len = 0;
    take(&frame_len, 4);
    if (frame_len + 4ull > kMaxFrameBytes) throw ParseError("frame exceeds 16 MiB");
    if (bytes.size() != frame_len + 4ull) {
        throw ParseError("frame length mismatch: header says " + std::to_string(frame_len) +
                         ", buffer holds " + std::to_string(bytes.size() - 4));
    }
    std::uint16_t topic_len = 0;
    take(&topic_len, 2);
    Message m;
    m.topic.resize(topic_len);
    take(m.topic.data(), topic_len);
    take(&m.timestamp_ns, 8);
    std::uint8_t tag = 0;
    take(&tag, 1);
    if (tag > 5) throw ParseError("unknown payload tag " + std::to_string(tag));
    m.kind = static_cast<PayloadKind>(tag);

    const std::size_t rest = bytes.size() - pos;
    if (numeric_kind(m.kind)) {
        if (rest % 8 != 0) throw ParseError("numeric payload not a multiple of 8 bytes");
        const std::size_t arity = payload_arity(m.kind);
        if (arity && rest / 8 != arity) {
            throw ParseError(std::string(to_string(m.kind)) + " payload needs " +
                             std::to_string(arity) + " values, got " + std::to_string(rest / 8));
        }
        m.values.resize(rest / 8);
        for (auto& v : m.values) take(&v, 8);
    } else {
        m.bytes.resize(rest);
        if (rest) take(m.bytes.data(), rest);
    }
    if (!topic_well_formed(m.topic) && m.kind != PayloadKind::Subscribe) {
        throw ParseError("malformed topic in frame");
    }
    return m;
}

std::optional<Message> Subscription::next(int timeout_ms) {
    std::unique_lock lock(mutex_);
    if (timeout_ms <= 0) {
        if (queue_.empty()) return std::nullopt;
    } else {
        cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                     [this] { return !queue_.empty() || closed_; });
        if (queue_.empty()) return std::nullopt;
    }
    Message m = std::move(queue_.front());
    queue_.pop_front();
    return m;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_ && queue_.empty();
}

void Subscription::push(const Message& m) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        queue_.push_back(m);
    }
    cv_.notify_all();
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

MessageBus::~MessageBus() { close(); }

void MessageBus::publish(const Message& message) {
    validate_message(message);
    if (message.kind == PayloadKind::Subscribe) {
        throw ValidationError("Subscribe frames are transport control, not publishable");
    }
    std::vector<std::shared_ptr<Subscription>> targets;
    {
        std::lock_guard lock(mutex_);
        if (closed_) throw Error("bus is closed");
        auto [it, inserted] = bound_.emplace(message.topic, message.kind);
        if (!inserted && it->second != message.kind) {
            throw ValidationError("topic '" + message.topic + "' is bound to " +
                                  to_string(it->second) + ", got " + to_string(message.kind));
        }
        auto subs = subs_.find(message.topic);
        if (subs != subs_.end()) {
            auto& list = subs->second;
            for (auto it2 = list.begin(); it2 != list.end();) {
                if (auto sp = it2->lock()) {
                    targets.push_back(std::move(sp));
                    ++it2;
                } else {
                    it2 = list.erase(it2);
                }
            }
        }
    }
    for (auto& sub : targets) sub->push(message);
}

std::shared_ptr<Subscription> MessageBus::subscribe(const std::string& topic) {
    if (!topic_well_formed(topic)) throw ValidationError("malformed topic '" + topic + "'");
    auto sub = std::shared_ptr<Subscription>(new Subscription());
    std::lock_guard lock(mutex_);
    subs_[topic].push_back(sub);
    return sub;
}

void MessageBus::close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    for (auto& [topic, list] : subs_) {
        for (auto& weak : list) {
            if (auto sp = weak.lock()) sp->close();
        }
    }
}

std::optional<PayloadKind> MessageBus::bound_kind(const std::string& topic) const {
    std::lock_guard lock(mutex_);
    auto it = bound_.find(topic);
    if (it == bound_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// TCP transport

namespace {

bool send_all(int fd, const std::uint8_t* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
        const ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

bool recv_all(int fd, std::uint8_t* data, std::size_t size) {
    std::size_t got = 0;
    while (got < size) {
        const ssize_t n = ::recv(fd, data + got, size - got, 0);
        if (n <= 0) return false;
        got += static_cast<std::size_t>(n);
    }
    return true;
}

// Reads one length-prefixed frame; empty on EOF/oversize.
std::optional<std::vector<std::uint8_t>> read_frame(int fd) {
    std::uint8_t header[4];
    if (!recv_all(fd, header, 4)) return std::nullopt;
    std::uint32_t len = 0;
    std::memcpy(&len, header, 4);
    if (len + 4ull > kMaxFrameBytes) return std::nullopt;
    std::vector<std::uint8_t> frame(len + 4ull);
    std::memcpy(frame.data(), header, 4);
    if (!recv_all(fd, frame.data() + 4, len)) return std::nullopt;
    return frame;
}

} // namespace

struct BusServer::Impl {
    MessageBus& bus;
    int listen_fd = -1;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};

    std::mutex sessions_mutex;
    std::vector<std::thread> sessions;

    explicit Impl(MessageBus& b) : bus(b) {}

    void run_session(int fd) {
        std::mutex send_mutex;
        std::vector<std::thread> forwarders;
        std::atomic<bool> session_dead{false};

        for (;;) {
            auto frame = read_frame(fd);
            if (!frame) break;
            Message m;
            try {
                m = decode_frame(*frame);
            } catch (const Error&) {
                break; // malformed frame closes the connection
            }
            if (m.kind == PayloadKind::Subscribe) {
                const std::string topic(m.bytes.begin(), m.bytes.end());
                if (!topic_well_formed(topic)) break;
                auto sub = bus.subscribe(topic);
                forwarders.emplace_back([fd, sub, &send_mutex, &session_dead, this] {
                    while (!session_dead.load() && !stopping.load()) {
                        auto msg = sub->next(50);
                        if (!msg) {
                            if (sub->closed()) break;
                            continue;
                        }
                        const auto bytes = encode_frame(*msg);
                        std::lock_guard lock(send_mutex);
                        if (!send_all(fd, bytes.data(), bytes.size())) {
                            session_dead.store(true);
                            break;
                        }
                    }
                });
            } else {
                try {
                    bus.publish(m);
                } catch (const Error&) {
                    // Kind mismatches from remote publishers drop the frame.
                }
            }
        }
        session_dead.store(true);
        ::shutdown(fd, SHUT_RDWR);
        for (auto& t : forwarders) t.join();
        ::close(fd);
    }

    void accept_loop() {
        for (;;) {
            sockaddr_in addr{};
            socklen_t len = sizeof(addr);
            const int fd = ::accept(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
            if (fd < 0) break; // listener closed
            int flag = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
            std::lock_guard lock(sessions_mutex);
            sessions.emplace_back([this, fd] { run_session(fd); });
        }
    }
};

BusServer::BusServer(MessageBus& bus, std::uint16_t port) : impl_(std::make_unique<Impl>(bus)) {
    impl_->listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (impl_->listen_fd < 0) throw IoError("socket() failed");
    int flag = 1;
    ::setsockopt(impl_->listen_fd, SOL_SOCKET, SO_REUSEADDR, &flag, sizeof(flag));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(impl_->listen_fd);
        throw IoError("cannot bind port " + std::to_string(port));
    }
    if (::listen(impl_->listen_fd, 16) != 0) {
        ::close(impl_->listen_fd);
        throw IoError("listen() failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

BusServer::~BusServer() { stop(); }

void BusServer::stop() {
    if (!impl_ || impl_->stopping.exchange(true)) return;
    ::shutdown(impl_->listen_fd, SHUT_RDWR);
    ::close(impl_->listen_fd);
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    std::lock_guard lock(impl_->sessions_mutex);
    for (auto& t : impl_->sessions) {
        if (t.joinable()) t.join();
    }
    impl_->sessions.clear();
}

struct BusClient::Impl {
    int fd = -1;
    std::atomic<bool> connected{false};
    std::mutex send_mutex;
    std::thread reader;
    std::mutex subs_mutex;
    std::map<std::string, std::vector<std::weak_ptr<Subscription>>> subs;

    void reader_loop() {
        for (;;) {
            auto frame = read_frame(fd);
            if (!frame) break;
            Message m;
            try {
                m = decode_frame(*frame);
            } catch (const Error&) {
                break;
            }
            std::vector<std::shared_ptr<Subscription>> targets;
            {
                std::lock_guard lock(subs_mutex);
                auto it = subs.find(m.topic);
                if (it != subs.end()) {
                    for (auto& weak : it->second) {
                        if (auto sp = weak.lock()) targets.push_back(std::move(sp));
                    }
                }
            }
            for (auto& sub : targets) sub->push(m);
        }
        connected.store(false);
        std::lock_guard lock(subs_mutex);
        for (auto& [topic, list] : subs) {
            for (auto& weak : list) {
                if (auto sp = weak.lock()) sp->close();
            }
        }
    }
};

BusClient::BusClient(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
    impl_->fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (impl_->fd < 0) throw IoError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr) != 1) {
        ::close(impl_->fd);
        throw IoError("bad address: " + host);
    }
    if (::connect(impl_->fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(impl_->fd);
        throw IoError("connection refused: " + host + ":" + std::to_string(port));
    }
    int flag = 1;
    ::setsockopt(impl_->fd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
    impl_->connected.store(true);
    impl_->reader = std::thread([this] { impl_->reader_loop(); });
}

BusClient::~BusClient() { close(); }

void BusClient::close() {
    if (!impl_ || impl_->fd < 0) return;
    ::shutdown(impl_->fd, SHUT_RDWR);
    if (impl_->reader.joinable()) impl_->reader.join();
    ::close(impl_->fd);
    impl_->fd = -1;
}

bool BusClient::connected() const { return impl_ && impl_->connected.load(); }

void BusClient::publish(const Message& message) {
    const auto bytes = encode_frame(message);
    std::lock_guard lock(impl_->send_mutex);
    if (!impl_->connected.load()) throw IoError("connection closed");
    if (!send_all(impl_->fd, bytes.data(), bytes.size())) {
        impl_->connected.store(false);
        throw IoError("connection reset during send");
    }
}

std::shared_ptr<Subscription> BusClient::subscribe(const std::string& topic) {
    if (!topic_well_formed(topic)) throw ValidationError("malformed topic '" + topic + "'");
    auto sub = std::shared_ptr<Subscription>(new Subscription());
    {
        std::lock_guard lock(impl_->subs_mutex);
        impl_->subs[topic].push_back(sub);
    }
    Message control;
    control.topic = "ctl";
    control.kind = PayloadKind::Subscribe;
    control.bytes.assign(topic.begin(), topic.end());
    const auto bytes = encode_frame(control);
    std::lock_guard lock(impl_->send_mutex);
    if (!impl_->connected.load() || !send_all(impl_->fd, bytes.data(), bytes.size())) {
        throw IoError("connection closed");
    }
    return sub;
}

// ---------------------------------------------------------------------------
// Spec auto-wiring

SpecWiring::SpecWiring(MessageBus& bus, const PhysicsSpec& spec, SyncRuntime& runtime)
    : bus_(bus), runtime_(runtime), topics_(derive_topics(spec)) {
    std::map<std::string, PayloadKind> sensor_kinds;
    for (const auto& t : topics_) {
        if (t.direction == TopicDirection::Outbound) sensor_kinds["/sensors/"] = t.kind;
    }

    for (const auto& a : spec.actuators) {
        ActuatorSub sub;
        sub.actuator = a;
        sub.sub = bus_.subscribe("/actuators/" + a.id);
        actuator_subs_.push_back(std::move(sub));
    }

    std::map<std::string, PayloadKind> kind_of;
    for (const auto& t : topics_) kind_of[t.name] = t.kind;

    runtime_.add_observer([this, kind_of](const Snapshot& snap) {
        pump_actuators();
        for (const auto& r : snap.readings) {
            Message m;
            m.topic = "/sensors/" + r.sensor;
            auto it = kind_of.find(m.topic);
            m.kind = it != kind_of.end() ? it->second : PayloadKind::JointCmd;
            m.timestamp_ns = static_cast<std::uint64_t>(std::llround(r.timestamp * 1e9));
            m.values = r.values;
            bus_.publish(m);
        }
    });
}

SpecWiring::~SpecWiring() = default;

void SpecWiring::pump_actuators() {
    for (auto& as : actuator_subs_) {
        while (auto m = as.sub->next(0)) {
            if (as.actuator.target_kind == ActuatorTarget::Body &&
                as.actuator.kind == ActuatorKind::Force) {
                Vec3 force = Vec3::Zero();
                Vec3 torque = Vec3::Zero();
                if (m->values.size() == 3) {
                    force = Vec3(m->values[0], m->values[1], m->values[2]);
                } else if (m->values.size() == 6) {
                    force = Vec3(m->values[0], m->values[1], m->values[2]);
                    torque = Vec3(m->values[3], m->values[4], m->values[5]);
                } else {
                    ++ignored_;
                    continue;
                }
                runtime_.push_force(as.actuator.target, force, torque);
            } else {
                // Joint targets are frozen in the built-in stepper; commands
                // are accepted and counted so controllers keep running.
                ++ignored_;
            }
        }
    }
}

} // namespace simbridge
