#pragma once

#include "simbridge/msgbus.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace simbridge {

// One recorded topic: payload kind plus (t_ns, payload) entries in
// non-decreasing time order.
struct ReplayStream {
    std::string topic;
    PayloadKind kind = PayloadKind::Raw;
    struct Entry {
        std::uint64_t t_ns = 0;
        std::vector<double> values;
        std::vector<std::uint8_t> bytes; // Raw payloads
    };
    std::vector<Entry> entries;
};

// Captures every message published on the selected topics while active.
class StreamRecorder {
public:
    StreamRecorder(MessageBus& bus, const std::vector<std::string>& topics);
    // Drains pending messages and returns one stream per topic (recording
    // order preserved, duplicate topic names collapsed).
    std::vector<ReplayStream> stop();

private:
    struct Tap {
        std::string topic;
        std::shared_ptr<Subscription> sub;
    };
    std::vector<Tap> taps_;
};

// Wall-clock window convenience wrapper over StreamRecorder.
std::vector<ReplayStream> record(MessageBus& bus, const std::vector<std::string>& topics,
                                 double duration_s);

// One JSON file per stream, named after the topic with slashes as dots.
// f64 values are serialized at 17 significant digits; non-finite values are
// written as the strings "NaN", "Inf", "-Inf". load(save(s)) == s exactly.
std::vector<std::filesystem::path> save_streams(const std::vector<ReplayStream>& streams,
                                                const std::filesystem::path& dir);
std::vector<ReplayStream> load_streams(const std::filesystem::path& dir);

struct ReplayOptions {
    double speed = 1.0;   // inter-message gaps scaled by 1/speed
    bool flat_out = false; // ignore timing entirely
};

struct ReplayReport {
    std::map<std::string, std::uint64_t> published; // per topic
    double wall_seconds = 0.0;
};

// Republishes the streams on their original topics, payloads byte-identical
// to the recording. Messages across streams are merged by t_ns, ties broken
// by topic name.
ReplayReport replay(MessageBus& bus, const std::vector<ReplayStream>& streams,
                    const ReplayOptions& options = {});

} // namespace simbridge
