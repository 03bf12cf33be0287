#include "simbridge/replay.hpp"

#include "simbridge/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

namespace simbridge {

namespace {

using json = nlohmann::json;

PayloadKind kind_from_string(const std::string& s, const std::string& where) {
    if (s == "Pose") return PayloadKind::Pose;
    if (s == "Imu") return PayloadKind::Imu;
    if (s == "Wrench") return PayloadKind::Wrench;
    if (s == "JointCmd") return PayloadKind::JointCmd;
    if (s == "Raw") return PayloadKind::Raw;
    throw ParseError(where + ": unknown payload kind '" + s + "'");
}

// f64 -> JSON token, lossless: finite values at 17 significant digits,
// non-finite values as quoted strings.
json number_token(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    return v;
}

double number_from_token(const json& token, const std::string& where) {
    if (token.is_number()) return token.get<double>();
    if (token.is_string()) {
        const std::string s = token.get<std::string>();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Inf") return std::numeric_limits<double>::infinity();
        if (s == "-Inf") return -std::numeric_limits<double>::infinity();
    }
    throw ParseError(where + ": expected a number or \"NaN\"/\"Inf\"/\"-Inf\"");
}

std::string stream_filename(const std::string& topic) {
    std::string name = topic;
    if (!name.empty() && name.front() == '/') name.erase(name.begin());
    std::replace(name.begin(), name.end(), '/', '.');
    return name + ".json";
}

} // namespace

StreamRecorder::StreamRecorder(MessageBus& bus, const std::vector<std::string>& topics) {
    // Duplicate topic names collapse to one tap; caller order is kept.
    std::set<std::string> seen;
    for (const auto& t : topics) {
        if (!seen.insert(t).second) continue;
        taps_.push_back({t, bus.subscribe(t)});
    }
}

std::vector<ReplayStream> StreamRecorder::stop() {
    std::vector<ReplayStream> streams;
    for (auto& tap : taps_) {
        ReplayStream stream;
        stream.topic = tap.topic;
        bool kind_set = false;
        while (auto m = tap.sub->next(0)) {
            if (!kind_set) {
                stream.kind = m->kind;
                kind_set = true;
            }
            ReplayStream::Entry entry;
            entry.t_ns = m->timestamp_ns;
            entry.values = m->values;
            entry.bytes = m->bytes;
            stream.entries.push_back(std::move(entry));
        }
        streams.push_back(std::move(stream));
        tap.sub.reset();
    }
    taps_.clear();
    return streams;
}

std::vector<ReplayStream> record(MessageBus& bus, const std::vector<std::string>& topics,
                                 double duration_s) {
    StreamRecorder recorder(bus, topics);
    std::this_thread::sleep_for(std::chrono::duration<double>(duration_s));
    return recorder.stop();
}

std::vector<std::filesystem::path> save_streams(const std::vector<ReplayStream>& streams,
                                                const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> paths;
    for (const auto& stream : streams) {
        json doc;
        doc["topic"] = stream.topic;
        doc["kind"] = to_string(stream.kind);
        doc["entries"] = json::array();
        for (const auto& e : stream.entries) {
            json entry;
            entry["t_ns"] = e.t_ns;
            if (stream.kind == PayloadKind::Raw) {
                entry["bytes"] = e.bytes;
            } else {
                json data = json::array();
                for (double v : e.values) data.push_back(number_token(v));
                entry["data"] = std::move(data);
            }
            doc["entries"].push_back(std::move(entry));
        }
        const auto path = dir / stream_filename(stream.topic);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << doc.dump(2) << "\n";
        if (!out) throw IoError("short write: " + path.string());
        paths.push_back(path);
    }
    return paths;
}

std::vector<ReplayStream> load_streams(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<ReplayStream> streams;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot open " + file.string());
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(file.string() + ": " + e.what());
        }
        const std::string where = file.string();
        ReplayStream stream;
        try {
            stream.topic = doc.at("topic").get<std::string>();
            stream.kind = kind_from_string(doc.at("kind").get<std::string>(), where);
            std::uint64_t last = 0;
            for (const auto& entry : doc.at("entries")) {
                ReplayStream::Entry e;
                e.t_ns = entry.at("t_ns").get<std::uint64_t>();
                if (e.t_ns < last) {
                    throw ParseError(where + ": entry timestamps must be non-decreasing");
                }
                last = e.t_ns;
                if (stream.kind == PayloadKind::Raw) {
                    e.bytes = entry.at("bytes").get<std::vector<std::uint8_t>>();
                } else {
                    for (const auto& token : entry.at("data")) {
                        e.values.push_back(number_from_token(token, where + ".data"));
                    }
                }
                stream.entries.push_back(std::move(e));
            }
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        streams.push_back(std::move(stream));
    }
    return streams;
}

ReplayReport replay(MessageBus& bus, const std::vector<ReplayStream>& streams,
                    const ReplayOptions& options) {
    if (!options.flat_out && !(options.speed > 0.0)) {
        throw ValidationError("replay speed must be > 0");
    }

    // Global merge across streams by t_ns, ties broken by topic name.
    struct Slot {
        const ReplayStream* stream;
        std::size_t index;
    };
    std::vector<Slot> merged;
    for (const auto& s : streams) {
        for (std::size_t i = 0; i < s.entries.size(); ++i) merged.push_back({&s, i});
    }
    std::sort(merged.begin(), merged.end(), [](const Slot& a, const Slot& b) {
        const auto ta = a.stream->entries[a.index].t_ns;
        const auto tb = b.stream->entries[b.index].t_ns;
        if (ta != tb) return ta < tb;
        if (a.stream->topic != b.stream->topic) return a.stream->topic < b.stream->topic;
        return a.index < b.index;
    });

    ReplayReport report;
    const auto start = std::chrono::steady_clock::now();
    std::optional<std::uint64_t> prev_t;
    for (const auto& slot : merged) {
        const auto& entry = slot.stream->entries[slot.index];
        if (!options.flat_out && prev_t && entry.t_ns > *prev_t) {
            const double gap_s = static_cast<double>(entry.t_ns - *prev_t) * 1e-9 / options.speed;
            std::this_thread::sleep_for(std::chrono::duration<double>(gap_s));
        }
        prev_t = entry.t_ns;

        Message m;
        m.topic = slot.stream->topic;
        m.kind = slot.stream->kind;
        m.timestamp_ns = entry.t_ns;
        m.values = entry.values;
        m.bytes = entry.bytes;
        bus.publish(m);
        ++report.published[m.topic];
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace simbridge
