#include "simbridge/benchmark.hpp"

#include "simbridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>

namespace simbridge {

namespace {

struct RegistryEntry {
    MetricDescriptor descriptor;
    MetricFactory factory;
};

std::vector<RegistryEntry>& registry() {
    static std::vector<RegistryEntry> entries;
    return entries;
}

const BodyState* find_tracked(const Snapshot& snap, const std::string& id) {
    for (std::size_t i = 0; i < snap.body_ids.size(); ++i) {
        if (snap.body_ids[i] == id) return &snap.states[i];
    }
    return nullptr;
}

class DistanceToGoal final : public BaseMetric {
public:
    DistanceToGoal() { series_.metric = "DistanceToGoal"; }
    const std::string& id() const override { return series_.metric; }
    std::vector<std::string> columns() const override { return {"distance_m"}; }
    void init(const BenchConfig& config) override { config_ = config; }
    std::vector<double> sample(double, const Snapshot& snap) override {
        const BodyState* body = find_tracked(snap, config_.tracked_body);
        if (!body) throw ValidationError("tracked body '" + config_.tracked_body + "' missing");
        return {(body->position - config_.goal).norm()};
    }

private:
    BenchConfig config_;
};

class Collisions final : public BaseMetric {
public:
    Collisions() { series_.metric = "Collisions"; }
    const std::string& id() const override { return series_.metric; }
    std::vector<std::string> columns() const override { return {"count"}; }
    void init(const BenchConfig& config) override {
        config_ = config;
        count_ = 0;
        previous_.clear();
    }
    void observe(const Snapshot& snap) override {
        // Rising edge per contact pair involving the tracked body.
        std::set<std::pair<std::string, std::string>> current;
        for (const auto& c : snap.contacts) {
            if (c.body_a != config_.tracked_body && c.body_b != config_.tracked_body) continue;
            current.emplace(c.body_a, c.body_b);
        }
        for (const auto& pair : current) {
            if (!previous_.count(pair)) ++count_;
        }
        previous_ = std::move(current);
    }
    std::vector<double> sample(double, const Snapshot&) override {
        return {static_cast<double>(count_)};
    }
    void reset() override {
        BaseMetric::reset();
        count_ = 0;
        previous_.clear();
    }

private:
    BenchConfig config_;
    std::uint64_t count_ = 0;
    std::set<std::pair<std::string, std::string>> previous_;
};

class TimeToGoal final : public BaseMetric {
public:
    TimeToGoal() { series_.metric = "TimeToGoal"; }
    const std::string& id() const override { return series_.metric; }
    std::vector<std::string> columns() const override { return {"time_s"}; }
    void init(const BenchConfig& config) override {
        config_ = config;
        reached_ = -1.0;
    }
    std::vector<double> sample(double time, const Snapshot& snap) override {
        if (reached_ < 0.0) {
            const BodyState* body = find_tracked(snap, config_.tracked_body);
            if (!body) throw ValidationError("tracked body '" + config_.tracked_body + "' missing");
            if ((body->position - config_.goal).norm() < config_.goal_radius) reached_ = time;
        }
        return {reached_};
    }
    void reset() override {
        BaseMetric::reset();
        reached_ = -1.0;
    }

private:
    BenchConfig config_;
    double reached_ = -1.0;
};

class GlobalPose final : public BaseMetric {
public:
    GlobalPose() { series_.metric = "GlobalPose"; }
    const std::string& id() const override { return series_.metric; }
    std::vector<std::string> columns() const override {
        return {"px", "py", "pz", "qw", "qx", "qy", "qz"};
    }
    void init(const BenchConfig& config) override { config_ = config; }
    std::vector<double> sample(double, const Snapshot& snap) override {
        const BodyState* body = find_tracked(snap, config_.tracked_body);
        if (!body) throw ValidationError("tracked body '" + config_.tracked_body + "' missing");
        return {body->position.x(),    body->position.y(),    body->position.z(),
                body->orientation.w(), body->orientation.x(), body->orientation.y(),
                body->orientation.z()};
    }

private:
    BenchConfig config_;
};

const bool kBuiltinsRegistered = [] {
    register_metric("DistanceToGoal", "distance from the tracked body to the goal",
                    [] { return std::make_unique<DistanceToGoal>(); });
    register_metric("Collisions", "cumulative contact-pair formations involving the tracked body",
                    [] { return std::make_unique<Collisions>(); });
    register_metric("TimeToGoal", "first sample time within the goal radius (-1 until reached)",
                    [] { return std::make_unique<TimeToGoal>(); });
    register_metric("GlobalPose", "absolute pose of the tracked body",
                    [] { return std::make_unique<GlobalPose>(); });
    return true;
}();

} // namespace

void register_metric(const std::string& id, const std::string& description, MetricFactory factory) {
    for (auto& e : registry()) {
        if (e.descriptor.id == id) {
            e.factory = std::move(factory);
            e.descriptor.description = description;
            return;
        }
    }
    registry().push_back({{id, description}, std::move(factory)});
}

std::vector<MetricDescriptor> registry_list() {
    std::vector<MetricDescriptor> out;
    for (const auto& e : registry()) out.push_back(e.descriptor);
    return out;
}

std::unique_ptr<BaseMetric> make_metric(const std::string& id) {
    for (const auto& e : registry()) {
        if (e.descriptor.id == id) return e.factory();
    }
    throw ValidationError("unknown metric '" + id + "'");
}

BenchmarkRecorder::BenchmarkRecorder(BenchConfig config) : config_(std::move(config)) {
    if (config_.grace_s < 0.0) throw ValidationError("grace_s must be >= 0");
    if (!(config_.timeout_s > config_.grace_s)) {
        throw ValidationError("timeout_s must be greater than grace_s");
    }
    if (!(config_.sample_interval_s > 0.0)) {
        throw ValidationError("sample_interval_s must be > 0");
    }
    if (!(config_.goal_radius > 0.0)) throw ValidationError("goal_radius must be > 0");
    for (const auto& d : registry_list()) metrics_.push_back(make_metric(d.id));
    next_sample_ = config_.grace_s;
}

void BenchmarkRecorder::enable(const std::string& id) {
    for (const auto& m : metrics_) {
        if (m->id() == id) return;
    }
    metrics_.push_back(make_metric(id)); // throws on unknown id
}

void BenchmarkRecorder::disable(const std::string& id) {
    std::erase_if(metrics_, [&](const auto& m) { return m->id() == id; });
}

void BenchmarkRecorder::disable_all() { metrics_.clear(); }

std::vector<std::string> BenchmarkRecorder::active() const {
    std::vector<std::string> out;
    for (const auto& m : metrics_) out.push_back(m->id());
    return out;
}

void BenchmarkRecorder::observe(const Snapshot& snapshot) {
    if (finished_) return;
    if (!initialized_) {
        for (auto& m : metrics_) m->init(config_);
        initialized_ = true;
    }
    const double t = snapshot.sim_time;
    // The window is [grace, timeout): recording terminates at the timeout.
    if (t >= config_.timeout_s) {
        finished_ = true;
        return;
    }
    for (auto& m : metrics_) m->observe(snapshot);
    while (next_sample_ <= t + 1e-12) {
        for (auto& m : metrics_) m->record(next_sample_, m->sample(next_sample_, snapshot));
        next_sample_ += config_.sample_interval_s;
    }
}

std::string series_to_csv(const MetricSeries& series) {
    std::string out = "time_s";
    for (const auto& c : series.columns) out += "," + c;
    out += "\n";
    char buf[64];
    for (const auto& [t, values] : series.rows) {
        std::snprintf(buf, sizeof(buf), "%.9g", t);
        out += buf;
        for (double v : values) {
            std::snprintf(buf, sizeof(buf), ",%.9g", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::vector<std::filesystem::path> BenchmarkRecorder::export_csv(
    const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> paths;
    for (const auto& m : metrics_) {
        MetricSeries series = m->series();
        if (series.columns.empty()) series.columns = m->columns();
        const auto path = dir / (m->id() + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << series_to_csv(series);
        if (!out) throw IoError("short write: " + path.string());
        paths.push_back(path);
    }
    return paths;
}

} // namespace simbridge
