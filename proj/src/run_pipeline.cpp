#include "simbridge/run_pipeline.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/mjcf.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <memory>

namespace simbridge {

namespace {

using json = nlohmann::json;

} // namespace

BenchConfig load_bench_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open bench config: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    BenchConfig config;
    if (doc.contains("grace_s")) config.grace_s = doc["grace_s"].get<double>();
    if (doc.contains("timeout_s")) config.timeout_s = doc["timeout_s"].get<double>();
    if (doc.contains("sample_interval_s")) {
        config.sample_interval_s = doc["sample_interval_s"].get<double>();
    }
    if (doc.contains("goal")) {
        const auto& g = doc["goal"];
        if (!g.is_array() || g.size() != 3) throw ParseError(path.string() + ": goal must be [x,y,z]");
        config.goal = Vec3(g[0].get<double>(), g[1].get<double>(), g[2].get<double>());
    }
    if (doc.contains("goal_radius")) config.goal_radius = doc["goal_radius"].get<double>();
    if (doc.contains("tracked_body")) config.tracked_body = doc["tracked_body"].get<std::string>();
    if (config.tracked_body.empty()) {
        throw ParseError(path.string() + ": tracked_body is required");
    }
    return config;
}

std::vector<std::string> bench_metrics_filter(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open bench config: " + path.string());
    json doc = json::parse(in, nullptr, true, true);
    std::vector<std::string> out;
    if (doc.contains("metrics")) {
        for (const auto& m : doc["metrics"]) out.push_back(m.get<std::string>());
    }
    return out;
}

RunArtifacts run_simulation(const RunOptions& options) {
    PhysicsSpec spec = load_mjcf(options.scene_xml);
    World world(spec, 1.0 / options.physics_hz, options.solver);

    RuntimeConfig runtime_config;
    runtime_config.physics_hz = options.physics_hz;
    runtime_config.realtime = options.realtime;
    runtime_config.max_steps =
        static_cast<std::uint64_t>(std::llround(options.duration_s * options.physics_hz));

    SyncRuntime runtime(std::move(world), runtime_config);
    MessageBus bus;
    SpecWiring wiring(bus, spec, runtime);
    std::unique_ptr<BusServer> server;
    if (options.bus_port) server = std::make_unique<BusServer>(bus, *options.bus_port);

    std::unique_ptr<BenchmarkRecorder> recorder;
    if (options.bench) {
        recorder = std::make_unique<BenchmarkRecorder>(*options.bench);
        runtime.add_observer([&recorder](const Snapshot& snap) { recorder->observe(snap); });
    }

    std::unique_ptr<StreamRecorder> stream_recorder;
    if (!options.record_dir.empty()) {
        std::vector<std::string> topics;
        for (const auto& t : wiring.topics()) {
            if (t.direction == TopicDirection::Outbound) topics.push_back(t.name);
        }
        stream_recorder = std::make_unique<StreamRecorder>(bus, topics);
    }

    runtime.start();
    runtime.wait();
    RunArtifacts artifacts;
    artifacts.final_snapshot = runtime.stop();
    artifacts.steps = artifacts.final_snapshot.step;
    artifacts.runtime_error = runtime.last_error();

    if (recorder) {
        artifacts.csv_files = recorder->export_csv(options.out_dir);
    }
    if (stream_recorder) {
        artifacts.replay_files = save_streams(stream_recorder->stop(), options.record_dir);
    }
    if (server) server->stop();
    bus.close();
    return artifacts;
}

} // namespace simbridge
