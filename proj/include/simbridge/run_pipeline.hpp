#pragma once

#include "simbridge/benchmark.hpp"
#include "simbridge/msgbus.hpp"
#include "simbridge/replay.hpp"
#include "simbridge/runtime.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace simbridge {

struct RunOptions {
    std::filesystem::path scene_xml;
    double duration_s = 1.0;
    double physics_hz = 1000.0;
    bool realtime = false;
    std::optional<std::uint16_t> bus_port;
    std::optional<BenchConfig> bench;
    std::filesystem::path out_dir = "out";
    std::filesystem::path record_dir; // empty disables stream recording
    SolverConfig solver;
};

struct RunArtifacts {
    Snapshot final_snapshot;
    std::vector<std::filesystem::path> csv_files;
    std::vector<std::filesystem::path> replay_files;
    std::uint64_t steps = 0;
    std::string runtime_error; // divergence or async failures, empty if clean
};

// Full headless run: load the compiled scene, start the physics loop and
// bus wiring, optionally record benchmark CSVs and replay streams.
RunArtifacts run_simulation(const RunOptions& options);

// Bench config JSON: {grace_s, timeout_s, sample_interval_s, goal:[x,y,z],
// goal_radius, tracked_body, metrics:[ids...]} - all but tracked_body
// optional.
BenchConfig load_bench_config(const std::filesystem::path& path);
std::vector<std::string> bench_metrics_filter(const std::filesystem::path& path);

} // namespace simbridge
