// simbridge: headless robotics-simulation bridge.
//
// Subcommands: compile, run, decompose, replay, eval. Exit codes are stable:
// 0 success, 2 input error, 3 simulation divergence, 4 I/O error.

#include "simbridge/decompose.hpp"
#include "simbridge/errors.hpp"
#include "simbridge/mesh_cache.hpp"
#include "simbridge/mesh_ops.hpp"
#include "simbridge/mjcf.hpp"
#include "simbridge/obj_io.hpp"
#include "simbridge/replay.hpp"
#include "simbridge/run_pipeline.hpp"
#include "simbridge/scene.hpp"
#include "simbridge/spec_compiler.hpp"
#include "simbridge/trajectory_metrics.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using json = nlohmann::json;
using namespace simbridge;

std::filesystem::path cache_dir_from_env() {
    const char* env = std::getenv("SIM_CACHE_DIR");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path(".simcache");
}

// A JSON config file mirrors the long flags per subcommand, e.g.
//   {"compile": {"threshold": 0.1}, "run": {"hz": 500}}
// Values only fill in flags absent from the command line.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end() || it + 1 == args.end()) return args;
    const std::filesystem::path path = *(it + 1);
    args.erase(it, it + 2);

    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (args.empty()) return args;
    const std::string sub = args.front();
    if (!doc.contains(sub)) return args;

    for (const auto& [key, value] : doc[sub].items()) {
        const std::string flag = "--" + key;
        if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else {
            args.push_back(flag);
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return args;
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const DivergenceError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    return 2;
}

std::vector<double> load_hist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open histogram: " + path.string());
    std::vector<double> values;
    double v = 0.0;
    while (in >> v) values.push_back(v);
    if (values.empty()) throw ParseError(path.string() + ": no values");
    return values;
}

int run_main(std::vector<std::string> args) {
    CLI::App app{"headless robotics-simulation bridge"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json_out = false;
    app.add_flag("--json", json_out, "machine-readable output");

    // compile
    auto* compile = app.add_subcommand("compile", "scene JSON -> MJCF XML + collision assets");
    compile->fallthrough();
    std::filesystem::path scene_path, out_dir = "out";
    double threshold = 0.05;
    int max_depth = 6;
    int hf_res = 0, hf_workers = 0;
    compile->add_option("scene", scene_path, "scene JSON file")->required();
    compile->add_option("out", out_dir, "output directory");
    compile->add_option("--threshold", threshold, "decomposition concavity threshold");
    compile->add_option("--max-depth", max_depth, "decomposition recursion limit");
    compile->add_option("--hf-res", hf_res, "override heightfield resolution (NxN)");
    compile->add_option("--hf-workers", hf_workers, "heightfield raycast workers");

    // run
    auto* run = app.add_subcommand("run", "step a compiled scene and publish snapshots");
    run->fallthrough();
    RunOptions run_options;
    std::filesystem::path bench_path;
    int bus_port = -1;
    run->add_option("scene", run_options.scene_xml, "compiled scene.xml")->required();
    run->add_option("--duration", run_options.duration_s, "simulated seconds to run");
    run->add_option("--hz", run_options.physics_hz, "physics rate (default 1000)");
    run->add_flag("--realtime", run_options.realtime, "pace to wall clock");
    run->add_option("--bus-port", bus_port, "serve the message bus on this TCP port");
    run->add_option("--bench", bench_path, "benchmark config JSON");
    run->add_option("--out", run_options.out_dir, "artifact directory (CSV exports)");
    run->add_option("--record", run_options.record_dir, "record sensor topics to this directory");

    // decompose
    auto* decomp = app.add_subcommand("decompose", "approximate convex decomposition of an OBJ");
    decomp->fallthrough();
    std::filesystem::path obj_in, decomp_out = "parts";
    double d_threshold = 0.05;
    int d_depth = 6;
    decomp->add_option("mesh", obj_in, "input OBJ")->required();
    decomp->add_option("out", decomp_out, "output directory");
    decomp->add_option("--threshold", d_threshold, "concavity threshold");
    decomp->add_option("--max-depth", d_depth, "recursion limit");

    // replay
    auto* rep = app.add_subcommand("replay", "republish recorded streams");
    rep->fallthrough();
    std::filesystem::path replay_dir;
    double speed = 1.0;
    bool flat_out = false;
    int replay_port = -1;
    rep->add_option("dir", replay_dir, "directory of stream JSON files")->required();
    rep->add_option("--speed", speed, "timing multiplier");
    rep->add_flag("--flat-out", flat_out, "ignore recorded timing");
    rep->add_option("--bus-port", replay_port, "serve the bus on this port during replay");
    double subscriber_grace = 0.0;
    rep->add_option("--wait", subscriber_grace, "seconds to wait for subscribers before replaying");

    // eval
    auto* eval = app.add_subcommand("eval", "offline trajectory and episode metrics");
    eval->fallthrough();
    eval->require_subcommand(1);
    auto* eval_ate = eval->add_subcommand("ate", "absolute trajectory error");
    eval_ate->fallthrough();
    std::filesystem::path gt_path, est_path;
    bool align = true;
    double max_dt = 0.02;
    eval_ate->add_option("--gt", gt_path, "ground-truth CSV")->required();
    eval_ate->add_option("--est", est_path, "estimated CSV")->required();
    eval_ate->add_flag("--align,!--no-align", align, "Umeyama-align before ATE (default on)");
    eval_ate->add_option("--max-dt", max_dt, "association window in seconds");

    auto* eval_sc = eval->add_subcommand("sc", "success weighted by collision");
    eval_sc->fallthrough();
    std::filesystem::path episodes_path;
    eval_sc->add_option("--episodes", episodes_path, "episodes JSON")->required();

    auto* eval_img = eval->add_subcommand("imgstats", "cosine similarity and KL divergence");
    eval_img->fallthrough();
    std::filesystem::path hist_a, hist_b;
    eval_img->add_option("--a", hist_a, "first histogram/feature file")->required();
    eval_img->add_option("--b", hist_b, "second histogram/feature file")->required();

    std::vector<char*> argv;
    std::vector<std::string> storage = std::move(args);
    storage.insert(storage.begin(), "simbridge");
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (compile->parsed()) {
        SceneDescription scene = load_scene(scene_path);
        MeshCache cache(cache_dir_from_env());
        ProcessOptions options;
        options.decompose.threshold = threshold;
        options.decompose.max_depth = max_depth;
        options.cache = &cache;
        options.heightfield_resolution = hf_res;
        options.heightfield_workers = hf_workers;
        PhysicsSpec spec = compile_scene(scene, options);
        CompileOutput out = write_compile_output(spec, out_dir);
        if (json_out) {
            json doc{{"scene_xml", out.scene_xml.string()},
                     {"decompositions", cache.recompute_count()},
                     {"cache_dir", cache.root().string()},
                     {"bodies", spec.bodies.size()}};
            doc["assets"] = json::array();
            for (const auto& p : out.asset_files) doc["assets"].push_back(p.string());
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << "wrote " << out.scene_xml.string() << " (" << spec.bodies.size()
                      << " bodies, " << out.asset_files.size() << " assets, "
                      << cache.recompute_count() << " decompositions)\n";
        }
        return 0;
    }

    if (run->parsed()) {
        if (bus_port >= 0) run_options.bus_port = static_cast<std::uint16_t>(bus_port);
        if (!bench_path.empty()) run_options.bench = load_bench_config(bench_path);
        RunArtifacts artifacts = run_simulation(run_options);
        if (!artifacts.runtime_error.empty()) {
            std::cerr << "error: " << artifacts.runtime_error << "\n";
            return 3;
        }
        if (json_out) {
            json doc{{"steps", artifacts.steps},
                     {"sim_time", artifacts.final_snapshot.sim_time}};
            doc["csv"] = json::array();
            for (const auto& p : artifacts.csv_files) doc["csv"].push_back(p.string());
            doc["replay"] = json::array();
            for (const auto& p : artifacts.replay_files) doc["replay"].push_back(p.string());
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << "ran " << artifacts.steps << " steps (sim time "
                      << artifacts.final_snapshot.sim_time << " s)\n";
            for (const auto& p : artifacts.csv_files) std::cout << "  csv: " << p.string() << "\n";
            for (const auto& p : artifacts.replay_files) {
                std::cout << "  replay: " << p.string() << "\n";
            }
        }
        return 0;
    }

    if (decomp->parsed()) {
        TriMesh mesh = load_obj(obj_in);
        DecomposeParams params{d_threshold, d_depth};
        DecomposeResult result = decompose(mesh, params);
        std::error_code ec;
        std::filesystem::create_directories(decomp_out, ec);
        if (ec) throw IoError("cannot create " + decomp_out.string());
        std::vector<std::string> files;
        for (std::size_t i = 0; i < result.parts.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "part_%03zu.obj", i);
            save_obj(result.parts[i].mesh, decomp_out / name);
            files.push_back((decomp_out / name).string());
        }
        const double source_volume = mesh_volume(mesh);
        double hull_volume = 0.0;
        for (const auto& p : result.parts) hull_volume += p.volume();
        if (json_out) {
            json doc{{"parts", result.parts.size()},
                     {"depth_exhausted", result.depth_exhausted},
                     {"mesh_volume", source_volume},
                     {"parts_volume", hull_volume},
                     {"files", files}};
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << result.parts.size() << " parts (mesh volume " << source_volume
                      << ", part hull volume " << hull_volume << ")"
                      << (result.depth_exhausted ? " [depth exhausted]" : "") << "\n";
        }
        return 0;
    }

    if (rep->parsed()) {
        auto streams = load_streams(replay_dir);
        MessageBus bus;
        std::unique_ptr<BusServer> server;
        if (replay_port >= 0) {
            server = std::make_unique<BusServer>(bus, static_cast<std::uint16_t>(replay_port));
            if (subscriber_grace > 0.0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(subscriber_grace));
            }
        }
        ReplayOptions options{speed, flat_out};
        ReplayReport report = replay(bus, streams, options);
        if (json_out) {
            json doc{{"wall_seconds", report.wall_seconds}};
            doc["published"] = json::object();
            for (const auto& [topic, count] : report.published) doc["published"][topic] = count;
            std::cout << doc.dump(2) << "\n";
        } else {
            for (const auto& [topic, count] : report.published) {
                std::cout << topic << ": " << count << " messages\n";
            }
            std::cout << "replayed in " << report.wall_seconds << " s\n";
        }
        if (server) server->stop();
        return 0;
    }

    if (eval_ate->parsed()) {
        EvalTrajectory gt = load_trajectory_csv(gt_path);
        EvalTrajectory est = load_trajectory_csv(est_path);
        PairedSamples pairs = associate(gt, est, max_dt);
        json doc{{"pairs", pairs.gt.size()}, {"aligned", align}};
        double error = 0.0;
        if (align) {
            SimilarityTransform tf = umeyama(pairs.gt, pairs.est);
            PairedSamples aligned = pairs;
            for (auto& p : aligned.est) p = tf.apply(p);
            error = ate(aligned);
            const double cov = coverage(pairs.gt, aligned.est);
            doc["coverage"] = cov;
            doc["scaled_ate"] = scaled_ate(error, cov);
            doc["scale"] = tf.scale;
        } else {
            error = ate(pairs);
        }
        doc["ate"] = error;
        if (json_out) {
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << "ate: " << error << " m over " << pairs.gt.size() << " pairs\n";
            if (align) {
                std::cout << "coverage: " << doc["coverage"].get<double>()
                          << "\nscaled_ate: " << doc["scaled_ate"].get<double>() << "\n";
            }
        }
        return 0;
    }

    if (eval_sc->parsed()) {
        std::ifstream in(episodes_path);
        if (!in) throw IoError("cannot open " + episodes_path.string());
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(episodes_path.string() + ": " + e.what());
        }
        const json& list = doc.is_array() ? doc : doc.at("episodes");
        std::vector<Episode> episodes;
        for (const auto& e : list) {
            Episode ep;
            ep.success = e.at("success").is_boolean() ? e.at("success").get<bool>()
                                                      : e.at("success").get<int>() != 0;
            ep.collisions = e.at("collisions").get<int>();
            episodes.push_back(ep);
        }
        const double sc = success_weighted_by_collision(episodes);
        if (json_out) {
            std::cout << json{{"sc", sc}, {"episodes", episodes.size()}}.dump(2) << "\n";
        } else {
            std::cout << "sc: " << sc << " over " << episodes.size() << " episodes\n";
        }
        return 0;
    }

    if (eval_img->parsed()) {
        const auto a = load_hist(hist_a);
        const auto b = load_hist(hist_b);
        const double cos = cosine_similarity(a, b);
        const double kl = kl_divergence(a, b);
        if (json_out) {
            std::cout << json{{"cosine", cos}, {"kl_nats", kl}}.dump(2) << "\n";
        } else {
            std::cout << "cosine: " << cos << "\nkl: " << kl << " nats\n";
        }
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = apply_config(std::move(args));
        return run_main(std::move(args));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
