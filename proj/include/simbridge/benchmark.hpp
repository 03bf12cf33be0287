#pragma once

#include "simbridge/runtime.hpp"

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace simbridge {

// Time-indexed table for one metric: one row per sample, row times strictly
// increasing, row arity fixed by the column names.
struct MetricSeries {
    std::string metric;
    std::vector<std::string> columns;
    std::vector<std::pair<double, std::vector<double>>> rows;
};

struct BenchConfig {
    double grace_s = 0.0;
    // Sampling stops once sim_time reaches the timeout (rows satisfy
    // grace_s <= t < timeout_s).
    double timeout_s = std::numeric_limits<double>::infinity();
    double sample_interval_s = 0.1;
    Vec3 goal{0.0, 0.0, 0.0};
    double goal_radius = 1.0;
    std::string tracked_body;
};

// Metric lifecycle: init once per run, observe every snapshot, sample at
// each due time, reset to reuse, values exported via series().
class BaseMetric {
public:
    virtual ~BaseMetric() = default;
    virtual const std::string& id() const = 0;
    virtual std::vector<std::string> columns() const = 0;
    virtual void init(const BenchConfig& config) {}
    // Called for every snapshot so edge-triggered metrics never miss events.
    virtual void observe(const Snapshot&) {}
    // Called at sample times; returns the row values.
    virtual std::vector<double> sample(double time, const Snapshot& snapshot) = 0;
    virtual void reset() { series_.rows.clear(); }
    const MetricSeries& series() const { return series_; }

    void record(double time, std::vector<double> values) {
        if (series_.columns.empty()) series_.columns = columns();
        series_.rows.emplace_back(time, std::move(values));
    }

protected:
    MetricSeries series_;
};

using MetricFactory = std::function<std::unique_ptr<BaseMetric>()>;

struct MetricDescriptor {
    std::string id;
    std::string description;
};

// Global registry. The four built-ins (DistanceToGoal, Collisions,
// TimeToGoal, GlobalPose) register themselves at load.
void register_metric(const std::string& id, const std::string& description, MetricFactory factory);
std::vector<MetricDescriptor> registry_list();
std::unique_ptr<BaseMetric> make_metric(const std::string& id);

// Samples the enabled metrics from a snapshot stream on sim time, honouring
// grace and timeout. Feed every snapshot through observe().
class BenchmarkRecorder {
public:
    explicit BenchmarkRecorder(BenchConfig config);

    // Default: all built-ins enabled.
    void enable(const std::string& id);
    void disable(const std::string& id);
    void disable_all();
    std::vector<std::string> active() const;

    void observe(const Snapshot& snapshot);
    bool finished() const { return finished_; }

    const std::vector<std::unique_ptr<BaseMetric>>& metrics() const { return metrics_; }

    // One CSV per metric at <dir>/<metric>.csv. Returns the file paths.
    std::vector<std::filesystem::path> export_csv(const std::filesystem::path& dir) const;

private:
    BenchConfig config_;
    std::vector<std::unique_ptr<BaseMetric>> metrics_;
    double next_sample_ = 0.0;
    bool initialized_ = false;
    bool finished_ = false;
};

std::string series_to_csv(const MetricSeries& series);

} // namespace simbridge
