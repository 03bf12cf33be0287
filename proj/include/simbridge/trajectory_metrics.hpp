#pragma once

#include "simbridge/geometry.hpp"

#include <filesystem>
#include <vector>

namespace simbridge {

struct Episode {
    bool success = false;
    int collisions = 0; // >= 0
};

// Mean over episodes of S_i / (1 + c_i).
double success_weighted_by_collision(const std::vector<Episode>& episodes);

struct TrajectorySample {
    double t = 0.0;
    Vec3 position{0.0, 0.0, 0.0};
};

// Timestamped 3-D positions, times strictly increasing.
struct EvalTrajectory {
    std::vector<TrajectorySample> samples;
};

EvalTrajectory load_trajectory_csv(const std::filesystem::path& path);

struct PairedSamples {
    std::vector<Vec3> gt;
    std::vector<Vec3> est;
    std::vector<double> times; // ground-truth times of the pairs
};

// Nearest-timestamp association; each estimate sample is matched at most
// once and pairs further apart than max_dt are dropped. Throws when no pair
// survives.
PairedSamples associate(const EvalTrajectory& gt, const EvalTrajectory& est, double max_dt);

// RMSE between paired positions.
double ate(const PairedSamples& pairs);

struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation{0.0, 0.0, 0.0};

    Vec3 apply(const Vec3& q) const { return scale * (rotation * q) + translation; }
};

// Least-squares similarity transform (s, R, t) minimizing
// sum ||p_i - (s R q_i + t)||^2, with the SVD determinant correction so R is
// always a proper rotation. Requires >= 3 non-collinear pairs.
SimilarityTransform umeyama(const std::vector<Vec3>& gt, const std::vector<Vec3>& est);

// Estimated path length over ground-truth path length. Align the estimate
// first for monocular-scale inputs; may exceed 1.
double coverage(const std::vector<Vec3>& gt, const std::vector<Vec3>& est_aligned);

// ATE adjusted for partial tracking: ate / coverage.
double scaled_ate(double ate_m, double coverage_ratio);

// P.Q / (|P||Q|); throws on zero vectors.
double cosine_similarity(const std::vector<double>& p, const std::vector<double>& q);

// KL divergence in nats: inputs are normalized, zero entries floored at
// 1e-10 and renormalized before sum P ln(P/Q). `log_base` rescales (e.g. 2).
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                     double log_base = 0.0);

} // namespace simbridge
