#include "simbridge/trajectory_metrics.hpp"

#include "simbridge/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace simbridge {

double success_weighted_by_collision(const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw ValidationError("sc needs at least one episode");
    double sum = 0.0;
    for (const auto& e : episodes) {
        if (e.collisions < 0) throw ValidationError("collision counts must be >= 0");
        if (e.success) sum += 1.0 / (1.0 + static_cast<double>(e.collisions));
    }
    return sum / static_cast<double>(episodes.size());
}

EvalTrajectory load_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory csv: " + path.string());
    EvalTrajectory traj;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.back() == '\r') {
            while (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
        }
        // Header row: first field is not a number.
        std::vector<double> fields;
        std::stringstream row(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(row, cell, ',')) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || p != cell.data() + cell.size()) {
                numeric = false;
                break;
            }
            fields.push_back(v);
        }
        if (!numeric) {
            if (line_no == 1) continue; // header
            throw ParseError(path.string() + " line " + std::to_string(line_no) +
                             ": non-numeric cell");
        }
        if (fields.size() < 4) {
            throw ParseError(path.string() + " line " + std::to_string(line_no) +
                             ": need at least time_s,px,py,pz");
        }
        traj.samples.push_back({fields[0], Vec3(fields[1], fields[2], fields[3])});
    }
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        if (!(traj.samples[i].t > traj.samples[i - 1].t)) {
            throw ValidationError(path.string() + ": sample times must be strictly increasing");
        }
    }
    return traj;
}

PairedSamples associate(const EvalTrajectory& gt, const EvalTrajectory& est, double max_dt) {
    if (gt.samples.empty() || est.samples.empty()) {
        throw ValidationError("associate needs non-empty trajectories");
    }
    PairedSamples out;
    std::set<std::size_t> used;
    for (const auto& g : gt.samples) {
        // Nearest estimate sample by timestamp, each matched at most once.
        std::size_t best = est.samples.size();
        double best_dt = std::numeric_limits<double>::max();
        for (std::size_t j = 0; j < est.samples.size(); ++j) {
            if (used.count(j)) continue;
            const double dt = std::abs(est.samples[j].t - g.t);
            if (dt < best_dt) {
                best_dt = dt;
                best = j;
            }
        }
        if (best == est.samples.size() || best_dt > max_dt) continue;
        used.insert(best);
        out.gt.push_back(g.position);
        out.est.push_back(est.samples[best].position);
        out.times.push_back(g.t);
    }
    if (out.gt.empty()) {
        throw ValidationError("association failed: no pairs within max_dt = " +
                              std::to_string(max_dt));
    }
    return out;
}

double ate(const PairedSamples& pairs) {
    if (pairs.gt.empty()) throw ValidationError("ate needs at least one pair");
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.gt.size(); ++i) {
        sum += (pairs.gt[i] - pairs.est[i]).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(pairs.gt.size()));
}

SimilarityTransform umeyama(const std::vector<Vec3>& gt, const std::vector<Vec3>& est) {
    if (gt.size() != est.size()) throw ValidationError("umeyama needs equal-size point sets");
    const std::size_t n = gt.size();
    if (n < 3) throw ValidationError("umeyama needs at least 3 pairs");

    Vec3 mu_p = Vec3::Zero(), mu_q = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        mu_p += gt[i];
        mu_q += est[i];
    }
    mu_p /= static_cast<double>(n);
    mu_q /= static_cast<double>(n);

    Mat3 sigma_pq = Mat3::Zero();
    double var_q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 dp = gt[i] - mu_p;
        const Vec3 dq = est[i] - mu_q;
        sigma_pq += dp * dq.transpose();
        var_q += dq.squaredNorm();
    }
    sigma_pq /= static_cast<double>(n);
    var_q /= static_cast<double>(n);
    if (!(var_q > 0.0)) throw ValidationError("umeyama: estimate points are all identical");

    Eigen::JacobiSVD<Mat3> svd(sigma_pq, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) <= 1e-15 * std::max(1.0, svd.singularValues()(0))) {
        throw ValidationError("umeyama: degenerate (collinear) configuration");
    }
    Mat3 U = svd.matrixU();
    Mat3 V = svd.matrixV();
    Vec3 d = Vec3::Ones();
    // Determinant correction keeps R a proper rotation for mirrored inputs.
    if ((U * V.transpose()).determinant() < 0.0) d(2) = -1.0;

    SimilarityTransform tf;
    tf.rotation = U * d.asDiagonal() * V.transpose();
    tf.scale = svd.singularValues().dot(d) / var_q;
    if (!(tf.scale > 0.0)) throw ValidationError("umeyama: non-positive scale");
    tf.translation = mu_p - tf.scale * (tf.rotation * mu_q);
    return tf;
}

double coverage(const std::vector<Vec3>& gt, const std::vector<Vec3>& est_aligned) {
    if (gt.size() < 2 || est_aligned.size() < 2) {
        throw ValidationError("coverage needs at least 2 samples per trajectory");
    }
    double len_gt = 0.0, len_est = 0.0;
    for (std::size_t i = 1; i < gt.size(); ++i) len_gt += (gt[i] - gt[i - 1]).norm();
    for (std::size_t i = 1; i < est_aligned.size(); ++i) {
        len_est += (est_aligned[i] - est_aligned[i - 1]).norm();
    }
    if (!(len_gt > 0.0)) throw ValidationError("coverage: ground-truth length is zero");
    return len_est / len_gt;
}

double scaled_ate(double ate_m, double coverage_ratio) {
    if (!(coverage_ratio > 0.0)) throw ValidationError("scaled_ate needs coverage > 0");
    return ate_m / coverage_ratio;
}

double cosine_similarity(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ValidationError("cosine: length mismatch");
    double dot = 0.0, np = 0.0, nq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        dot += p[i] * q[i];
        np += p[i] * p[i];
        nq += q[i] * q[i];
    }
    if (!(np > 0.0) || !(nq > 0.0)) throw ValidationError("cosine: zero vector");
    return dot / (std::sqrt(np) * std::sqrt(nq));
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q, double log_base) {
    if (p.size() != q.size()) throw ValidationError("kl: length mismatch");
    if (p.empty()) throw ValidationError("kl: empty vectors");
    const auto normalize = [](std::vector<double> v) {
        constexpr double kFloor = 1e-10;
        double sum = 0.0;
        for (double x : v) {
            if (x < 0.0) throw ValidationError("kl: negative probability mass");
            sum += x;
        }
        if (!(sum > 0.0)) throw ValidationError("kl: zero distribution");
        for (double& x : v) x /= sum;
        // Zero entries are floored, then renormalized.
        double sum2 = 0.0;
        for (double& x : v) {
            x = std::max(x, kFloor);
            sum2 += x;
        }
        for (double& x : v) x /= sum2;
        return v;
    };
    const auto P = normalize(p);
    const auto Q = normalize(q);

    double nats = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) nats += P[i] * std::log(P[i] / Q[i]);
    if (log_base > 0.0) return nats / std::log(log_base);
    return nats;
}

} // namespace simbridge
