#include "simbridge/heightfield.hpp"

#include "simbridge/errors.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <thread>

namespace simbridge {

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c) {
    constexpr double kTol = 1e-9;
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-15) return std::nullopt; // parallel or degenerate
    const double inv = 1.0 / det;
    const Vec3 tvec = origin - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < -kTol || u > 1.0 + kTol) return std::nullopt;
    const Vec3 qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv;
    if (v < -kTol || u + v > 1.0 + kTol) return std::nullopt;
    const double t = e2.dot(qvec) * inv;
    if (t < 0.0) return std::nullopt;
    return t;
}

HeightField sample_heightfield(const LandscapeRegion& region, const TriMesh& mesh,
                               const SampleOptions& options) {
    if (region.nx < 2 || region.ny < 2) {
        throw ValidationError("heightfield resolution must be at least 2x2");
    }
    const Vec3 extent = region.bbox.extent();
    if (!(extent.x() > 0.0) || !(extent.y() > 0.0)) {
        throw ValidationError("landscape bbox must have positive x/y extent");
    }

    HeightField hf;
    hf.nx = region.nx;
    hf.ny = region.ny;
    hf.origin = {region.bbox.min.x(), region.bbox.min.y()};
    hf.dx = extent.x() / static_cast<double>(region.nx - 1);
    hf.dy = extent.y() / static_cast<double>(region.ny - 1);
    hf.base = region.bbox.min.z();
    hf.heights.assign(static_cast<std::size_t>(hf.nx) * hf.ny, hf.base);

    if (mesh.triangles.empty()) {
        if (options.warn_empty) {
            std::cerr << "warning: landscape '" << region.id
                      << "' has no triangles; heightfield is all base\n";
        }
        return hf;
    }

    const double top = region.bbox.max.z();
    const double span = top - region.bbox.min.z();
    const Vec3 down(0.0, 0.0, -1.0);

    auto sample_row = [&](int j) {
        for (int i = 0; i < hf.nx; ++i) {
            const Vec3 origin(hf.origin.x() + i * hf.dx, hf.origin.y() + j * hf.dy, top);
            // Highest hit inside the box wins; misses keep the base height.
            double best = hf.base;
            for (const auto& t : mesh.triangles) {
                auto d = ray_triangle(origin, down, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                      mesh.vertices[t[2]]);
                if (!d || *d > span) continue;
                best = std::max(best, top - *d);
            }
            hf.at(i, j) = best;
        }
    };

    int workers = options.workers > 0 ? options.workers
                                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, hf.ny));
    if (workers == 1) {
        for (int j = 0; j < hf.ny; ++j) sample_row(j);
    } else {
        // Rows are striped across workers; each output cell has one writer.
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int j = w; j < hf.ny; j += workers) sample_row(j);
            });
        }
        for (auto& t : pool) t.join();
    }
    return hf;
}

std::optional<double> HeightField::height_at(double x, double y) const {
    const double fx = (x - origin.x()) / dx;
    const double fy = (y - origin.y()) / dy;
    if (fx < 0.0 || fy < 0.0 || fx > nx - 1 || fy > ny - 1) return std::nullopt;
    int i = std::min(static_cast<int>(fx), nx - 2);
    int j = std::min(static_cast<int>(fy), ny - 2);
    const double u = fx - i;
    const double v = fy - j;
    const double h00 = at(i, j), h10 = at(i + 1, j), h01 = at(i, j + 1), h11 = at(i + 1, j + 1);
    // Cells split along the (i,j)-(i+1,j+1) diagonal.
    if (u >= v) {
        return h00 + u * (h10 - h00) + v * (h11 - h10);
    }
    return h00 + u * (h11 - h01) + v * (h01 - h00);
}

std::optional<Vec3> HeightField::normal_at(double x, double y) const {
    const double fx = (x - origin.x()) / dx;
    const double fy = (y - origin.y()) / dy;
    if (fx < 0.0 || fy < 0.0 || fx > nx - 1 || fy > ny - 1) return std::nullopt;
    int i = std::min(static_cast<int>(fx), nx - 2);
    int j = std::min(static_cast<int>(fy), ny - 2);
    const double u = fx - i;
    const double v = fy - j;
    const Vec3 p00(origin.x() + i * dx, origin.y() + j * dy, at(i, j));
    const Vec3 p10(origin.x() + (i + 1) * dx, origin.y() + j * dy, at(i + 1, j));
    const Vec3 p01(origin.x() + i * dx, origin.y() + (j + 1) * dy, at(i, j + 1));
    const Vec3 p11(origin.x() + (i + 1) * dx, origin.y() + (j + 1) * dy, at(i + 1, j + 1));
    Vec3 n = (u >= v) ? (p10 - p00).cross(p11 - p00) : (p11 - p00).cross(p01 - p00);
    const double len = n.norm();
    if (len <= 0.0) return Vec3(0.0, 0.0, 1.0);
    n /= len;
    return n.z() >= 0.0 ? n : Vec3(-n);
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
    // Little-endian hosts only (checked at build time on the CI targets).
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    buf.insert(buf.end(), raw, raw + sizeof(T));
}

template <typename T>
T take(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw ParseError("hfield: truncated data");
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

} // namespace

std::vector<std::uint8_t> heightfield_to_bytes(const HeightField& hf) {
    std::vector<std::uint8_t> buf;
    buf.reserve(48 + hf.heights.size() * 8);
    buf.insert(buf.end(), {'H', 'F', 'L', 'D'});
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(hf.nx));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(hf.ny));
    put<double>(buf, hf.origin.x());
    put<double>(buf, hf.origin.y());
    put<double>(buf, hf.dx);
    put<double>(buf, hf.dy);
    put<double>(buf, hf.base);
    for (double h : hf.heights) put<double>(buf, h);
    return buf;
}

HeightField heightfield_from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "HFLD", 4) != 0) {
        throw ParseError("hfield: bad magic");
    }
    std::size_t pos = 4;
    HeightField hf;
    hf.nx = static_cast<int>(take<std::uint32_t>(bytes, pos));
    hf.ny = static_cast<int>(take<std::uint32_t>(bytes, pos));
    if (hf.nx < 2 || hf.ny < 2) throw ParseError("hfield: resolution below 2x2");
    hf.origin.x() = take<double>(bytes, pos);
    hf.origin.y() = take<double>(bytes, pos);
    hf.dx = take<double>(bytes, pos);
    hf.dy = take<double>(bytes, pos);
    hf.base = take<double>(bytes, pos);
    const std::size_t count = static_cast<std::size_t>(hf.nx) * hf.ny;
    hf.heights.reserve(count);
    for (std::size_t i = 0; i < count; ++i) hf.heights.push_back(take<double>(bytes, pos));
    if (pos != bytes.size()) throw ParseError("hfield: trailing bytes");
    return hf;
}

void save_heightfield(const HeightField& hf, const std::filesystem::path& path) {
    auto bytes = heightfield_to_bytes(hf);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + path.string());
}

HeightField load_heightfield(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return heightfield_from_bytes(bytes);
}

} // namespace simbridge
