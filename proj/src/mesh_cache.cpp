#include "simbridge/mesh_cache.hpp"

#include "simbridge/errors.hpp"
#include "simbridge/obj_io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace simbridge {

namespace {

using json = nlohmann::json;

std::array<std::uint8_t, 32> sha256(const std::vector<std::uint8_t>& data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw Error("sha256 digest failed");
    }
    return out;
}

void append_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
}

std::vector<std::uint8_t> mesh_bytes(const TriMesh& mesh) {
    std::vector<std::uint8_t> buf;
    buf.reserve(mesh.vertices.size() * 24 + mesh.triangles.size() * 12 + 16);
    const std::uint64_t nv = mesh.vertices.size();
    const std::uint64_t nt = mesh.triangles.size();
    append_bytes(buf, &nv, sizeof(nv));
    for (const auto& v : mesh.vertices) {
        const double xyz[3] = {v.x(), v.y(), v.z()};
        append_bytes(buf, xyz, sizeof(xyz));
    }
    append_bytes(buf, &nt, sizeof(nt));
    for (const auto& t : mesh.triangles) append_bytes(buf, t.data(), sizeof(std::uint32_t) * 3);
    return buf;
}

std::string hex_of(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

} // namespace

std::string CacheKey::hex() const { return hex_of(bytes); }

CacheKey cache_key(const TriMesh& mesh, const DecomposeParams& params) {
    auto buf = mesh_bytes(mesh);
    append_bytes(buf, &params.threshold, sizeof(params.threshold));
    const std::int64_t depth = params.max_depth;
    append_bytes(buf, &depth, sizeof(depth));
    CacheKey key;
    key.bytes = sha256(buf);
    return key;
}

std::string mesh_content_hash(const TriMesh& mesh) { return hex_of(sha256(mesh_bytes(mesh))); }

MeshCache::MeshCache(std::filesystem::path root) : root_(std::move(root)) {}

std::optional<std::vector<ConvexPart>> MeshCache::get(const CacheKey& key) const {
    const auto dir = root_ / key.hex();
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) return std::nullopt;
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) return std::nullopt;
    json meta;
    std::size_t count = 0;
    try {
        meta = json::parse(meta_in);
        count = meta.at("parts").get<std::size_t>();
    } catch (const json::exception&) {
        return std::nullopt; // corrupt entry reads as a miss
    }
    std::vector<ConvexPart> parts;
    parts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "part_%03zu.obj", i);
        try {
            ConvexPart part;
            part.mesh = load_obj(dir / name);
            parts.push_back(std::move(part));
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    return parts;
}

void MeshCache::put(const CacheKey& key, const std::vector<ConvexPart>& parts,
                    const DecomposeParams& params, const std::string& source_hash) const {
    const auto dir = root_ / key.hex();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create cache dir " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "part_%03zu.obj", i);
        save_obj(parts[i].mesh, dir / name);
    }
    json meta{{"threshold", params.threshold},
              {"max_depth", params.max_depth},
              {"source_hash", source_hash},
              {"parts", parts.size()}};
    std::ofstream out(dir / "meta.json");
    if (!out) throw IoError("cannot write cache meta in " + dir.string());
    out << meta.dump(2) << "\n";
}

DecomposeResult MeshCache::decompose_cached(const TriMesh& mesh, const DecomposeParams& params) {
    const auto key = cache_key(mesh, params);
    if (auto hit = get(key)) {
        DecomposeResult result;
        result.parts = std::move(*hit);
        return result;
    }
    auto result = decompose(mesh, params);
    ++recomputes_;
    put(key, result.parts, params, mesh_content_hash(mesh));
    return result;
}

} // namespace simbridge
