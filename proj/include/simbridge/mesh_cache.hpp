#pragma once

#include "simbridge/convex_hull.hpp"
#include "simbridge/decompose.hpp"
#include "simbridge/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace simbridge {

// 256-bit content hash over vertex bytes, triangle bytes, and decomposition
// parameters. Equal meshes + parameters hash to equal keys.
struct CacheKey {
    std::array<std::uint8_t, 32> bytes{};
    std::string hex() const;
    bool operator==(const CacheKey&) const = default;
};

CacheKey cache_key(const TriMesh& mesh, const DecomposeParams& params);

// Hash of the mesh content alone; stored in each entry's meta.json.
std::string mesh_content_hash(const TriMesh& mesh);

// Directory-per-key store of decomposition results. Layout:
//   <root>/<keyhex>/part_000.obj ... part_NNN.obj
//   <root>/<keyhex>/meta.json     {threshold, max_depth, source_hash}
// Corrupt entries are treated as misses.
class MeshCache {
public:
    explicit MeshCache(std::filesystem::path root);

    std::optional<std::vector<ConvexPart>> get(const CacheKey& key) const;
    void put(const CacheKey& key, const std::vector<ConvexPart>& parts,
             const DecomposeParams& params, const std::string& source_hash) const;

    // Cached decomposition: returns the stored parts on a hit, otherwise
    // decomposes, stores, and bumps the recompute counter.
    DecomposeResult decompose_cached(const TriMesh& mesh, const DecomposeParams& params);

    std::uint64_t recompute_count() const { return recomputes_; }
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::uint64_t recomputes_ = 0;
};

} // namespace simbridge
