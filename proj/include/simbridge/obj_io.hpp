#pragma once

#include "simbridge/geometry.hpp"

#include <filesystem>
#include <string>

namespace simbridge {

// Parses the OBJ subset: `v x y z`, `f i j k [l ...]` (1-based indices,
// fan-triangulated), `#` comments. Anything else is rejected with a line
// number.
TriMesh parse_obj(const std::string& text);

TriMesh load_obj(const std::filesystem::path& path);

// Deterministic emitter; floats use 17 significant digits so
// parse_obj(write_obj(m)) reproduces coordinates exactly.
std::string write_obj(const TriMesh& mesh);

void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

} // namespace simbridge
