#pragma once

#include "simbridge/physics_spec.hpp"

#include <filesystem>
#include <string>

namespace simbridge {

// Emits the spec as an MJCF document (mujoco/asset/worldbody/body/geom/
// site/sensor/actuator element vocabulary). Numbers use 17 significant
// digits so parse_mjcf(emit_mjcf(s)) matches s to better than 1e-9.
std::string emit_mjcf(const PhysicsSpec& spec);

// Parses the emitted MJCF subset. Unknown elements or attributes raise a
// ParseError naming the element path; asset payloads are left unresolved.
PhysicsSpec parse_mjcf(const std::string& xml);

// parse_mjcf + load referenced OBJ / hfield.bin payloads relative to
// `asset_dir`.
PhysicsSpec load_mjcf(const std::filesystem::path& xml_path);

} // namespace simbridge
