// Scenario configuration loading. The file format is JSON with the layout
// documented in the repository README (vehicles[], obstacles[], wind{},
// sim{dT_s, dT_c, t_end, seed}). Validation errors carry the offending
// field path.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "driftsim/simengine.hpp"

namespace driftsim::sim {

/// Parses a scenario from JSON text. Throws ConfigError with a field path on
/// malformed input. The wind field (including the turbulence grid) is built
/// as part of loading; seed_override replaces the configured seed first.
Scenario parse_scenario(const std::string& json_text,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads and parses a scenario file.
Scenario load_scenario(const std::string& path,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace driftsim::sim
