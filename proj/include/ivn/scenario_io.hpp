#pragma once

// JSON scenario files. Durations carry an `_ns` suffix, rates `_bps`, sizes
// `_bytes` and credits `_bits`; trace paths are relative to the scenario file.

#include "ivn/scenario.hpp"

#include <string>

namespace ivn {

/// Parse scenario text. `base_dir` resolves trace paths; with an empty
/// `base_dir` traces are left unloaded. Errors name the line or field path.
Scenario parse_scenario(const std::string& text, const std::string& base_dir);
/// Read, parse and validate a scenario file.
Scenario load_scenario(const std::string& path);

std::string render_scenario(const Scenario& s);
/// Write the scenario and every bound trace (at its relative path) under the
/// scenario file's directory.
void save_scenario(const Scenario& s, const std::string& path);

} // namespace ivn
