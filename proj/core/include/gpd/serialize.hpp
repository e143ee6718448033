#pragma once

#include <string>
#include <vector>

#include "gpd/harness.hpp"
#include "gpd/model.hpp"

namespace gpd {

/// Network spec file format (JSON): schema_version, links, states (modes as
/// integer departure rows plus power, routing as integer matrix rows),
/// optional pi_true and informational interference_edges.
NetworkSpec network_from_json_text(const std::string& text);
std::string network_to_json_text(const NetworkSpec& net);
NetworkSpec load_network(const std::string& path);
void save_network(const NetworkSpec& net, const std::string& path);

/// Run config file format (JSON): schema_version, network (inline object or
/// {"file": path} resolved relative to the config), arrivals, states,
/// problem, slots, seed, out, report_cadence, oracle, gradient_mode,
/// assert_gradients. See README for the key-by-key schema.
RunConfig run_config_from_json_text(const std::string& text, const std::string& base_dir);
std::string run_config_to_json_text(const RunConfig& config);
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

/// FNV-1a 64 over the canonical config serialization with the output
/// directory excluded, so identical runs hash identically wherever they land.
std::string config_hash(const RunConfig& config);

/// Arrival trace CSV (t,a_1..a_n) for replay.
std::vector<IntVec> load_arrival_trace(const std::string& path, int links);

/// Shortest-round-trip decimal formatting; '.' separator, locale independent.
std::string format_double(double v);

}  // namespace gpd
