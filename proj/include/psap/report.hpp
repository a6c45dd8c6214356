// Serialization of simulation results: one JSON document, flat CSV tables
// and a JSON-lines event log.
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "psap/simulator.hpp"

namespace psap {

nlohmann::json config_to_json(const SimConfig& config);
nlohmann::json report_to_json(const SimReport& report);

// `epoch,t_s,psi_A,psi_B,psi_C,sharing_rate,utilization,saved_km,assigned,unserved`
std::string metrics_csv(const SimReport& report);
std::string counters_csv(const SimReport& report);
std::string requests_outcome_csv(const SimReport& report);
std::string assignments_csv(const SimReport& report);
std::string events_jsonl(const SimReport& report);

// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace psap
