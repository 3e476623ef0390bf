#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cloudsched/workload.hpp"

namespace cloudsched {

/// Parses a workload document (top-level keys `vms`, `tasks` or `dags`,
/// `profiles`). Unknown keys are rejected at every level. The result is validated.
WorkloadSet parse_workload(std::string_view json_text);
WorkloadSet load_workload(const std::filesystem::path& path);

/// Serializes with a flat `tasks` list plus a single `dags` entry when edges exist.
std::string dump_workload(const WorkloadSet& workload);

}  // namespace cloudsched
