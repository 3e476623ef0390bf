#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cloudsched/sim.hpp"

namespace cloudsched {

/// Shortest round-trip decimal form; the only number format used in CSV output.
std::string format_number(double x);

inline constexpr const char* kTraceCsvHeader = "task_id,machine_id,arrival,start,completion,wait";
inline constexpr const char* kUsageCsvHeader = "machine_id,slot,cpu,memory,bandwidth";

/// One row per task, ordered by task id.
void write_trace_csv(std::ostream& out, const sim::SimTrace& trace);
/// One row per (machine, slot), machines in workload order.
void write_usage_csv(std::ostream& out, const sim::SimTrace& trace);

void write_trace_files(const std::filesystem::path& dir, const sim::SimTrace& trace);

}  // namespace cloudsched
