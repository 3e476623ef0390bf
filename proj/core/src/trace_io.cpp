#include "cloudsched/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "cloudsched/error.hpp"

namespace cloudsched {

std::string format_number(double x) {
    if (x == 0.0) return "0";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

void write_trace_csv(std::ostream& out, const sim::SimTrace& trace) {
    out << kTraceCsvHeader << '\n';
    for (const sim::TaskRecord& r : trace.tasks) {
        out << r.task_id << ',' << r.machine_id << ',' << format_number(r.arrival) << ','
            << format_number(r.start) << ',' << format_number(r.completion) << ',' << format_number(r.wait)
            << '\n';
    }
}

void write_usage_csv(std::ostream& out, const sim::SimTrace& trace) {
    out << kUsageCsvHeader << '\n';
    for (const sim::MachineTimeline& m : trace.machines) {
        for (std::size_t s = 0; s < m.usage.size(); ++s) {
            out << m.machine_id << ',' << s;
            for (double u : m.usage[s]) out << ',' << format_number(u);
            out << '\n';
        }
    }
}

void write_trace_files(const std::filesystem::path& dir, const sim::SimTrace& trace) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream t(dir / "trace.csv");
    std::ofstream u(dir / "usage.csv");
    if (!t || !u) throw IoError("cannot write trace files under " + dir.string());
    write_trace_csv(t, trace);
    write_usage_csv(u, trace);
}

}  // namespace cloudsched
