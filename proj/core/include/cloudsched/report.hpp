#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudsched/experiment.hpp"

namespace cloudsched::experiment {

inline constexpr const char* kResultsHeader =
    "algorithm,task_count,seed,status,avg_time_cost,avg_money_cost,multi_qos,load_rate,reliability,error";
inline constexpr const char* kTimingsHeader = "algorithm,task_count,seed,wall_clock_s";
inline constexpr const char* kSummaryHeader = "algorithm,task_count,metric,n,mean,std,median";
inline constexpr const char* kDeltasHeader = "task_count,metric,algorithm_a,algorithm_b,mean_a,mean_b,delta_pct";

/// Metric columns in report order.
inline constexpr std::array<const char*, 5> kMetricNames{"avg_time_cost", "avg_money_cost", "multi_qos", "load_rate",
                                                         "reliability"};

double metric_value(const ResultRow& row, std::size_t metric);

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_timings_csv(std::ostream& out, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

struct SummaryCell {
    std::string algorithm;
    std::size_t task_count = 0;
    std::size_t metric = 0;  ///< index into kMetricNames
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;  ///< sample standard deviation; 0 for a single row
    double median = 0.0;
};

struct DeltaRow {
    std::size_t task_count = 0;
    std::size_t metric = 0;
    std::string a;
    std::string b;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double delta_pct = 0.0;  ///< 100 * (a - b) / b; NaN when b is 0
};

struct Summary {
    std::vector<SummaryCell> cells;  ///< first-seen algorithm order, then task count, then metric
    std::vector<DeltaRow> deltas;    ///< every ordered pair of distinct algorithms

    const SummaryCell* find(std::string_view algorithm, std::size_t task_count, std::size_t metric) const;
};

/// 100 * (a - b) / b
double percent_delta(double a, double b);

/// Statistics over successful rows. Throws PreconditionError when there are none.
Summary summarize(std::span<const ResultRow> rows);

void write_summary_csv(std::ostream& out, const Summary& summary);
void write_deltas_csv(std::ostream& out, const Summary& summary);
/// Matplotlib script drawing time, cost, QoS and load against task count from summary.csv.
std::string plot_script();

/// Writes results.csv, summary.csv, deltas.csv and plot.py into `dir`
/// (created if needed). Throws IoError when a file cannot be written.
void emit_report(std::span<const ResultRow> rows, const Summary& summary, const std::filesystem::path& dir);

}  // namespace cloudsched::experiment
