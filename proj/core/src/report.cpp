#include "cloudsched/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "cloudsched/error.hpp"
#include "cloudsched/trace_io.hpp"

namespace cloudsched::experiment {

double metric_value(const ResultRow& row, std::size_t metric) {
    switch (metric) {
        case 0: return row.avg_time_cost;
        case 1: return row.avg_money_cost;
        case 2: return row.multi_qos;
        case 3: return row.load_rate;
        case 4: return row.reliability;
        default: throw PreconditionError("metric index " + std::to_string(metric) + " out of range");
    }
}

namespace {

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r' || c == '"') c = ' ';
    }
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("results.csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << r.algorithm << ',' << r.task_count << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ','
            << format_number(r.avg_time_cost) << ',' << format_number(r.avg_money_cost) << ','
            << format_number(r.multi_qos) << ',' << format_number(r.load_rate) << ','
            << format_number(r.reliability) << ',' << sanitize(r.error) << '\n';
    }
}

void write_timings_csv(std::ostream& out, std::span<const ResultRow> rows) {
    out << kTimingsHeader << '\n';
    for (const auto& r : rows) {
        out << r.algorithm << ',' << r.task_count << ',' << r.seed << ',' << format_number(r.wall_clock_s) << '\n';
    }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) {
        throw ConfigError("results.csv: header does not match '" + std::string(kResultsHeader) + "'");
    }
    std::vector<ResultRow> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 10) throw ConfigError("results.csv line " + std::to_string(n) + ": expected 10 fields");
        ResultRow r;
        r.algorithm = f[0];
        r.task_count = static_cast<std::size_t>(to_double(f[1], n));
        r.seed = static_cast<std::uint64_t>(std::stoull(f[2]));
        if (f[3] != "ok" && f[3] != "failed") {
            throw ConfigError("results.csv line " + std::to_string(n) + ": bad status '" + f[3] + "'");
        }
        r.ok = f[3] == "ok";
        r.avg_time_cost = to_double(f[4], n);
        r.avg_money_cost = to_double(f[5], n);
        r.multi_qos = to_double(f[6], n);
        r.load_rate = to_double(f[7], n);
        r.reliability = to_double(f[8], n);
        r.error = f[9];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_results_csv(in);
}

const SummaryCell* Summary::find(std::string_view algorithm, std::size_t task_count, std::size_t metric) const {
    for (const auto& c : cells) {
        if (c.algorithm == algorithm && c.task_count == task_count && c.metric == metric) return &c;
    }
    return nullptr;
}

double percent_delta(double a, double b) {
    if (b == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * (a - b) / b;
}

Summary summarize(std::span<const ResultRow> rows) {
    std::vector<std::string> algorithms;
    std::map<std::pair<std::string, std::size_t>, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        if (!r.ok) continue;
        if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end()) {
            algorithms.push_back(r.algorithm);
        }
        groups[{r.algorithm, r.task_count}].push_back(&r);
    }
    if (groups.empty()) throw PreconditionError("summarize needs at least one successful row");

    Summary s;
    for (const auto& alg : algorithms) {
        for (const auto& [key, members] : groups) {
            if (key.first != alg) continue;
            for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
                std::vector<double> v;
                for (const auto* r : members) v.push_back(metric_value(*r, m));
                SummaryCell c;
                c.algorithm = alg;
                c.task_count = key.second;
                c.metric = m;
                c.n = v.size();
                double sum = 0.0;
                for (double x : v) sum += x;
                c.mean = sum / static_cast<double>(v.size());
                if (v.size() > 1) {
                    double ss = 0.0;
                    for (double x : v) ss += (x - c.mean) * (x - c.mean);
                    c.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
                }
                std::sort(v.begin(), v.end());
                const std::size_t h = v.size() / 2;
                c.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
                s.cells.push_back(c);
            }
        }
    }

    std::vector<std::size_t> counts;
    for (const auto& [key, members] : groups) {
        if (std::find(counts.begin(), counts.end(), key.second) == counts.end()) counts.push_back(key.second);
    }
    std::sort(counts.begin(), counts.end());
    for (std::size_t n : counts) {
        for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
            for (const auto& a : algorithms) {
                for (const auto& b : algorithms) {
                    if (a == b) continue;
                    const SummaryCell* ca = s.find(a, n, m);
                    const SummaryCell* cb = s.find(b, n, m);
                    if (!ca || !cb) continue;
                    s.deltas.push_back({n, m, a, b, ca->mean, cb->mean, percent_delta(ca->mean, cb->mean)});
                }
            }
        }
    }
    return s;
}

void write_summary_csv(std::ostream& out, const Summary& summary) {
    out << kSummaryHeader << '\n';
    for (const auto& c : summary.cells) {
        out << c.algorithm << ',' << c.task_count << ',' << kMetricNames[c.metric] << ',' << c.n << ','
            << format_number(c.mean) << ',' << format_number(c.stddev) << ',' << format_number(c.median) << '\n';
    }
}

void write_deltas_csv(std::ostream& out, const Summary& summary) {
    out << kDeltasHeader << '\n';
    for (const auto& d : summary.deltas) {
        out << d.task_count << ',' << kMetricNames[d.metric] << ',' << d.a << ',' << d.b << ','
            << format_number(d.mean_a) << ',' << format_number(d.mean_b) << ','
            << (std::isnan(d.delta_pct) ? std::string("nan") : format_number(d.delta_pct)) << '\n';
    }
}

std::string plot_script() {
    return R"PY(#!/usr/bin/env python3
"""Draws time, cost, QoS and load against task count from summary.csv in this directory."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
PANELS = [
    ("avg_time_cost", "Average time cost (s)"),
    ("avg_money_cost", "Average money cost"),
    ("multi_qos", "multiQoS (lower is better)"),
    ("load_rate", "Resource load rate"),
]


def main():
    series = {}
    with open(os.path.join(HERE, "summary.csv"), newline="") as f:
        for row in csv.DictReader(f):
            key = (row["metric"], row["algorithm"])
            series.setdefault(key, []).append(
                (int(row["task_count"]), float(row["mean"]), float(row["std"]))
            )
    algorithms = []
    for _, alg in series:
        if alg not in algorithms:
            algorithms.append(alg)
    fig, axes = plt.subplots(2, 2, figsize=(11, 8))
    for ax, (metric, title) in zip(axes.flat, PANELS):
        for alg in algorithms:
            pts = sorted(series.get((metric, alg), []))
            if not pts:
                continue
            xs, ys, es = zip(*pts)
            ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=alg)
        ax.set_title(title)
        ax.set_xlabel("Task count")
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    out = os.path.join(HERE, sys.argv[1] if len(sys.argv) > 1 else "comparison.png")
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
)PY";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

template <typename F>
std::string render(F f) {
    std::ostringstream ss;
    f(ss);
    return ss.str();
}

}  // namespace

void emit_report(std::span<const ResultRow> rows, const Summary& summary, const std::filesystem::path& dir) {
    if (summary.cells.empty()) throw PreconditionError("emit_report needs a nonempty summary");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "results.csv", render([&](std::ostream& o) { write_results_csv(o, rows); }));
    write_file(dir / "summary.csv", render([&](std::ostream& o) { write_summary_csv(o, summary); }));
    write_file(dir / "deltas.csv", render([&](std::ostream& o) { write_deltas_csv(o, summary); }));
    write_file(dir / "plot.py", plot_script());
}

}  // namespace cloudsched::experiment
