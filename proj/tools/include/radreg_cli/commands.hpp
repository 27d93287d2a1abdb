#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "radreg/optimize.hpp"
#include "radreg_cli/config.hpp"

namespace radreg::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses args (without the program name) and runs the subcommand.
int run_cli(const std::vector<std::string> &args);

/// One line of summary.csv.
struct BatchRow {
    std::string measure;
    double alpha = 0.0;
    std::string case_id;
    double rmse_initial = 0.0;
    double rmse_final = 0.0;
    double field_norm = 0.0;
    int iters = 0;
    bool success = false;
    double seconds = 0.0;

    friend bool operator==(const BatchRow &, const BatchRow &) = default;
};

void write_summary_csv(const std::filesystem::path &path, const std::vector<BatchRow> &rows);
std::vector<BatchRow> read_summary_csv(const std::filesystem::path &path);

/// Per (measure, alpha): distribution of final RMSE, field norm and iterations.
void write_stats_csv(const std::filesystem::path &path, const std::vector<BatchRow> &rows);

/// Mean normalised similarity of the successful runs of one (measure, alpha)
/// group at each iteration. Runs that already stopped hold their final value;
/// pending counts runs still iterating after that iteration.
struct ConvergenceRow {
    std::string measure;
    double alpha = 0.0;
    int iteration = 0;
    double mean_data = 0.0;
    int pending = 0;
};

struct TracedRun {
    std::string measure;
    double alpha = 0.0;
    bool success = false;
    std::vector<IterationRecord> trace;
};

/// Groups appear in first-seen order; one row per iteration up to the longest
/// successful run of the group.
std::vector<ConvergenceRow> convergence_rows(const std::vector<TracedRun> &runs);
void write_convergence_csv(const std::filesystem::path &path, const std::vector<ConvergenceRow> &rows);

void write_trace_csv(const std::filesystem::path &path, const std::vector<IterationRecord> &trace);

/// Text used for alpha in file and directory names ("%.6g").
std::string alpha_label(double alpha);

} // namespace radreg::cli
