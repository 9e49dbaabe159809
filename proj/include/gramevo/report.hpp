#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gramevo/engine.hpp"
#include "gramevo/experiment.hpp"
#include "gramevo/stats.hpp"

namespace gramevo {

struct RunLog {
    int run = 0;
    std::vector<GenerationRecord> history;

    double best_fitness() const { return history.back().best_fitness; }
    double final_test_accuracy() const { return history.back().final_test_accuracy; }
    /// First generation whose best fitness reaches `threshold`, if any.
    std::optional<int> generations_to(double threshold) const;
};

struct SetupTask {
    std::string setup;
    std::string task;
    std::vector<RunLog> runs;
    std::vector<std::string> failures;  // "run_NN: reason"
};

struct ReportData {
    std::vector<std::string> task_order;
    std::uint64_t base_seed = 0;
    std::vector<SetupTask> groups;
    std::vector<CrossEvalEntry> cross;
    std::vector<std::string> problems;  // unreadable or corrupt files
};

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads every run log under an experiment directory. Files that fail to
/// parse are listed in `problems`; throws ReportError when no log is usable.
ReportData load_report(const std::filesystem::path& dir);

/// Lower median of the runs ordered by best fitness (ties by run index).
const RunLog& median_run(const SetupTask& g);

/// Generations {1, mid, last} of a history (deduplicated).
std::vector<int> snapshot_generations(int last);

std::string report_text(const ReportData& d);
std::string report_csv(const ReportData& d);

}  // namespace gramevo
