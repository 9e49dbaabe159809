#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gramevo/dataset.hpp"
#include "gramevo/engine.hpp"
#include "gramevo/evaluator.hpp"
#include "gramevo/grammar.hpp"
#include "gramevo/serialize.hpp"
#include "gramevo/task.hpp"
#include "gramevo/transfer.hpp"

namespace gramevo {

/// One link of the task chain. `evaluator` is "trainer" (needs `dataset`)
/// or "synthetic" (needs `target_file` or `target_seed`).
struct TaskConfig {
    std::string id;
    std::string evaluator = "trainer";
    std::filesystem::path dataset;
    std::filesystem::path target_file;
    std::optional<std::uint64_t> target_seed;
    int generations = 0;  // 0 means engine.generations
};

struct CrossEvalConfig {
    bool enabled = true;
    int seeds = 5;
    Budget budget;
};

struct ExperimentConfig {
    std::filesystem::path grammar;
    std::string macro;
    int runs = 10;
    std::uint64_t seed = 0;
    std::filesystem::path output = "out";
    /// Also run every task that receives a non-empty kb from an empty one.
    bool compare_scratch = true;
    std::filesystem::path initial_kb;
    SplitFractions split;
    EngineConfig engine;
    CrossEvalConfig cross_eval;
    std::vector<TaskConfig> tasks;

    /// Throws std::invalid_argument on the first broken field.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JSON config. Relative paths resolve against `base_dir`. Unknown keys
/// are rejected.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
json experiment_config_json(const ExperimentConfig& cfg);

/// Grammar, macro and initial kb of a config, parsed and checked.
struct ExperimentSetup {
    Grammar grammar;
    MacroStructure macro;
    KnowledgeBase initial_kb;
};
ExperimentSetup load_setup(const ExperimentConfig& cfg);

struct LoadedTask {
    TaskConfig config;
    std::shared_ptr<const Task> task;  // null for synthetic tasks
    std::shared_ptr<const Evaluator> evaluator;
};
LoadedTask load_task(const TaskConfig& tc, const ExperimentConfig& cfg, const Grammar& g, const MacroStructure& m);

struct RunSummary {
    std::string setup;
    std::string task;
    int run = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    int generations = 0;
    EvaluatedIndividual champion;  // final parent when ok
};

void to_json(json& j, const RunSummary& s);
void from_json(const json& j, RunSummary& s);

struct TaskOutcome {
    std::string setup;
    std::string task;
    std::vector<RunSummary> runs;

    /// Fittest successful run by evolutionary fitness (lowest index on ties).
    const RunSummary* champion() const;
};

struct CrossEvalEntry {
    std::string champion_task;
    std::string target_task;
    bool compatible = false;
    std::string reason;
    std::vector<double> accuracies;
};

void to_json(json& j, const CrossEvalEntry& e);
void from_json(const json& j, CrossEvalEntry& e);

struct ExperimentResult {
    std::vector<TaskOutcome> outcomes;
    KnowledgeBase kb;
    std::vector<CrossEvalEntry> cross;
};

class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentOptions {
    /// Skip finished runs and continue interrupted ones from their checkpoint.
    bool resume = false;
    std::ostream* progress = nullptr;
};

inline constexpr const char* kIncrementalSetup = "incremental";
inline constexpr const char* kScratchSetup = "scratch";

/// Runs the task chain. Run i of every task uses seed cfg.seed + i. After
/// each task the fittest run of the incremental setup joins the kb.
/// Layout under cfg.output:
///   experiment.json, knowledge.kb, crosseval.json,
///   <setup>/<task>/run_NN.{jsonl,ckpt,json}
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opt = {});

/// Retrains a champion's topology and learning strategy from scratch on
/// `target` once per seed and returns final-test accuracies. Phenotypes
/// the trainer cannot compile come back incompatible with the reason.
CrossEvalEntry cross_evaluate(const ChampionRecord& champion, const Grammar& g, const Task& target,
                              std::span<const std::uint64_t> seeds, const Budget& budget);

std::vector<std::uint64_t> retrain_seeds(std::uint64_t base, int count);

std::filesystem::path run_path(const std::filesystem::path& out, const std::string& setup, const std::string& task, int run,
                               const char* extension);

}  // namespace gramevo
