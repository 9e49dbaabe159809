#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gramevo/evaluator.hpp"
#include "gramevo/grammar.hpp"
#include "gramevo/mutation.hpp"
#include "gramevo/rng.hpp"
#include "gramevo/transfer.hpp"

namespace gramevo {

struct EngineConfig {
    int lambda = 5;
    int generations = 20;
    MutationConfig mutation;
    std::uint64_t seed = 0;
    Budget budget0;
    int budget_growth_patience = 3;
    double budget_growth_factor = 2.0;

    void validate() const;
};

/// Everything a run reads but never modifies.
struct RunContext {
    const Grammar& grammar;
    const MacroStructure& macro;
    const KnowledgeBase& kb;
    const Evaluator& evaluator;
};

/// One line of the run log. Generation 0 describes the initial parent.
struct GenerationRecord {
    int generation = 0;
    double best_fitness = kInvalidFitness;
    StopReason stopped_by = StopReason::EarlyStop;
    Budget budget;
    std::string phenotype;                  // canonical serialization
    std::vector<std::string> provenance;    // per phenotype unit
    std::map<std::string, int> provenance_counts;
    /// Summed over the whole initial population; generation 0 only.
    std::map<std::string, int> population_provenance_counts;
    bool budget_grown = false;
    int evaluations = 0;
    double final_test_accuracy = -1;

    bool operator==(const GenerationRecord&) const = default;
};

struct EngineState {
    int generation = 0;
    EvaluatedIndividual parent;
    Budget budget;
    int cap_streak = 0;
    Rng rng;
    std::vector<GenerationRecord> history;  // size() == generation + 1

    bool operator==(const EngineState&) const = default;
};

class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seeds 1 + lambda individuals (random or transferred per the kb),
/// evaluates them under budget0 and keeps the best as parent.
/// Throws EngineError when every initial evaluation is invalid.
EngineState init_run(const EngineConfig& cfg, const RunContext& ctx);

/// One generation: lambda offspring of the parent are mutated and evaluated
/// (concurrently; each offspring owns a stream drawn from state.rng before
/// dispatch), selection keeps the best, then the budget may grow.
void step(EngineState& state, const EngineConfig& cfg, const RunContext& ctx);

/// init_run followed by steps until cfg.generations. `on_generation`, when
/// set, runs after every generation (including 0).
EngineState run(const EngineConfig& cfg, const RunContext& ctx,
                const std::function<void(const EngineState&)>& on_generation = {});

/// Continues a restored state to cfg.generations.
void resume(EngineState& state, const EngineConfig& cfg, const RunContext& ctx,
            const std::function<void(const EngineState&)>& on_generation = {});

/// Best of parent and offspring. A tie between the parent and the best
/// offspring goes to the candidate with fewer phenotype units; otherwise
/// the parent stays.
const EvaluatedIndividual& select(const EvaluatedIndividual& parent, std::span<const EvaluatedIndividual> offspring);

/// Tracks consecutive cap-limited parents. When the streak reaches the
/// patience, multiplies both budget fields by the growth factor, resets the
/// streak and returns true (the caller re-evaluates the parent).
bool update_budget(EngineState& state, const EngineConfig& cfg);

/// JSON Lines run log, one record per generation.
std::string record_to_json_line(const GenerationRecord& r);
std::string run_log(const EngineState& state);
std::vector<GenerationRecord> parse_run_log(std::string_view text);

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { VersionMismatch, Corrupt };
    CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary `.ckpt` payload: magic, version, length, CBOR state, FNV-1a checksum.
std::string checkpoint(const EngineState& state);
EngineState restore(std::string_view bytes);

}  // namespace gramevo
