#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gramevo/evaluator.hpp"
#include "gramevo/genotype.hpp"
#include "gramevo/grammar.hpp"
#include "gramevo/rng.hpp"

namespace gramevo {

/// Frozen genotype of the fittest individual found for a prior task.
/// Only genotypes are kept; trained weights never leave the evaluator.
struct ChampionRecord {
    std::string task_id;
    Individual individual;
    double fitness = 0;
    std::string grammar_fingerprint;
    std::string macro_fingerprint;

    bool operator==(const ChampionRecord&) const = default;
};

class IncompatibleKnowledge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KnowledgeBase {
public:
    KnowledgeBase() = default;
    explicit KnowledgeBase(std::vector<ChampionRecord> records) : records_(std::move(records)) {}

    const std::vector<ChampionRecord>& champions() const { return records_; }
    const ChampionRecord& operator[](std::size_t i) const { return records_.at(i); }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    /// Throws IncompatibleKnowledge if any record was produced under a
    /// different grammar or macro-structure.
    void check_compatible(const Grammar& g, const MacroStructure& m) const;

    bool operator==(const KnowledgeBase&) const = default;

private:
    std::vector<ChampionRecord> records_;
};

/// Returns `kb` with a deep copy of `champion` appended.
KnowledgeBase add_champion(const KnowledgeBase& kb, const std::string& task_id, const EvaluatedIndividual& champion,
                           const Grammar& g, const MacroStructure& m);

/// Per-block seeding decision: a champion index to copy the block from,
/// or nullopt to sample the block at random.
using SeedPlan = std::vector<std::optional<std::size_t>>;

/// Builds an individual following `plan` (one entry per macro block).
/// Transferred blocks keep their intra-block sharing structure.
Individual seed_with_plan(const KnowledgeBase& kb, const Grammar& g, const MacroStructure& m, const SeedPlan& plan,
                          Rng& rng);

/// Fair coin per block between transfer (from a uniformly chosen
/// champion) and random sampling. Empty kb means all blocks random.
Individual seed_individual(const KnowledgeBase& kb, const Grammar& g, const MacroStructure& m, Rng& rng);

/// Initial population. With a non-empty kb and count >= 3 the first
/// individual is fully random and the second fully transferred from one
/// champion; the rest come from seed_individual.
std::vector<Individual> seed_population(const KnowledgeBase& kb, const Grammar& g, const MacroStructure& m,
                                        std::size_t count, Rng& rng);

/// `.kb` file I/O (versioned JSON).
std::string save_knowledge_base(const KnowledgeBase& kb);
KnowledgeBase load_knowledge_base(std::string_view text);

}  // namespace gramevo
