#pragma once

#include <cstddef>

#include "gramevo/genotype.hpp"
#include "gramevo/grammar.hpp"
#include "gramevo/rng.hpp"
#include "gramevo/transfer.hpp"

namespace gramevo {

/// Defaults: add 25%, duplicate 15%,
/// remove 25%, grammatical 15%.
struct MutationConfig {
    double add_rate = 0.25;
    double duplicate_rate = 0.15;
    double remove_rate = 0.25;
    double grammatical_rate = 0.15;
    /// Chance a duplication copies from the knowledge base (when non-empty).
    double kb_duplicate_share = 0.5;
    /// Gaussian sigma for float genes, as a fraction of the block's range.
    double float_sigma_fraction = 0.15;

    /// Throws std::invalid_argument when a probability leaves [0, 1].
    void validate() const;

    bool operator==(const MutationConfig&) const = default;
};

// Structural operators edit `ind` in place and return false when the edit
// is not possible (a no-op the caller skips).

/// Inserts a freshly sampled unit at a uniform position of the block.
bool add_unit(Individual& ind, std::size_t block, const Grammar& g, const MacroStructure& m, Rng& rng);

/// Removes a uniformly chosen reference; the pool entry goes with its last
/// reference.
bool remove_unit(Individual& ind, std::size_t block, const MacroStructure& m, Rng& rng);

/// With probability kb_duplicate_share (non-empty kb) deep-copies a unit of
/// the same block from a uniformly chosen champion under a new id;
/// otherwise appends another reference to an existing unit of the block.
bool duplicate_unit(Individual& ind, std::size_t block, const KnowledgeBase& kb, const MutationConfig& cfg,
                    const MacroStructure& m, Rng& rng);

/// Perturbs exactly one gene of the unit: a choice moves to another
/// alternative (the sub-derivation below it is resampled), an int is
/// resampled to a different value, a float takes a clamped Gaussian step.
/// Every reference to the unit sees the change.
bool grammatical_mutate(Individual& ind, UnitId unit, const Grammar& g, const MutationConfig& cfg, Rng& rng);

/// One offspring: per block add, remove, duplicate at their rates, then a
/// grammatical pass over every pooled unit. If nothing fired, or the
/// phenotype came out unchanged, grammatical mutations are forced on
/// uniformly chosen mutable units until it differs.
Individual mutate(const Individual& parent, const MutationConfig& cfg, const KnowledgeBase& kb, const Grammar& g,
                  const MacroStructure& m, Rng& rng);

}  // namespace gramevo
