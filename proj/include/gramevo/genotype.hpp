#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gramevo/grammar.hpp"
#include "gramevo/rng.hpp"

namespace gramevo {

using UnitId = std::uint32_t;

/// Inner-level (DSGE-style) genotype of one evolutionary unit.
///
/// `choices[nt]` lists the expansion indices of `nt` in the order the
/// left-to-right derivation consumes them; `params` holds one entry per
/// parameter-block occurrence, each with `count` drawn values.
struct UnitGenotype {
    std::string start_symbol;
    std::map<std::string, std::vector<int>> choices;
    std::vector<std::vector<double>> params;

    bool operator==(const UnitGenotype&) const = default;
};

enum class Origin { Random, Transferred, Duplicated };

struct Provenance {
    Origin origin = Origin::Random;
    std::string task_id;  // set for Origin::Transferred

    /// "random", "duplicated" or "transferred(<task>)".
    std::string tag() const;
    static Provenance parse(std::string_view tag);

    bool operator==(const Provenance&) const = default;
};

struct UnitRef {
    UnitId id = 0;
    Provenance provenance;

    bool operator==(const UnitRef&) const = default;
};

/// Outer-level entry: one macro block and the unit references it holds.
/// The same id may appear several times (duplication by reference).
struct ModuleBlock {
    std::string symbol;
    std::vector<UnitRef> units;

    bool operator==(const ModuleBlock&) const = default;
};

struct Individual {
    std::vector<ModuleBlock> modules;
    std::map<UnitId, UnitGenotype> unit_pool;

    const UnitGenotype& unit(UnitId id) const;
    UnitGenotype& unit(UnitId id);

    /// Adds a unit under a fresh id and returns the id.
    UnitId insert(UnitGenotype u);

    /// Drops pool entries that are no longer referenced.
    void collect_garbage();

    /// Renumbers ids densely in order of first reference.
    void compact();

    std::size_t reference_count(UnitId id) const;
    std::size_t total_units() const;

    bool operator==(const Individual&) const = default;
};

/// One decoded layer or learning descriptor.
struct UnitSpec {
    std::string kind;  // macro block symbol the unit belongs to
    std::vector<std::pair<std::string, std::string>> tokens;
    Provenance provenance;

    /// First token as `key:value`, e.g. "layer:conv".
    std::string type() const;
    /// Tokens as `key:value` separated by single spaces.
    std::string line() const;
    /// Value of `key`, or nullptr.
    const std::string* get(std::string_view key) const;
};

struct Phenotype {
    std::vector<UnitSpec> units;

    /// Canonical form: one unit per line, provenance excluded.
    std::string serialize() const;
    /// Snapshot form: each line prefixed with `[<provenance>] `.
    std::string serialize_tagged() const;
};

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDerivationDepth = 50;

/// Random derivation from `symbol`: expansion indices uniform over the
/// alternatives, parameters uniform on [min, max]. Throws SamplingError
/// past kMaxDerivationDepth nested expansions.
UnitGenotype sample_unit(const Grammar& g, const std::string& symbol, Rng& rng);

/// Block lengths uniform in [min_units, max_units]; every unit fresh.
Individual sample_individual(const Grammar& g, const MacroStructure& m, Rng& rng);

/// Strict decode of one unit; throws DecodeError when the genotype does
/// not match the grammar (missing, surplus or out-of-range genes).
std::vector<std::pair<std::string, std::string>> decode_unit(const UnitGenotype& u, const Grammar& g);

Phenotype decode(const Individual& ind, const Grammar& g);

/// Re-derives `u`, reusing genes while they fit and sampling the rest;
/// surplus genes are dropped. Consistent units come back unchanged.
UnitGenotype repair(const UnitGenotype& u, const Grammar& g, Rng& rng);

/// A closed-choice gene: occurrence `occurrence` of `nonterminal`.
struct ChoiceGene {
    std::string nonterminal;
    std::size_t occurrence = 0;
    std::size_t alternatives = 0;
};

/// One value of a parameter-block occurrence.
struct ParamGene {
    std::size_t block = 0;
    std::size_t value = 0;
    ParamSpec spec;
};

struct GeneMap {
    std::vector<ChoiceGene> choices;
    std::vector<ParamGene> params;
};

/// Enumerates every gene of a consistent unit in derivation order.
GeneMap genes(const UnitGenotype& u, const Grammar& g);

/// Sets a choice gene and replaces the whole sub-derivation below it with
/// fresh samples; genes outside that subtree are kept verbatim.
UnitGenotype set_choice(const UnitGenotype& u, const Grammar& g, const ChoiceGene& gene, int alternative, Rng& rng);

/// Individual-level invariants against the grammar and macro-structure;
/// returns one message per violation.
std::vector<std::string> check_individual(const Individual& ind, const Grammar& g, const MacroStructure& m);

}  // namespace gramevo
