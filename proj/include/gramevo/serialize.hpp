#pragma once

// JSON mappings for genotypes and run artifacts.

#include <cstdint>
#include <string>

#include "json.hpp"

#include "gramevo/evaluator.hpp"
#include "gramevo/genotype.hpp"

namespace gramevo {

using json = nlohmann::json;

void to_json(json& j, const UnitGenotype& u);
void from_json(const json& j, UnitGenotype& u);

void to_json(json& j, const Individual& ind);
void from_json(const json& j, Individual& ind);

void to_json(json& j, const Budget& b);
void from_json(const json& j, Budget& b);

void to_json(json& j, const EvalMeta& m);
void from_json(const json& j, EvalMeta& m);

void to_json(json& j, const EvaluatedIndividual& e);
void from_json(const json& j, EvaluatedIndividual& e);

/// Digest of an individual's canonical JSON; used for immutability checks.
std::uint64_t genotype_hash(const Individual& ind);

}  // namespace gramevo
