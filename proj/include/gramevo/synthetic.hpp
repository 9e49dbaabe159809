#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "gramevo/evaluator.hpp"
#include "gramevo/genotype.hpp"
#include "gramevo/grammar.hpp"

namespace gramevo {

/// Target architecture for the structural oracle, plus the numeric range
/// of every parameter name (taken from the grammar) for closeness scoring.
struct TargetSpec {
    Phenotype target;
    std::map<std::string, std::pair<double, double>, std::less<>> ranges;

    static TargetSpec from_phenotype(Phenotype target, const Grammar& g);
};

/// Reads canonical phenotype text (one unit per line, `key:value` tokens).
/// Blank lines and lines starting with `#` are skipped.
Phenotype parse_phenotype(std::string_view text);

/// 0.8 * LCS(unit types) / max(len(p), len(t))
///   + 0.2 * mean parameter closeness over the LCS-matched unit pairs.
///
/// Unit type is the first token (e.g. "layer:conv"). For a numeric
/// parameter closeness is 1 - |a - b| / range; categorical tokens score 1
/// when equal, 0 otherwise. Among longest common subsequences the one with
/// the highest total closeness is used. Returns 1 only for an exact match.
double evaluate_synthetic(const Phenotype& p, const TargetSpec& t);

/// Closeness of one candidate unit to one target unit, in [0, 1].
double unit_closeness(const UnitSpec& candidate, const UnitSpec& target, const TargetSpec& t);

class SyntheticEvaluator : public Evaluator {
public:
    explicit SyntheticEvaluator(TargetSpec target) : target_(std::move(target)) {}

    EvalResult evaluate(const Phenotype& p, const Budget& budget, std::uint64_t seed) const override;

    const TargetSpec& target() const { return target_; }

private:
    TargetSpec target_;
};

}  // namespace gramevo
