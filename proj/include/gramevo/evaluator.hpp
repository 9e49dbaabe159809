#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "gramevo/genotype.hpp"

namespace gramevo {

/// Training allowance granted to one evaluation.
struct Budget {
    int max_epochs = 30;
    double max_wall_seconds = 60;

    Budget() = default;
    Budget(int epochs, double wall_seconds) : max_epochs(epochs), max_wall_seconds(wall_seconds) {
        if (epochs <= 0) throw std::invalid_argument("budget max_epochs must be positive");
        if (!(wall_seconds > 0)) throw std::invalid_argument("budget max_wall_seconds must be positive");
    }

    bool operator==(const Budget&) const = default;
};

enum class StopReason { EarlyStop, EpochCap, TimeCap, Invalid };

std::string_view to_string(StopReason r);
StopReason parse_stop_reason(std::string_view s);

inline constexpr double kInvalidFitness = -1.0;

struct EvalMeta {
    int epochs_used = 0;
    double wall_seconds = 0;
    StopReason stopped_by = StopReason::EarlyStop;
    std::string reason;                 // why an evaluation was invalid
    double final_test_accuracy = -1.0;  // held-out accuracy when the evaluator has one

    bool operator==(const EvalMeta&) const = default;
};

struct EvalResult {
    double fitness = kInvalidFitness;
    EvalMeta meta;

    static EvalResult invalid(std::string reason) {
        EvalResult r;
        r.meta.stopped_by = StopReason::Invalid;
        r.meta.reason = std::move(reason);
        return r;
    }
};

struct EvaluatedIndividual {
    Individual individual;
    double fitness = kInvalidFitness;
    EvalMeta meta;

    bool valid() const { return fitness >= 0; }

    bool operator==(const EvaluatedIndividual&) const = default;
};

/// Fitness oracle. Implementations must be deterministic for a fixed
/// (phenotype, budget, seed) and safe to call concurrently.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvalResult evaluate(const Phenotype& p, const Budget& budget, std::uint64_t seed) const = 0;
};

}  // namespace gramevo
