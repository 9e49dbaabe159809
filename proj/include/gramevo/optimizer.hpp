#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gramevo/genotype.hpp"

namespace gramevo {

struct GradientDescent {
    double momentum = 0;
    bool nesterov = false;
};

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
};

struct RmsProp {
    double rho = 0.9;
};

/// Learning strategy decoded from a `learning:*` unit. Only the fields of
/// the chosen algorithm exist (the variant alternative).
struct LearningSpec {
    std::variant<GradientDescent, Adam, RmsProp> algorithm;
    double lr = 0.01;
    double decay = 0;
    int batch_size = 32;
    int early_stop = 5;

    std::string name() const;

    /// Parses a decoded learning unit. Throws std::invalid_argument when a
    /// required key is missing or malformed.
    static LearningSpec from_unit(const UnitSpec& unit);
};

inline constexpr double kOptimizerEpsilon = 1e-7;

/// Per-parameter optimizer memory: velocity for gradient descent, first
/// and second moments for adam, the squared-gradient average for rmsprop.
struct OptimizerState {
    std::vector<double> first;
    std::vector<double> second;
};

class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// One update with learning rate lr / (1 + decay * step_index). Adam's bias
/// correction uses t = step_index + 1. Throws NonFiniteError on a NaN or
/// infinite gradient.
void optimizer_step(const LearningSpec& spec, std::span<double> params, std::span<const double> grads,
                    OptimizerState& state, std::int64_t step_index);

}  // namespace gramevo
