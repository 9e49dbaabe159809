#include "gramevo/optimizer.hpp"

#include <charconv>
#include <cmath>

namespace gramevo {

namespace {

double number(const UnitSpec& unit, std::string_view key) {
    const std::string* v = unit.get(key);
    if (!v) throw std::invalid_argument("learning unit lacks '" + std::string(key) + "'");
    double x = 0;
    auto res = std::from_chars(v->data(), v->data() + v->size(), x);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size() || !std::isfinite(x))
        throw std::invalid_argument("learning unit has malformed '" + std::string(key) + "'");
    return x;
}

double bias_correction(double beta, std::int64_t t) {
    const double c = 1.0 - std::pow(beta, static_cast<double>(t));
    return c > 0 ? c : 1.0;
}

}  // namespace

std::string LearningSpec::name() const {
    switch (algorithm.index()) {
        case 0: return "gradient-descent";
        case 1: return "adam";
        default: return "rmsprop";
    }
}

LearningSpec LearningSpec::from_unit(const UnitSpec& unit) {
    const std::string* kind = unit.get("learning");
    if (!kind) throw std::invalid_argument("not a learning unit");
    LearningSpec spec;
    if (*kind == "gradient-descent") {
        const std::string* nesterov = unit.get("nesterov");
        spec.algorithm = GradientDescent{number(unit, "momentum"), nesterov && *nesterov == "True"};
    } else if (*kind == "adam") {
        spec.algorithm = Adam{number(unit, "beta1"), number(unit, "beta2")};
    } else if (*kind == "rmsprop") {
        spec.algorithm = RmsProp{number(unit, "rho")};
    } else {
        throw std::invalid_argument("unknown learning algorithm '" + *kind + "'");
    }
    spec.lr = number(unit, "lr");
    spec.decay = unit.get("decay") ? number(unit, "decay") : 0.0;
    spec.batch_size = static_cast<int>(number(unit, "batch_size"));
    spec.early_stop = static_cast<int>(number(unit, "early_stop"));
    if (spec.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    return spec;
}

void optimizer_step(const LearningSpec& spec, std::span<double> params, std::span<const double> grads,
                    OptimizerState& state, std::int64_t step_index) {
    if (params.size() != grads.size()) throw std::invalid_argument("optimizer_step: shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient");

    const std::size_t n = params.size();
    if (state.first.size() != n) state.first.assign(n, 0.0);
    if (state.second.size() != n) state.second.assign(n, 0.0);
    const double lr = spec.lr / (1.0 + spec.decay * static_cast<double>(step_index));

    if (const auto* gd = std::get_if<GradientDescent>(&spec.algorithm)) {
        auto& v = state.first;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = gd->momentum * v[i] - lr * grads[i];
            params[i] += gd->nesterov ? gd->momentum * v[i] - lr * grads[i] : v[i];
        }
    } else if (const auto* adam = std::get_if<Adam>(&spec.algorithm)) {
        auto& m = state.first;
        auto& v = state.second;
        const std::int64_t t = step_index + 1;
        const double c1 = bias_correction(adam->beta1, t);
        const double c2 = bias_correction(adam->beta2, t);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = adam->beta1 * m[i] + (1 - adam->beta1) * grads[i];
            v[i] = adam->beta2 * v[i] + (1 - adam->beta2) * grads[i] * grads[i];
            params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kOptimizerEpsilon);
        }
    } else {
        const auto& rms = std::get<RmsProp>(spec.algorithm);
        auto& a = state.second;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rms.rho * a[i] + (1 - rms.rho) * grads[i] * grads[i];
            params[i] -= lr * grads[i] / (std::sqrt(a[i]) + kOptimizerEpsilon);
        }
    }
}

}  // namespace gramevo
