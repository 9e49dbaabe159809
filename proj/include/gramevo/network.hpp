#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gramevo/evaluator.hpp"
#include "gramevo/optimizer.hpp"
#include "gramevo/rng.hpp"
#include "gramevo/task.hpp"

namespace gramevo {

enum class Activation { Linear, Relu, Sigmoid, Softmax };

struct DenseStage {
    std::size_t units = 0;
    Activation activation = Activation::Linear;
    bool bias = true;
};

struct DropoutStage {
    double rate = 0;
};

using Stage = std::variant<DenseStage, DropoutStage>;

/// Trainable network description compiled from a fully-connected phenotype.
/// The last stage is always a softmax dense layer.
struct Blueprint {
    std::size_t inputs = 0;
    std::vector<Stage> stages;
    LearningSpec learning;

    std::size_t parameter_count() const;
};

struct CompileResult {
    std::optional<Blueprint> blueprint;
    std::string reason;  // set when blueprint is empty

    explicit operator bool() const { return blueprint.has_value(); }
};

/// Accepts fc / dropout / softmax layers plus exactly one learning unit.
/// Anything else ("unsupported unit") or a softmax width different from
/// `classes` ("class-count mismatch") yields an empty result with a reason.
CompileResult compile_trainable(const Phenotype& p, std::size_t inputs, int classes);
CompileResult compile_trainable(const Phenotype& p, const Task& task);

/// Feed-forward network over a flat parameter vector.
class Network {
public:
    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
    Network(const Blueprint& bp, Rng& init);

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::span<const double> gradients() const { return grads_; }

    /// Class probabilities (rows x classes). With `train` set, dropout masks
    /// are drawn from `rng`; otherwise dropout is the identity.
    std::span<const double> forward(std::span<const double> x, std::size_t rows, bool train, Rng* rng = nullptr);

    /// Mean categorical cross-entropy of the last forward pass.
    double loss(std::span<const int> labels) const;

    /// Gradient of loss() with respect to every parameter.
    void backward(std::span<const int> labels);

    std::size_t classes() const { return classes_; }

private:
    struct Layer {
        Stage stage;
        std::size_t in = 0;
        std::size_t out = 0;
        std::size_t w_offset = 0;
        std::size_t b_offset = 0;
        std::vector<double> input;  // cached activations entering the layer
        std::vector<double> output;
        std::vector<double> mask;   // dropout
    };

    std::vector<Layer> layers_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::size_t rows_ = 0;
    std::size_t classes_ = 0;
};

/// Mini-batch training on evo_train with validation-loss early stopping;
/// fitness is evo_test accuracy. Non-finite loss yields the invalid result.
EvalResult train_and_score(const Blueprint& bp, const Task& task, const Budget& budget, std::uint64_t seed);

/// Largest relative error between back-propagated gradients and central
/// finite differences (step 1e-5 scaled by |w|), dropout disabled.
double gradient_check(const Blueprint& bp, std::span<const double> x, std::span<const int> labels, std::size_t rows,
                      std::uint64_t seed = 7);

/// Evaluator backed by train_and_score.
class TrainerEvaluator : public Evaluator {
public:
    explicit TrainerEvaluator(std::shared_ptr<const Task> task) : task_(std::move(task)) {}

    EvalResult evaluate(const Phenotype& p, const Budget& budget, std::uint64_t seed) const override;

    const Task& task() const { return *task_; }

private:
    std::shared_ptr<const Task> task_;
};

}  // namespace gramevo
