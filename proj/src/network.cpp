#include "gramevo/network.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "gramevo/kernels.hpp"

namespace gramevo {

std::size_t Blueprint::parameter_count() const {
    std::size_t n = 0;
    std::size_t width = inputs;
    for (const auto& st : stages) {
        if (const auto* d = std::get_if<DenseStage>(&st)) {
            n += width * d->units + (d->bias ? d->units : 0);
            width = d->units;
        }
    }
    return n;
}

namespace {

bool parse_int(const std::string* s, long long& out) {
    if (!s) return false;
    auto res = std::from_chars(s->data(), s->data() + s->size(), out);
    return res.ec == std::errc() && res.ptr == s->data() + s->size();
}

bool parse_real(const std::string* s, double& out) {
    if (!s) return false;
    auto res = std::from_chars(s->data(), s->data() + s->size(), out);
    return res.ec == std::errc() && res.ptr == s->data() + s->size() && std::isfinite(out);
}

CompileResult reject(std::string reason) { return CompileResult{std::nullopt, std::move(reason)}; }

}  // namespace

CompileResult compile_trainable(const Phenotype& p, std::size_t inputs, int classes) {
    Blueprint bp;
    bp.inputs = inputs;
    bool have_softmax = false;
    bool have_learning = false;
    for (const auto& unit : p.units) {
        const std::string type = unit.type();
        if (unit.get("learning")) {
            if (have_learning) return reject("more than one learning unit");
            try {
                bp.learning = LearningSpec::from_unit(unit);
            } catch (const std::invalid_argument& e) {
                return reject(e.what());
            }
            have_learning = true;
        } else if (type == "layer:fc") {
            if (have_softmax) return reject("layer after the softmax output");
            const std::string* act = unit.get("act");
            long long width = 0;
            if (!act || !parse_int(unit.get("num-units"), width) || width <= 0)
                return reject("malformed fc unit: " + unit.line());
            const std::string* bias = unit.get("bias");
            DenseStage d{static_cast<std::size_t>(width), Activation::Linear, !bias || *bias == "True"};
            if (*act == "softmax") {
                if (width != classes)
                    return reject("class-count mismatch: softmax has " + std::to_string(width) + " units, task has " +
                                  std::to_string(classes) + " classes");
                d.activation = Activation::Softmax;
                have_softmax = true;
            } else if (*act == "relu") {
                d.activation = Activation::Relu;
            } else if (*act == "sigmoid") {
                d.activation = Activation::Sigmoid;
            } else if (*act != "linear") {
                return reject("unsupported activation '" + *act + "'");
            }
            bp.stages.emplace_back(d);
        } else if (type == "layer:dropout") {
            if (have_softmax) return reject("layer after the softmax output");
            double rate = 0;
            if (!parse_real(unit.get("rate"), rate) || rate < 0 || rate >= 1) return reject("malformed dropout unit: " + unit.line());
            bp.stages.emplace_back(DropoutStage{rate});
        } else {
            return reject("unsupported unit: " + type);
        }
    }
    if (!have_softmax) return reject("missing softmax output layer");
    if (!have_learning) return reject("missing learning unit");
    return CompileResult{std::move(bp), {}};
}

CompileResult compile_trainable(const Phenotype& p, const Task& task) {
    return compile_trainable(p, task.data.n_features, task.data.n_classes);
}

Network::Network(const Blueprint& bp, Rng& init) {
    std::size_t width = bp.inputs;
    std::size_t offset = 0;
    for (const auto& st : bp.stages) {
        Layer layer;
        layer.stage = st;
        layer.in = width;
        if (const auto* d = std::get_if<DenseStage>(&st)) {
            layer.out = d->units;
            layer.w_offset = offset;
            offset += width * d->units;
            layer.b_offset = offset;
            if (d->bias) offset += d->units;
        } else {
            layer.out = width;
        }
        width = layer.out;
        layers_.push_back(std::move(layer));
    }
    classes_ = width;
    params_.assign(offset, 0.0);
    grads_.assign(offset, 0.0);
    for (const auto& layer : layers_) {
        if (!std::holds_alternative<DenseStage>(layer.stage)) continue;
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        for (std::size_t i = 0; i < layer.in * layer.out; ++i) params_[layer.w_offset + i] = init.uniform(-limit, limit);
    }
}

std::span<const double> Network::forward(std::span<const double> x, std::size_t rows, bool train, Rng* rng) {
    rows_ = rows;
    std::span<const double> current = x;
    for (auto& layer : layers_) {
        layer.input.assign(current.begin(), current.end());
        layer.output.resize(rows * layer.out);
        if (const auto* d = std::get_if<DenseStage>(&layer.stage)) {
            std::span<const double> w(params_.data() + layer.w_offset, layer.in * layer.out);
            std::span<const double> b;
            if (d->bias) b = std::span<const double>(params_.data() + layer.b_offset, layer.out);
            kernels::dense_forward(layer.input, w, b, layer.output, {rows, layer.in, layer.out});
            auto& y = layer.output;
            switch (d->activation) {
                case Activation::Linear: break;
                case Activation::Relu:
                    for (auto& v : y) v = v > 0 ? v : 0;
                    break;
                case Activation::Sigmoid:
                    for (auto& v : y) v = 1.0 / (1.0 + std::exp(-v));
                    break;
                case Activation::Softmax:
                    for (std::size_t i = 0; i < rows; ++i) {
                        double* r = y.data() + i * layer.out;
                        const double mx = *std::max_element(r, r + layer.out);
                        double sum = 0;
                        for (std::size_t o = 0; o < layer.out; ++o) sum += (r[o] = std::exp(r[o] - mx));
                        for (std::size_t o = 0; o < layer.out; ++o) r[o] /= sum;
                    }
                    break;
            }
        } else {
            const double rate = std::get<DropoutStage>(layer.stage).rate;
            if (train && rate > 0 && rng) {
                layer.mask.resize(layer.input.size());
                const double keep = 1.0 / (1.0 - rate);
                for (auto& m : layer.mask) m = rng->uniform01() >= rate ? keep : 0.0;
                for (std::size_t i = 0; i < layer.output.size(); ++i) layer.output[i] = layer.input[i] * layer.mask[i];
            } else {
                layer.mask.clear();
                layer.output = layer.input;
            }
        }
        current = layer.output;
    }
    return current;
}

double Network::loss(std::span<const int> labels) const {
    const auto& probs = layers_.back().output;
    double total = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
        const double p = probs[i * classes_ + static_cast<std::size_t>(labels[i])];
        total -= std::log(std::max(p, 1e-300));
    }
    return total / static_cast<double>(rows_);
}

void Network::backward(std::span<const int> labels) {
    std::fill(grads_.begin(), grads_.end(), 0.0);
    // Softmax + cross-entropy: dL/dz = (p - onehot) / rows.
    std::vector<double> delta = layers_.back().output;
    for (std::size_t i = 0; i < rows_; ++i) {
        delta[i * classes_ + static_cast<std::size_t>(labels[i])] -= 1.0;
    }
    for (auto& v : delta) v /= static_cast<double>(rows_);

    std::vector<double> next;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        auto& layer = layers_[li];
        if (const auto* d = std::get_if<DenseStage>(&layer.stage)) {
            if (d->activation == Activation::Relu) {
                for (std::size_t i = 0; i < delta.size(); ++i)
                    if (layer.output[i] <= 0) delta[i] = 0;
            } else if (d->activation == Activation::Sigmoid) {
                for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= layer.output[i] * (1 - layer.output[i]);
            }
            std::span<const double> w(params_.data() + layer.w_offset, layer.in * layer.out);
            std::span<double> dw(grads_.data() + layer.w_offset, layer.in * layer.out);
            std::span<double> db;
            if (d->bias) db = std::span<double>(grads_.data() + layer.b_offset, layer.out);
            std::span<double> dx;
            if (li > 0) {
                next.assign(rows_ * layer.in, 0.0);
                dx = next;
            }
            kernels::dense_backward(layer.input, w, delta, dx, dw, db, {rows_, layer.in, layer.out});
            if (li > 0) delta.swap(next);
        } else if (!layer.mask.empty()) {
            for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= layer.mask[i];
        }
    }
}

namespace {

struct Batch {
    std::vector<double> x;
    std::vector<int> y;

    void gather(const Dataset& data, std::span<const std::size_t> idx) {
        x.resize(idx.size() * data.n_features);
        y.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto row = data.row(idx[i]);
            std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(i * data.n_features));
            y[i] = data.labels[idx[i]];
        }
    }
};

double accuracy(Network& net, const Dataset& data, std::span<const std::size_t> idx) {
    if (idx.empty()) return -1;
    Batch b;
    b.gather(data, idx);
    auto probs = net.forward(b.x, idx.size(), false);
    std::size_t correct = 0;
    const std::size_t k = net.classes();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto* r = probs.data() + i * k;
        if (static_cast<int>(std::max_element(r, r + k) - r) == b.y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

double mean_loss(Network& net, const Dataset& data, std::span<const std::size_t> idx) {
    Batch b;
    b.gather(data, idx);
    net.forward(b.x, idx.size(), false);
    return net.loss(b.y);
}

}  // namespace

EvalResult train_and_score(const Blueprint& bp, const Task& task, const Budget& budget, std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    if (budget.max_epochs <= 0) throw std::invalid_argument("budget max_epochs must be positive");
    const auto& folds = task.folds;
    if (folds.evo_train.empty()) return EvalResult::invalid("empty evolutionary train fold");
    if (folds.evo_test.empty()) return EvalResult::invalid("empty evolutionary test fold");

    Rng rng(seed);
    Network net(bp, rng);
    OptimizerState opt;
    std::vector<std::size_t> order = folds.evo_train;
    const auto batch = static_cast<std::size_t>(std::max(1, bp.learning.batch_size));
    const bool early_stop_enabled = !folds.evo_validation.empty();

    EvalResult result;
    std::int64_t step = 0;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    int epoch = 0;
    result.meta.stopped_by = StopReason::EpochCap;
    Batch b;
    try {
        while (epoch < budget.max_epochs) {
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
            for (std::size_t s = 0; s < order.size(); s += batch) {
                const auto n = std::min(batch, order.size() - s);
                b.gather(task.data, std::span<const std::size_t>(order).subspan(s, n));
                net.forward(b.x, n, true, &rng);
                if (!std::isfinite(net.loss(b.y))) return EvalResult::invalid("non-finite training loss");
                net.backward(b.y);
                optimizer_step(bp.learning, net.parameters(), net.gradients(), opt, step++);
            }
            ++epoch;
            for (double w : net.parameters())
                if (!std::isfinite(w)) return EvalResult::invalid("non-finite weights");
            if (early_stop_enabled) {
                const double val = mean_loss(net, task.data, folds.evo_validation);
                if (!std::isfinite(val)) return EvalResult::invalid("non-finite validation loss");
                if (val < best_val) {
                    best_val = val;
                    since_best = 0;
                } else if (++since_best >= bp.learning.early_stop) {
                    result.meta.stopped_by = StopReason::EarlyStop;
                    break;
                }
            }
            if (std::chrono::duration<double>(Clock::now() - start).count() >= budget.max_wall_seconds) {
                if (epoch < budget.max_epochs) result.meta.stopped_by = StopReason::TimeCap;
                break;
            }
        }
    } catch (const NonFiniteError& e) {
        return EvalResult::invalid(e.what());
    }

    result.fitness = accuracy(net, task.data, folds.evo_test);
    result.meta.epochs_used = epoch;
    result.meta.final_test_accuracy = accuracy(net, task.data, folds.final_test);
    result.meta.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
}

double gradient_check(const Blueprint& bp, std::span<const double> x, std::span<const int> labels, std::size_t rows,
                      std::uint64_t seed) {
    Rng rng(seed);
    Network net(bp, rng);
    net.forward(x, rows, false);
    net.backward(labels);
    const std::vector<double> analytic(net.gradients().begin(), net.gradients().end());
    auto params = net.parameters();
    double worst = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double w = params[i];
        const double h = 1e-5 * std::max(1.0, std::abs(w));
        params[i] = w + h;
        net.forward(x, rows, false);
        const double up = net.loss(labels);
        params[i] = w - h;
        net.forward(x, rows, false);
        const double down = net.loss(labels);
        params[i] = w;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

EvalResult TrainerEvaluator::evaluate(const Phenotype& p, const Budget& budget, std::uint64_t seed) const {
    auto compiled = compile_trainable(p, *task_);
    if (!compiled) return EvalResult::invalid(compiled.reason);
    return train_and_score(*compiled.blueprint, *task_, budget, seed);
}

}  // namespace gramevo
