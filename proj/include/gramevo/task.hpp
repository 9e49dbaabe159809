#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gramevo {

/// Row-major feature matrix with integer class labels in [0, n_classes).
struct Dataset {
    std::vector<double> features;
    std::vector<int> labels;
    std::size_t n_features = 0;
    int n_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * n_features, n_features}; }
};

/// Disjoint instance-index sets. evo_train trains a network, evo_validation
/// drives early stopping, evo_test yields fitness; final_test stays out of
/// evolution.
struct Folds {
    std::vector<std::size_t> evo_train;
    std::vector<std::size_t> evo_validation;
    std::vector<std::size_t> evo_test;
    std::vector<std::size_t> final_test;
};

struct Task {
    std::string id;
    Dataset data;
    Folds folds;
};

}  // namespace gramevo
