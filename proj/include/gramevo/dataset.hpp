#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string_view>

#include "gramevo/task.hpp"

namespace gramevo {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV with a header row. The column named `label` holds non-negative
/// integer classes; every other column is a numeric feature.
/// n_classes is the largest label plus one.
Dataset parse_csv(std::string_view text);
Dataset load_csv(const std::filesystem::path& path);

/// `holdout` is carved from each class first and becomes final_test; the
/// other three fractions apply to what remains and must sum to <= 1.
struct SplitFractions {
    double train = 0.7;
    double validation = 0.15;
    double test = 0.15;
    double holdout = 0.0;

    void validate() const;
    bool operator==(const SplitFractions&) const = default;
};

/// Per class, fold sizes follow largest-remainder rounding of the exact
/// quotas; leftover seats go to the fold furthest below its global quota.
/// Every fold with a nonzero fraction receives at least one instance of
/// every class, otherwise DatasetError. Index lists are sorted.
Folds stratified_split(const Dataset& data, const SplitFractions& f, std::uint64_t seed);

Task make_task(std::string id, Dataset data, const SplitFractions& f, std::uint64_t seed);

}  // namespace gramevo
