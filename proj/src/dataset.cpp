#include "gramevo/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gramevo/rng.hpp"

namespace gramevo {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
        out.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

Dataset parse_csv(std::string_view text) {
    Dataset d;
    std::size_t pos = 0;
    int line_no = 0;
    long label_col = -1;
    std::size_t columns = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_fields(line);
        if (label_col < 0) {
            columns = fields.size();
            auto it = std::find(fields.begin(), fields.end(), "label");
            if (it == fields.end()) throw DatasetError("csv header has no `label` column");
            label_col = it - fields.begin();
            d.n_features = columns - 1;
            if (d.n_features == 0) throw DatasetError("csv has no feature columns");
            continue;
        }
        if (fields.size() != columns)
            throw DatasetError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(columns) + " fields, got " +
                               std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto f = fields[c];
            if (static_cast<long>(c) == label_col) {
                int label = 0;
                auto r = std::from_chars(f.data(), f.data() + f.size(), label);
                if (r.ec != std::errc() || r.ptr != f.data() + f.size() || label < 0)
                    throw DatasetError("csv line " + std::to_string(line_no) + ": bad label '" + std::string(f) + "'");
                d.labels.push_back(label);
                d.n_classes = std::max(d.n_classes, label + 1);
            } else {
                double v = 0;
                auto r = std::from_chars(f.data(), f.data() + f.size(), v);
                if (r.ec != std::errc() || r.ptr != f.data() + f.size() || !std::isfinite(v))
                    throw DatasetError("csv line " + std::to_string(line_no) + ": bad number '" + std::string(f) + "'");
                d.features.push_back(v);
            }
        }
    }
    if (label_col < 0) throw DatasetError("csv is empty");
    if (d.labels.empty()) throw DatasetError("csv has no data rows");
    return d;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_csv(ss.str());
    } catch (const DatasetError& e) {
        throw DatasetError(path.string() + ": " + e.what());
    }
}

void SplitFractions::validate() const {
    for (double v : {train, validation, test, holdout})
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("split fractions must lie in [0, 1]");
    if (train + validation + test > 1.0 + 1e-9) throw std::invalid_argument("train + validation + test must be <= 1");
    if (holdout >= 1.0) throw std::invalid_argument("holdout must be < 1");
}

Folds stratified_split(const Dataset& data, const SplitFractions& f, std::uint64_t seed) {
    f.validate();
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.n_classes));
    for (std::size_t i = 0; i < data.size(); ++i) by_class.at(static_cast<std::size_t>(data.labels[i])).push_back(i);

    const std::array<double, 3> frac{f.train, f.validation, f.test};
    const double frac_sum = frac[0] + frac[1] + frac[2];
    std::array<std::size_t, 3> given{};
    std::array<double, 3> quota{};
    Folds out;
    std::array<std::vector<std::size_t>*, 3> folds{&out.evo_train, &out.evo_validation, &out.evo_test};

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);

        const auto hold = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * f.holdout));
        if (f.holdout > 0 && (hold == 0 || hold >= idx.size()))
            throw DatasetError("class " + std::to_string(c) + " too small for the requested holdout");
        out.final_test.insert(out.final_test.end(), idx.begin(), idx.begin() + static_cast<long>(hold));

        const std::size_t n = idx.size() - hold;
        const auto target = frac_sum >= 1.0 - 1e-9 ? n : static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac_sum + 1e-9));
        std::array<std::size_t, 3> take{};
        std::array<double, 3> rem{};
        std::size_t assigned = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double exact = static_cast<double>(n) * frac[k];
            take[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
            rem[k] = exact - static_cast<double>(take[k]);
            quota[k] += exact;
            assigned += take[k];
        }
        while (assigned < target) {
            std::size_t best = 3;
            for (std::size_t k = 0; k < 3; ++k) {
                if (frac[k] == 0) continue;
                if (best == 3) {
                    best = k;
                    continue;
                }
                const double dk = quota[k] - static_cast<double>(given[k] + take[k]);
                const double db = quota[best] - static_cast<double>(given[best] + take[best]);
                if (rem[k] > rem[best] + 1e-9 || (std::abs(rem[k] - rem[best]) <= 1e-9 && dk > db + 1e-9)) best = k;
            }
            ++take[best];
            rem[best] = -1;
            ++assigned;
        }
        std::size_t at = hold;
        for (std::size_t k = 0; k < 3; ++k) {
            if (frac[k] > 0 && take[k] == 0)
                throw DatasetError("class " + std::to_string(c) + " too small for the requested folds");
            folds[k]->insert(folds[k]->end(), idx.begin() + static_cast<long>(at), idx.begin() + static_cast<long>(at + take[k]));
            given[k] += take[k];
            at += take[k];
        }
    }
    for (auto* v : folds) std::sort(v->begin(), v->end());
    std::sort(out.final_test.begin(), out.final_test.end());
    return out;
}

Task make_task(std::string id, Dataset data, const SplitFractions& f, std::uint64_t seed) {
    Task t{std::move(id), std::move(data), {}};
    t.folds = stratified_split(t.data, f, seed);
    return t;
}

}  // namespace gramevo
