#include "gramevo/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gramevo {

void MutationConfig::validate() const {
    const std::pair<const char*, double> probs[] = {{"add_rate", add_rate},
                                                    {"duplicate_rate", duplicate_rate},
                                                    {"remove_rate", remove_rate},
                                                    {"grammatical_rate", grammatical_rate},
                                                    {"kb_duplicate_share", kb_duplicate_share}};
    for (const auto& [name, p] : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
    if (!(float_sigma_fraction > 0.0)) throw std::invalid_argument("float_sigma_fraction must be positive");
}

bool add_unit(Individual& ind, std::size_t block, const Grammar& g, const MacroStructure& m, Rng& rng) {
    auto& mb = ind.modules.at(block);
    if (static_cast<int>(mb.units.size()) >= m.blocks.at(block).max_units) return false;
    const auto pos = rng.index(mb.units.size() + 1);
    const UnitId id = ind.insert(sample_unit(g, mb.symbol, rng));
    mb.units.insert(mb.units.begin() + static_cast<std::ptrdiff_t>(pos), UnitRef{id, {}});
    return true;
}

bool remove_unit(Individual& ind, std::size_t block, const MacroStructure& m, Rng& rng) {
    auto& mb = ind.modules.at(block);
    if (static_cast<int>(mb.units.size()) <= m.blocks.at(block).min_units || mb.units.empty()) return false;
    const auto pos = rng.index(mb.units.size());
    const UnitId id = mb.units[pos].id;
    mb.units.erase(mb.units.begin() + static_cast<std::ptrdiff_t>(pos));
    if (ind.reference_count(id) == 0) ind.unit_pool.erase(id);
    return true;
}

bool duplicate_unit(Individual& ind, std::size_t block, const KnowledgeBase& kb, const MutationConfig& cfg,
                    const MacroStructure& m, Rng& rng) {
    auto& mb = ind.modules.at(block);
    if (static_cast<int>(mb.units.size()) >= m.blocks.at(block).max_units) return false;

    if (!kb.empty() && rng.bernoulli(cfg.kb_duplicate_share)) {
        const auto& champ = kb[rng.index(kb.size())];
        const auto& source = champ.individual.modules.at(block).units;
        if (!source.empty()) {
            const auto& ref = source[rng.index(source.size())];
            const UnitId id = ind.insert(champ.individual.unit(ref.id));
            const auto pos = rng.index(mb.units.size() + 1);
            mb.units.insert(mb.units.begin() + static_cast<std::ptrdiff_t>(pos),
                            UnitRef{id, Provenance{Origin::Transferred, champ.task_id}});
            return true;
        }
    }
    if (mb.units.empty()) return false;
    const UnitId id = mb.units[rng.index(mb.units.size())].id;
    mb.units.push_back(UnitRef{id, Provenance{Origin::Duplicated, {}}});
    return true;
}

namespace {

bool mutable_param(const ParamSpec& spec) { return spec.max > spec.min; }

bool has_mutable_gene(const UnitGenotype& u, const Grammar& g) {
    const auto map = genes(u, g);
    return std::any_of(map.choices.begin(), map.choices.end(), [](const ChoiceGene& c) { return c.alternatives > 1; }) ||
           std::any_of(map.params.begin(), map.params.end(), [](const ParamGene& p) { return mutable_param(p.spec); });
}

double perturb_float(double x, const ParamSpec& spec, double sigma_fraction, Rng& rng) {
    const double sigma = sigma_fraction * (spec.max - spec.min);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double y = std::clamp(x + sigma * rng.normal(), spec.min, spec.max);
        if (y != x) return y;
    }
    // Pinned at a bound by repeated clamping; move to a uniform point instead.
    double y;
    do {
        y = rng.uniform(spec.min, spec.max);
    } while (y == x);
    return y;
}

}  // namespace

bool grammatical_mutate(Individual& ind, UnitId unit, const Grammar& g, const MutationConfig& cfg, Rng& rng) {
    UnitGenotype& u = ind.unit(unit);
    const auto map = genes(u, g);

    std::vector<const ChoiceGene*> choices;
    for (const auto& c : map.choices)
        if (c.alternatives > 1) choices.push_back(&c);
    std::vector<const ParamGene*> params;
    for (const auto& p : map.params)
        if (mutable_param(p.spec)) params.push_back(&p);

    const std::size_t total = choices.size() + params.size();
    if (total == 0) return false;
    const std::size_t pick = rng.index(total);

    if (pick < choices.size()) {
        const ChoiceGene& gene = *choices[pick];
        const int current = u.choices.at(gene.nonterminal).at(gene.occurrence);
        int next = static_cast<int>(rng.index(gene.alternatives - 1));
        if (next >= current) ++next;
        u = set_choice(u, g, gene, next, rng);
        return true;
    }

    const ParamGene& gene = *params[pick - choices.size()];
    double& x = u.params.at(gene.block).at(gene.value);
    if (gene.spec.kind == ParamKind::Int) {
        auto lo = static_cast<std::int64_t>(gene.spec.min);
        auto hi = static_cast<std::int64_t>(gene.spec.max);
        auto y = rng.uniform_int(lo, hi - 1);
        if (y >= static_cast<std::int64_t>(x)) ++y;
        x = static_cast<double>(y);
    } else {
        x = perturb_float(x, gene.spec, cfg.float_sigma_fraction, rng);
    }
    return true;
}

Individual mutate(const Individual& parent, const MutationConfig& cfg, const KnowledgeBase& kb, const Grammar& g,
                  const MacroStructure& m, Rng& rng) {
    Individual child = parent;
    bool fired = false;
    for (std::size_t b = 0; b < child.modules.size(); ++b) {
        if (rng.bernoulli(cfg.add_rate)) fired |= add_unit(child, b, g, m, rng);
        if (rng.bernoulli(cfg.remove_rate)) fired |= remove_unit(child, b, m, rng);
        if (rng.bernoulli(cfg.duplicate_rate)) fired |= duplicate_unit(child, b, kb, cfg, m, rng);
    }
    std::vector<UnitId> ids;
    for (const auto& [id, _] : child.unit_pool) ids.push_back(id);
    for (UnitId id : ids) {
        if (rng.bernoulli(cfg.grammatical_rate)) fired |= grammatical_mutate(child, id, g, cfg, rng);
    }

    auto force_one = [&] {
        std::vector<UnitId> candidates;
        for (const auto& [id, u] : child.unit_pool)
            if (has_mutable_gene(u, g)) candidates.push_back(id);
        if (candidates.empty()) return false;
        return grammatical_mutate(child, candidates[rng.index(candidates.size())], g, cfg, rng);
    };

    if (!fired) force_one();
    const std::string before = decode(parent, g).serialize();
    for (int attempt = 0; attempt < 100 && decode(child, g).serialize() == before; ++attempt) {
        if (!force_one()) break;
    }
    child.compact();
    return child;
}

}  // namespace gramevo
