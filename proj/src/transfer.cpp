#include "gramevo/transfer.hpp"

#include <map>

#include "gramevo/serialize.hpp"

namespace gramevo {

namespace {
constexpr int kKnowledgeBaseVersion = 1;
}

void KnowledgeBase::check_compatible(const Grammar& g, const MacroStructure& m) const {
    if (records_.empty()) return;
    const auto gf = fingerprint(g);
    const auto mf = fingerprint(m);
    for (const auto& r : records_) {
        if (r.grammar_fingerprint != gf)
            throw IncompatibleKnowledge("champion of task '" + r.task_id + "' was evolved under a different grammar");
        if (r.macro_fingerprint != mf)
            throw IncompatibleKnowledge("champion of task '" + r.task_id + "' was evolved under a different macro-structure");
    }
}

KnowledgeBase add_champion(const KnowledgeBase& kb, const std::string& task_id, const EvaluatedIndividual& champion,
                           const Grammar& g, const MacroStructure& m) {
    if (!champion.valid()) throw std::invalid_argument("champion of task '" + task_id + "' has no valid fitness");
    auto records = kb.champions();
    records.push_back(ChampionRecord{task_id, champion.individual, champion.fitness, fingerprint(g), fingerprint(m)});
    return KnowledgeBase(std::move(records));
}

Individual seed_with_plan(const KnowledgeBase& kb, const Grammar& g, const MacroStructure& m, const SeedPlan& plan,
                          Rng& rng) {
    if (plan.size() != m.blocks.size()) throw std::invalid_argument("seed plan length differs from macro-structure");
    kb.check_compatible(g, m);
    Individual ind;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& block = m.blocks[b];
        ModuleBlock mb{block.symbol, {}};
        if (plan[b]) {
            const auto& champ = kb[*plan[b]];
            const Provenance origin{Origin::Transferred, champ.task_id};
            std::map<UnitId, UnitId> remap;
            for (const auto& ref : champ.individual.modules.at(b).units) {
                auto it = remap.find(ref.id);
                if (it == remap.end()) it = remap.emplace(ref.id, ind.insert(champ.individual.unit(ref.id))).first;
                mb.units.push_back(UnitRef{it->second, origin});
            }
        } else {
            const auto n = rng.uniform_int(block.min_units, block.max_units);
            for (std::int64_t i = 0; i < n; ++i) mb.units.push_back(UnitRef{ind.insert(sample_unit(g, block.symbol, rng)), {}});
        }
        ind.modules.push_back(std::move(mb));
    }
    return ind;
}

Individual seed_individual(const KnowledgeBase& kb, const Grammar& g, const MacroStructure& m, Rng& rng) {
    SeedPlan plan(m.blocks.size());
    if (!kb.empty()) {
        for (auto& p : plan) {
            if (rng.bernoulli(0.5)) p = rng.index(kb.size());
        }
    }
    return seed_with_plan(kb, g, m, plan, rng);
}

std::vector<Individual> seed_population(const KnowledgeBase& kb, const Grammar& g, const MacroStructure& m,
                                        std::size_t count, Rng& rng) {
    if (count == 0) throw std::invalid_argument("seed_population: count must be >= 1");
    std::vector<Individual> pop;
    pop.reserve(count);
    if (!kb.empty() && count >= 3) {
        pop.push_back(seed_with_plan(kb, g, m, SeedPlan(m.blocks.size()), rng));
        pop.push_back(seed_with_plan(kb, g, m, SeedPlan(m.blocks.size(), rng.index(kb.size())), rng));
    }
    while (pop.size() < count) pop.push_back(seed_individual(kb, g, m, rng));
    return pop;
}

std::string save_knowledge_base(const KnowledgeBase& kb) {
    json records = json::array();
    for (const auto& r : kb.champions()) {
        records.push_back(json{{"task_id", r.task_id},
                               {"fitness", r.fitness},
                               {"grammar_fingerprint", r.grammar_fingerprint},
                               {"macro_fingerprint", r.macro_fingerprint},
                               {"individual", r.individual}});
    }
    json doc{{"format", "gramevo-kb"}, {"version", kKnowledgeBaseVersion}, {"champions", records}};
    return doc.dump(1) + "\n";
}

KnowledgeBase load_knowledge_base(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("knowledge base is not valid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "gramevo-kb") throw std::runtime_error("not a knowledge-base file");
    if (doc.value("version", 0) != kKnowledgeBaseVersion)
        throw std::runtime_error("unsupported knowledge-base version " + std::to_string(doc.value("version", 0)));
    std::vector<ChampionRecord> records;
    for (const auto& r : doc.at("champions")) {
        records.push_back(ChampionRecord{r.at("task_id").get<std::string>(), r.at("individual").get<Individual>(),
                                         r.at("fitness").get<double>(), r.at("grammar_fingerprint").get<std::string>(),
                                         r.at("macro_fingerprint").get<std::string>()});
    }
    return KnowledgeBase(std::move(records));
}

}  // namespace gramevo
