#include "gramevo/serialize.hpp"

namespace gramevo {

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::EarlyStop: return "early_stop";
        case StopReason::EpochCap: return "epoch_cap";
        case StopReason::TimeCap: return "time_cap";
        case StopReason::Invalid: return "invalid";
    }
    return "invalid";
}

StopReason parse_stop_reason(std::string_view s) {
    if (s == "early_stop") return StopReason::EarlyStop;
    if (s == "epoch_cap") return StopReason::EpochCap;
    if (s == "time_cap") return StopReason::TimeCap;
    if (s == "invalid") return StopReason::Invalid;
    throw std::invalid_argument("unknown stop reason '" + std::string(s) + "'");
}

void to_json(json& j, const UnitGenotype& u) {
    j = json{{"start", u.start_symbol}, {"choices", u.choices}, {"params", u.params}};
}

void from_json(const json& j, UnitGenotype& u) {
    j.at("start").get_to(u.start_symbol);
    j.at("choices").get_to(u.choices);
    j.at("params").get_to(u.params);
}

void to_json(json& j, const Individual& ind) {
    json modules = json::array();
    for (const auto& b : ind.modules) {
        json refs = json::array();
        for (const auto& r : b.units) refs.push_back(json{{"id", r.id}, {"origin", r.provenance.tag()}});
        modules.push_back(json{{"symbol", b.symbol}, {"units", refs}});
    }
    json pool = json::array();
    for (const auto& [id, u] : ind.unit_pool) pool.push_back(json{{"id", id}, {"unit", u}});
    j = json{{"modules", modules}, {"pool", pool}};
}

void from_json(const json& j, Individual& ind) {
    ind = {};
    for (const auto& m : j.at("modules")) {
        ModuleBlock b;
        m.at("symbol").get_to(b.symbol);
        for (const auto& r : m.at("units"))
            b.units.push_back(UnitRef{r.at("id").get<UnitId>(), Provenance::parse(r.at("origin").get<std::string>())});
        ind.modules.push_back(std::move(b));
    }
    for (const auto& e : j.at("pool")) ind.unit_pool.emplace(e.at("id").get<UnitId>(), e.at("unit").get<UnitGenotype>());
}

void to_json(json& j, const Budget& b) { j = json{{"max_epochs", b.max_epochs}, {"max_wall_seconds", b.max_wall_seconds}}; }

void from_json(const json& j, Budget& b) {
    b = Budget(j.at("max_epochs").get<int>(), j.at("max_wall_seconds").get<double>());
}

void to_json(json& j, const EvalMeta& m) {
    j = json{{"epochs_used", m.epochs_used},
             {"wall_seconds", m.wall_seconds},
             {"stopped_by", std::string(to_string(m.stopped_by))},
             {"reason", m.reason},
             {"final_test_accuracy", m.final_test_accuracy}};
}

void from_json(const json& j, EvalMeta& m) {
    j.at("epochs_used").get_to(m.epochs_used);
    j.at("wall_seconds").get_to(m.wall_seconds);
    m.stopped_by = parse_stop_reason(j.at("stopped_by").get<std::string>());
    j.at("reason").get_to(m.reason);
    j.at("final_test_accuracy").get_to(m.final_test_accuracy);
}

void to_json(json& j, const EvaluatedIndividual& e) {
    j = json{{"individual", e.individual}, {"fitness", e.fitness}, {"meta", e.meta}};
}

void from_json(const json& j, EvaluatedIndividual& e) {
    j.at("individual").get_to(e.individual);
    j.at("fitness").get_to(e.fitness);
    j.at("meta").get_to(e.meta);
}

std::uint64_t genotype_hash(const Individual& ind) { return fnv1a(json(ind).dump()); }

}  // namespace gramevo
