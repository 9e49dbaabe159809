#include "gramevo/engine.hpp"

#include <cstring>

#include "gramevo/serialize.hpp"

namespace gramevo {

void EngineConfig::validate() const {
    if (lambda < 1) throw std::invalid_argument("lambda must be >= 1");
    if (generations < 1) throw std::invalid_argument("generations must be >= 1");
    if (budget_growth_patience < 1) throw std::invalid_argument("budget_growth_patience must be >= 1");
    if (!(budget_growth_factor > 1.0)) throw std::invalid_argument("budget_growth_factor must be > 1");
    mutation.validate();
    Budget check(budget0.max_epochs, budget0.max_wall_seconds);
    (void)check;
}

namespace {

EvaluatedIndividual evaluate_individual(Individual ind, const RunContext& ctx, const Budget& budget, std::uint64_t seed) {
    EvaluatedIndividual e{std::move(ind), kInvalidFitness, {}};
    try {
        const auto result = ctx.evaluator.evaluate(decode(e.individual, ctx.grammar), budget, seed);
        e.meta = result.meta;
        if (result.fitness >= 0.0 && result.fitness <= 1.0) {
            e.fitness = result.fitness;
        } else {
            e.meta.stopped_by = StopReason::Invalid;
            if (e.meta.reason.empty()) e.meta.reason = "fitness outside [0, 1]";
        }
    } catch (const std::exception& ex) {
        e.meta = EvalResult::invalid(ex.what()).meta;
    }
    return e;
}

GenerationRecord make_record(const EngineState& s, const RunContext& ctx, int evaluations, bool grown) {
    GenerationRecord r;
    r.generation = s.generation;
    r.best_fitness = s.parent.fitness;
    r.stopped_by = s.parent.meta.stopped_by;
    r.budget = s.budget;
    r.budget_grown = grown;
    r.evaluations = evaluations;
    r.final_test_accuracy = s.parent.meta.final_test_accuracy;
    const auto p = decode(s.parent.individual, ctx.grammar);
    r.phenotype = p.serialize();
    r.provenance_counts = {{"random", 0}, {"transferred", 0}, {"duplicated", 0}};
    for (const auto& u : p.units) {
        r.provenance.push_back(u.provenance.tag());
        switch (u.provenance.origin) {
            case Origin::Random: ++r.provenance_counts["random"]; break;
            case Origin::Transferred: ++r.provenance_counts["transferred"]; break;
            case Origin::Duplicated: ++r.provenance_counts["duplicated"]; break;
        }
    }
    return r;
}

json record_json(const GenerationRecord& r) {
    json j{{"generation", r.generation},
           {"best_fitness", r.best_fitness},
           {"stopped_by", std::string(to_string(r.stopped_by))},
           {"budget", r.budget},
           {"phenotype", r.phenotype},
           {"provenance", r.provenance},
           {"provenance_counts", r.provenance_counts},
           {"budget_grown", r.budget_grown},
           {"evaluations", r.evaluations},
           {"final_test_accuracy", r.final_test_accuracy}};
    if (!r.population_provenance_counts.empty()) j["population_provenance_counts"] = r.population_provenance_counts;
    return j;
}

GenerationRecord record_from_json(const json& j) {
    GenerationRecord r;
    j.at("generation").get_to(r.generation);
    j.at("best_fitness").get_to(r.best_fitness);
    r.stopped_by = parse_stop_reason(j.at("stopped_by").get<std::string>());
    j.at("budget").get_to(r.budget);
    j.at("phenotype").get_to(r.phenotype);
    j.at("provenance").get_to(r.provenance);
    j.at("provenance_counts").get_to(r.provenance_counts);
    j.at("budget_grown").get_to(r.budget_grown);
    j.at("evaluations").get_to(r.evaluations);
    j.at("final_test_accuracy").get_to(r.final_test_accuracy);
    if (j.contains("population_provenance_counts")) j.at("population_provenance_counts").get_to(r.population_provenance_counts);
    return r;
}

std::vector<EvaluatedIndividual> evaluate_all(std::vector<Individual> inds, const RunContext& ctx, const Budget& budget,
                                              const std::vector<std::uint64_t>& seeds) {
    std::vector<EvaluatedIndividual> out(inds.size());
    const auto n = static_cast<std::int64_t>(inds.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = evaluate_individual(std::move(inds[k]), ctx, budget, seeds[k]);
    }
    return out;
}

}  // namespace

const EvaluatedIndividual& select(const EvaluatedIndividual& parent, std::span<const EvaluatedIndividual> offspring) {
    if (offspring.empty()) return parent;
    const EvaluatedIndividual* best = &offspring[0];
    for (const auto& o : offspring.subspan(1)) {
        if (o.fitness > best->fitness ||
            (o.fitness == best->fitness && o.individual.total_units() < best->individual.total_units()))
            best = &o;
    }
    if (best->fitness > parent.fitness) return *best;
    if (best->fitness == parent.fitness && best->individual.total_units() < parent.individual.total_units()) return *best;
    return parent;
}

bool update_budget(EngineState& state, const EngineConfig& cfg) {
    const auto why = state.parent.meta.stopped_by;
    if (why == StopReason::EpochCap || why == StopReason::TimeCap)
        ++state.cap_streak;
    else
        state.cap_streak = 0;
    if (state.cap_streak < cfg.budget_growth_patience) return false;
    state.cap_streak = 0;
    const auto epochs = static_cast<int>(std::llround(state.budget.max_epochs * cfg.budget_growth_factor));
    state.budget = Budget(std::max(epochs, state.budget.max_epochs + 1), state.budget.max_wall_seconds * cfg.budget_growth_factor);
    return true;
}

EngineState init_run(const EngineConfig& cfg, const RunContext& ctx) {
    cfg.validate();
    if (auto diags = validate(ctx.grammar, ctx.macro); !diags.empty())
        throw EngineError("grammar/macro invalid: <" + diags.front().symbol + "> " + diags.front().message);
    ctx.kb.check_compatible(ctx.grammar, ctx.macro);

    EngineState state;
    state.rng = Rng(cfg.seed);
    state.budget = cfg.budget0;
    auto population = seed_population(ctx.kb, ctx.grammar, ctx.macro, static_cast<std::size_t>(cfg.lambda) + 1, state.rng);

    std::map<std::string, int> seeded = {{"random", 0}, {"transferred", 0}, {"duplicated", 0}};
    for (const auto& ind : population) {
        for (const auto& b : ind.modules)
            for (const auto& r : b.units) ++seeded[r.provenance.origin == Origin::Transferred ? "transferred" : "random"];
    }

    std::vector<std::uint64_t> seeds(population.size());
    for (auto& s : seeds) s = state.rng.next_u64();
    auto evaluated = evaluate_all(std::move(population), ctx, state.budget, seeds);

    if (std::none_of(evaluated.begin(), evaluated.end(), [](const auto& e) { return e.valid(); }))
        throw EngineError("every initial individual failed evaluation (first: " + evaluated.front().meta.reason + ")");
    state.parent = select(evaluated.front(), std::span<const EvaluatedIndividual>(evaluated).subspan(1));
    state.history.push_back(make_record(state, ctx, static_cast<int>(evaluated.size()), false));
    state.history.back().population_provenance_counts = std::move(seeded);
    return state;
}

void step(EngineState& state, const EngineConfig& cfg, const RunContext& ctx) {
    if (state.generation >= cfg.generations) throw std::logic_error("run already complete");
    const auto lambda = static_cast<std::size_t>(cfg.lambda);
    std::vector<std::uint64_t> streams(lambda);
    for (auto& s : streams) s = state.rng.next_u64();

    std::vector<EvaluatedIndividual> offspring(lambda);
    const auto n = static_cast<std::int64_t>(lambda);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        Rng rng(streams[k]);
        try {
            auto child = mutate(state.parent.individual, cfg.mutation, ctx.kb, ctx.grammar, ctx.macro, rng);
            offspring[k] = evaluate_individual(std::move(child), ctx, state.budget, rng.next_u64());
        } catch (const std::exception& ex) {
            offspring[k] = EvaluatedIndividual{state.parent.individual, kInvalidFitness, EvalResult::invalid(ex.what()).meta};
        }
    }

    state.parent = EvaluatedIndividual(select(state.parent, offspring));
    int evaluations = cfg.lambda;
    const bool grown = update_budget(state, cfg);
    if (grown) {
        auto again = evaluate_individual(state.parent.individual, ctx, state.budget, state.rng.next_u64());
        state.parent.fitness = again.fitness;
        state.parent.meta = again.meta;
        ++evaluations;
    }
    ++state.generation;
    state.history.push_back(make_record(state, ctx, evaluations, grown));
}

void resume(EngineState& state, const EngineConfig& cfg, const RunContext& ctx,
            const std::function<void(const EngineState&)>& on_generation) {
    while (state.generation < cfg.generations) {
        step(state, cfg, ctx);
        if (on_generation) on_generation(state);
    }
}

EngineState run(const EngineConfig& cfg, const RunContext& ctx, const std::function<void(const EngineState&)>& on_generation) {
    auto state = init_run(cfg, ctx);
    if (on_generation) on_generation(state);
    resume(state, cfg, ctx, on_generation);
    return state;
}

std::string record_to_json_line(const GenerationRecord& r) { return record_json(r).dump() + "\n"; }

std::string run_log(const EngineState& state) {
    std::string out;
    for (const auto& r : state.history) out += record_to_json_line(r);
    return out;
}

std::vector<GenerationRecord> parse_run_log(std::string_view text) {
    std::vector<GenerationRecord> out;
    std::size_t pos = 0;
    int line = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto chunk = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line;
        if (chunk.empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(chunk)));
        } catch (const std::exception& e) {
            throw std::runtime_error("run log line " + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'G', 'E', 'V', 'O', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get(std::string_view in, std::size_t at) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return static_cast<T>(v);
}

}  // namespace

std::string checkpoint(const EngineState& state) {
    json history = json::array();
    for (const auto& r : state.history) history.push_back(record_json(r));
    json doc{{"generation", state.generation},
             {"parent", state.parent},
             {"budget", state.budget},
             {"cap_streak", state.cap_streak},
             {"rng", state.rng.state()},
             {"history", history}};
    const auto payload = json::to_cbor(doc);
    const std::string_view body(reinterpret_cast<const char*>(payload.data()), payload.size());

    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, payload.size());
    out.append(body);
    put<std::uint64_t>(out, fnv1a(body));
    return out;
}

EngineState restore(std::string_view bytes) {
    using Kind = CheckpointError::Kind;
    constexpr std::size_t header = sizeof kMagic + 4 + 8;
    if (bytes.size() < header + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw CheckpointError(Kind::Corrupt, "checkpoint checksum error: bad header");
    const auto version = get<std::uint32_t>(bytes, sizeof kMagic);
    if (version != kCheckpointVersion)
        throw CheckpointError(Kind::VersionMismatch, "checkpoint version " + std::to_string(version) + " unsupported (expected " +
                                                         std::to_string(kCheckpointVersion) + ")");
    const auto length = get<std::uint64_t>(bytes, sizeof kMagic + 4);
    if (length != bytes.size() - header - 8) throw CheckpointError(Kind::Corrupt, "checkpoint checksum error: length mismatch");
    const auto body = bytes.substr(header, length);
    if (fnv1a(body) != get<std::uint64_t>(bytes, header + length))
        throw CheckpointError(Kind::Corrupt, "checkpoint checksum error: payload digest mismatch");

    try {
        const auto doc = json::from_cbor(body);
        EngineState s;
        doc.at("generation").get_to(s.generation);
        doc.at("parent").get_to(s.parent);
        doc.at("budget").get_to(s.budget);
        doc.at("cap_streak").get_to(s.cap_streak);
        s.rng.set_state(doc.at("rng").get<std::string>());
        for (const auto& r : doc.at("history")) s.history.push_back(record_from_json(r));
        return s;
    } catch (const std::exception& e) {
        throw CheckpointError(Kind::Corrupt, std::string("checkpoint payload unreadable: ") + e.what());
    }
}

}  // namespace gramevo
