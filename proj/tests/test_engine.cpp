#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "gramevo/engine.hpp"
#include "gramevo/synthetic.hpp"
#include "support.hpp"

using namespace gramevo;

namespace {

struct SyntheticFixture {
    Grammar g = testing::cnn();
    MacroStructure m = testing::cnn_macro();
    KnowledgeBase kb;
    SyntheticEvaluator eval{TargetSpec::from_phenotype(parse_phenotype(testing::slurp(testing::repo("configs/targets/a.phen"))), g)};
    RunContext ctx() const { return RunContext{g, m, kb, eval}; }
};

EngineConfig config(std::uint64_t seed, int generations = 10) {
    EngineConfig cfg;
    cfg.seed = seed;
    cfg.generations = generations;
    return cfg;
}

EvaluatedIndividual scored(const Individual& ind, double fitness) { return EvaluatedIndividual{ind, fitness, {}}; }

Individual with_units(const Grammar& g, const MacroStructure& m, std::size_t total, Rng& rng) {
    Individual ind;
    do ind = sample_individual(g, m, rng);
    while (ind.total_units() != total);
    return ind;
}

}  // namespace

TEST_CASE("select") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    Rng rng(1);
    const auto small = with_units(g, m, 5, rng);
    const auto big = with_units(g, m, 8, rng);
    const auto parent = scored(big, 0.5);

    SUBCASE("strictly better offspring wins") {
        const std::vector<EvaluatedIndividual> kids{scored(big, 0.4), scored(big, 0.6), scored(small, 0.55)};
        CHECK(&select(parent, kids) == &kids[1]);
    }
    SUBCASE("equal fitness with fewer units replaces the parent") {
        const std::vector<EvaluatedIndividual> kids{scored(big, 0.5), scored(small, 0.5)};
        CHECK(&select(parent, kids) == &kids[1]);
    }
    SUBCASE("equal fitness and size keeps the parent") {
        const std::vector<EvaluatedIndividual> kids{scored(big, 0.5)};
        CHECK(&select(parent, kids) == &parent);
    }
    SUBCASE("invalid offspring never win") {
        const std::vector<EvaluatedIndividual> kids{scored(small, kInvalidFitness), scored(small, kInvalidFitness)};
        CHECK(&select(parent, kids) == &parent);
    }
    SUBCASE("no offspring") { CHECK(&select(parent, {}) == &parent); }
}

TEST_CASE("update_budget") {
    EngineConfig cfg;
    cfg.budget0 = Budget(10, 20);
    cfg.budget_growth_patience = 2;
    cfg.budget_growth_factor = 1.5;
    EngineState s;
    s.budget = cfg.budget0;
    s.parent.meta.stopped_by = StopReason::EpochCap;
    CHECK_FALSE(update_budget(s, cfg));
    CHECK(s.cap_streak == 1);
    s.parent.meta.stopped_by = StopReason::EarlyStop;
    CHECK_FALSE(update_budget(s, cfg));
    CHECK(s.cap_streak == 0);
    s.parent.meta.stopped_by = StopReason::TimeCap;
    CHECK_FALSE(update_budget(s, cfg));
    s.parent.meta.stopped_by = StopReason::EpochCap;
    CHECK(update_budget(s, cfg));
    CHECK(s.budget == Budget(15, 30));
    CHECK(s.cap_streak == 0);

    cfg.budget_growth_factor = 1.01;
    cfg.budget_growth_patience = 1;
    s.budget = Budget(3, 1);
    CHECK(update_budget(s, cfg));
    CHECK(s.budget.max_epochs == 4);
}

TEST_CASE("config validation") {
    auto cfg = config(0);
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = config(0);
    cfg.budget_growth_factor = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = config(0);
    cfg.budget0.max_epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("run bookkeeping") {
    SyntheticFixture fx;
    const auto cfg = config(5, 12);
    int calls = 0;
    const auto state = run(cfg, fx.ctx(), [&](const EngineState& s) {
        CHECK(s.generation == calls);
        CHECK(s.history.size() == static_cast<std::size_t>(calls) + 1);
        ++calls;
    });
    CHECK(calls == 13);
    REQUIRE(state.history.size() == 13);
    CHECK(state.history[0].evaluations == cfg.lambda + 1);
    CHECK(state.history[0].population_provenance_counts.at("random") > 0);
    for (std::size_t i = 1; i < state.history.size(); ++i) {
        const auto& r = state.history[i];
        CHECK(r.generation == static_cast<int>(i));
        CHECK(r.evaluations == cfg.lambda);
        CHECK(r.best_fitness >= state.history[i - 1].best_fitness);
        CHECK_FALSE(r.budget_grown);
        CHECK(r.population_provenance_counts.empty());
        CHECK(r.provenance.size() == static_cast<std::size_t>(std::count(r.phenotype.begin(), r.phenotype.end(), '\n')));
    }
    CHECK(state.history.back().best_fitness == state.parent.fitness);
    CHECK(state.history.back().phenotype == decode(state.parent.individual, fx.g).serialize());
    CHECK(parse_run_log(run_log(state)) == state.history);
}

TEST_CASE("runs are reproducible and thread-count independent") {
    SyntheticFixture fx;
    const auto cfg = config(9);
    const int threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = run(cfg, fx.ctx());
    omp_set_num_threads(4);
    const auto four = run(cfg, fx.ctx());
    omp_set_num_threads(threads);
    CHECK(one == four);
    CHECK(run_log(one) == run_log(four));
    CHECK(run_log(run(config(10), fx.ctx())) != run_log(one));
}

TEST_CASE("resume continues exactly where a checkpoint left off") {
    SyntheticFixture fx;
    auto cfg = config(21, 15);
    const auto straight = run(cfg, fx.ctx());

    auto partial_cfg = cfg;
    partial_cfg.generations = 6;
    const auto partial = run(partial_cfg, fx.ctx());
    auto restored = restore(checkpoint(partial));
    CHECK(restored == partial);
    resume(restored, cfg, fx.ctx());
    CHECK(restored == straight);
    CHECK(run_log(restored) == run_log(straight));
}

TEST_CASE("checkpoint integrity") {
    SyntheticFixture fx;
    const auto state = run(config(4, 3), fx.ctx());
    const auto bytes = checkpoint(state);
    CHECK(restore(bytes) == state);

    auto kind_of = [](const std::string& b) {
        try {
            restore(b);
        } catch (const CheckpointError& e) {
            return e.kind();
        }
        FAIL("restore accepted damaged bytes");
        return CheckpointError::Kind::Corrupt;
    };

    for (std::size_t at : {std::size_t{0}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        auto damaged = bytes;
        damaged[at] = static_cast<char>(damaged[at] ^ 0x40);
        CHECK(kind_of(damaged) == CheckpointError::Kind::Corrupt);
    }
    CHECK(kind_of(bytes.substr(0, bytes.size() - 3)) == CheckpointError::Kind::Corrupt);
    CHECK(kind_of(bytes + "x") == CheckpointError::Kind::Corrupt);
    CHECK(kind_of("") == CheckpointError::Kind::Corrupt);

    auto future = bytes;
    future[8] = static_cast<char>(kCheckpointVersion + 1);
    CHECK(kind_of(future) == CheckpointError::Kind::VersionMismatch);

    Rng rng(77);
    for (int i = 0; i < 500; ++i) {
        std::string noise(rng.index(200), '\0');
        for (auto& c : noise) c = static_cast<char>(rng.next_u64());
        if (i % 2) noise = bytes.substr(0, 8) + noise;
        CHECK_THROWS_AS(restore(noise), CheckpointError);
    }
}

TEST_CASE("invalid evaluations") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    const KnowledgeBase kb;
    const testing::FunctionEvaluator fine([](const Phenotype& p, const Budget&, std::uint64_t) {
        EvalResult r;
        r.fitness = 1.0 / static_cast<double>(p.units.size());
        return r;
    });
    const testing::FunctionEvaluator broken([](const Phenotype&, const Budget&, std::uint64_t) {
        return EvalResult::invalid("boom");
    });
    const testing::FunctionEvaluator throwing([](const Phenotype&, const Budget&, std::uint64_t) -> EvalResult {
        throw std::runtime_error("crash");
    });
    const testing::FunctionEvaluator out_of_range([](const Phenotype&, const Budget&, std::uint64_t) {
        EvalResult r;
        r.fitness = 1.5;
        return r;
    });
    const auto cfg = config(2, 5);

    SUBCASE("all-invalid offspring leave the parent in place") {
        for (const Evaluator* e : {static_cast<const Evaluator*>(&broken), static_cast<const Evaluator*>(&throwing),
                                   static_cast<const Evaluator*>(&out_of_range)}) {
            auto state = init_run(cfg, RunContext{g, m, kb, fine});
            const auto parent = state.parent;
            step(state, cfg, RunContext{g, m, kb, *e});
            CHECK(state.generation == 1);
            CHECK(state.parent == parent);
            CHECK(state.history.back().best_fitness == parent.fitness);
        }
    }
    SUBCASE("an all-invalid initial population is an error") {
        CHECK_THROWS_AS(init_run(cfg, RunContext{g, m, kb, broken}), EngineError);
        CHECK_THROWS_AS(init_run(cfg, RunContext{g, m, kb, out_of_range}), EngineError);
    }
}

TEST_CASE("budget growth re-evaluates the parent") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    const KnowledgeBase kb;
    // Always capped, so the budget grows every `patience` generations.
    const testing::FunctionEvaluator capped([](const Phenotype& p, const Budget& b, std::uint64_t) {
        EvalResult r;
        r.fitness = std::min(1.0, b.max_epochs / 1000.0 + 0.01 / static_cast<double>(p.units.size()));
        r.meta.stopped_by = StopReason::EpochCap;
        r.meta.epochs_used = b.max_epochs;
        return r;
    });
    auto cfg = config(3, 7);
    cfg.budget0 = Budget(10, 5);
    cfg.budget_growth_patience = 3;
    const auto state = run(cfg, RunContext{g, m, kb, capped});
    const auto& h = state.history;
    CHECK(state.budget == Budget(40, 20));
    for (int gen = 1; gen <= 7; ++gen) {
        const bool grown = gen == 3 || gen == 6;
        CHECK(h[gen].budget_grown == grown);
        CHECK(h[gen].evaluations == cfg.lambda + (grown ? 1 : 0));
    }
    CHECK(h[2].budget == Budget(10, 5));
    CHECK(h[3].budget == Budget(20, 10));
    CHECK(h[6].budget == Budget(40, 20));
    CHECK(state.parent.meta.epochs_used == 40);
}

TEST_CASE("golden synthetic history") {
    SyntheticFixture fx;
    const auto log = run_log(run(config(2024, 10), fx.ctx()));
    const auto path = testing::repo("tests/golden/synthetic_history.jsonl");
    if (std::getenv("GRAMEVO_UPDATE_GOLDEN")) std::ofstream(path, std::ios::binary) << log;
    CHECK(log == testing::slurp(path));
}
