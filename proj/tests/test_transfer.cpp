#include <doctest.h>

#include <set>

#include "gramevo/network.hpp"
#include "gramevo/serialize.hpp"
#include "gramevo/transfer.hpp"
#include "support.hpp"

using namespace gramevo;

namespace {

KnowledgeBase two_champions(const Grammar& g, const MacroStructure& m, Rng& rng) {
    auto a = sample_individual(g, m, rng);
    // duplicate a feature unit by reference so sharing can be observed after transfer
    a.modules[0].units.push_back(UnitRef{a.modules[0].units[0].id, {Origin::Duplicated, ""}});
    const auto b = sample_individual(g, m, rng);
    auto kb = add_champion(KnowledgeBase{}, "A", EvaluatedIndividual{a, 0.8, {}}, g, m);
    return add_champion(kb, "B", EvaluatedIndividual{b, 0.6, {}}, g, m);
}

}  // namespace

TEST_CASE("add_champion keeps a frozen copy") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    Rng rng(1);
    auto ind = sample_individual(g, m, rng);
    const auto kb = add_champion(KnowledgeBase{}, "A", EvaluatedIndividual{ind, 0.7, {}}, g, m);
    ind.modules[0].units.clear();
    REQUIRE(kb.size() == 1);
    CHECK(kb[0].task_id == "A");
    CHECK(kb[0].fitness == 0.7);
    CHECK_FALSE(kb[0].individual.modules[0].units.empty());
    CHECK(kb[0].grammar_fingerprint == fingerprint(g));
    CHECK(kb[0].macro_fingerprint == fingerprint(m));
    CHECK_THROWS_AS(add_champion(kb, "B", EvaluatedIndividual{ind, kInvalidFitness, {}}, g, m), std::invalid_argument);
}

TEST_CASE("seed_with_plan mixes transferred and random blocks") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    Rng rng(2);
    const auto kb = two_champions(g, m, rng);
    const SeedPlan plan{0, std::nullopt, std::nullopt, 1};
    const auto ind = seed_with_plan(kb, g, m, plan, rng);
    REQUIRE(check_individual(ind, g, m).empty());

    const auto& champ_a = kb[0].individual;
    REQUIRE(ind.modules[0].units.size() == champ_a.modules[0].units.size());
    for (std::size_t i = 0; i < ind.modules[0].units.size(); ++i) {
        CHECK(ind.unit(ind.modules[0].units[i].id) == champ_a.unit(champ_a.modules[0].units[i].id));
        CHECK(ind.modules[0].units[i].provenance.tag() == "transferred(A)");
    }
    for (const auto& r : ind.modules[1].units) CHECK(r.provenance.origin == Origin::Random);
    for (const auto& r : ind.modules[2].units) CHECK(r.provenance.origin == Origin::Random);
    const auto& champ_b = kb[1].individual;
    CHECK(ind.unit(ind.modules[3].units[0].id) == champ_b.unit(champ_b.modules[3].units[0].id));
    CHECK(ind.modules[3].units[0].provenance.tag() == "transferred(B)");

    const auto& copied = ind.modules[0].units;
    CHECK(copied.back().id == copied.front().id);
    std::set<UnitId> distinct;
    for (const auto& r : copied) distinct.insert(r.id);
    std::set<UnitId> original;
    for (const auto& r : champ_a.modules[0].units) original.insert(r.id);
    CHECK(distinct.size() == original.size());

    CHECK_THROWS_AS(seed_with_plan(kb, g, m, SeedPlan{0, 0}, rng), std::invalid_argument);
}

TEST_CASE("incompatible knowledge is rejected") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    Rng rng(3);
    const auto kb = two_champions(g, m, rng);
    const auto other = parse_macro("[(features,1,20),(classification,1,10),(softmax,1,1),(learning,1,1)]");
    CHECK_THROWS_AS(kb.check_compatible(g, other), IncompatibleKnowledge);
    CHECK_THROWS_AS(seed_individual(kb, g, other, rng), IncompatibleKnowledge);
    const auto g2 = parse_grammar(serialize_grammar(g) + "<extra> ::= extra:yes\n");
    CHECK_THROWS_AS(kb.check_compatible(g2, m), IncompatibleKnowledge);
    CHECK_NOTHROW(kb.check_compatible(g, m));
}

TEST_CASE("seed_population") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    Rng rng(4);
    SUBCASE("empty kb means all random") {
        for (const auto& ind : seed_population(KnowledgeBase{}, g, m, 6, rng))
            for (const auto& mb : ind.modules)
                for (const auto& r : mb.units) CHECK(r.provenance.origin == Origin::Random);
    }
    SUBCASE("non-empty kb guarantees one random and one fully transferred individual") {
        const auto kb = two_champions(g, m, rng);
        for (int trial = 0; trial < 50; ++trial) {
            const auto pop = seed_population(kb, g, m, 6, rng);
            REQUIRE(pop.size() == 6);
            int all_random = 0, all_transferred = 0;
            for (const auto& ind : pop) {
                REQUIRE(check_individual(ind, g, m).empty());
                bool random = true, transferred = true;
                std::set<std::string> sources;
                for (const auto& mb : ind.modules)
                    for (const auto& r : mb.units) {
                        random = random && r.provenance.origin == Origin::Random;
                        transferred = transferred && r.provenance.origin == Origin::Transferred;
                        sources.insert(r.provenance.task_id);
                    }
                all_random += random;
                all_transferred += transferred && sources.size() == 1;
            }
            CHECK(all_random >= 1);
            CHECK(all_transferred >= 1);
        }
    }
    SUBCASE("block-level coin is fair") {
        const auto kb = two_champions(g, m, rng);
        int transferred = 0, total = 0;
        for (int i = 0; i < 4000; ++i) {
            const auto ind = seed_individual(kb, g, m, rng);
            for (const auto& mb : ind.modules) {
                ++total;
                transferred += mb.units[0].provenance.origin == Origin::Transferred;
            }
        }
        CHECK(static_cast<double>(transferred) / total == doctest::Approx(0.5).epsilon(0.04));
    }
    CHECK_THROWS_AS(seed_population(KnowledgeBase{}, g, m, 0, rng), std::invalid_argument);
}

TEST_CASE("knowledge base file round trip") {
    const auto g = testing::cnn();
    const auto m = testing::cnn_macro();
    Rng rng(5);
    const auto kb = two_champions(g, m, rng);
    const auto text = save_knowledge_base(kb);
    const auto back = load_knowledge_base(text);
    CHECK(back == kb);
    CHECK(save_knowledge_base(back) == text);
    CHECK(load_knowledge_base(save_knowledge_base(KnowledgeBase{})).empty());
    CHECK_THROWS(load_knowledge_base("{not json"));
    CHECK_THROWS(load_knowledge_base(R"({"format":"other","version":1,"champions":[]})"));
    CHECK_THROWS(load_knowledge_base(R"({"format":"gramevo-kb","version":99,"champions":[]})"));
}

TEST_CASE("transfer carries no trained state") {
    const auto g = testing::dense();
    const auto m = testing::dense_macro();
    const auto task = testing::blob_task(3);
    const TrainerEvaluator eval(task);
    Rng rng(6);
    Individual ind;
    CompileResult compiled;
    do {
        ind = sample_individual(g, m, rng);
        compiled = compile_trainable(decode(ind, g), *task);
    } while (!compiled);
    const Budget budget(5, 30);
    const auto before = eval.evaluate(decode(ind, g), budget, 11);

    const auto kb = add_champion(KnowledgeBase{}, "blobs", EvaluatedIndividual{ind, before.fitness, before.meta}, g, m);
    const auto copy = seed_with_plan(kb, g, m, SeedPlan(m.blocks.size(), 0), rng);
    CHECK(decode(copy, g).serialize() == decode(ind, g).serialize());
    const auto after = eval.evaluate(decode(copy, g), budget, 11);
    CHECK(after.fitness == before.fitness);
    CHECK(after.meta.epochs_used == before.meta.epochs_used);
}
