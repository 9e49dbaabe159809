#include <doctest.h>

#include <array>
#include <set>

#include "gramevo/genotype.hpp"
#include "gramevo/rng.hpp"
#include "support.hpp"

using namespace gramevo;

namespace {

// Hand mapping of a <features> unit that took the convolution branch;
// independent of the derivation walker.
std::string trace_convolution(const UnitGenotype& u) {
    static const std::array<const char*, 2> padding{"same", "valid"};
    static const std::array<const char*, 3> act{"linear", "relu", "sigmoid"};
    static const std::array<const char*, 2> bias{"True", "False"};
    return "layer:conv num-filters:" + format_number(u.params.at(0).at(0)) + " filter-shape:" + format_number(u.params.at(1).at(0)) +
           " stride:" + format_number(u.params.at(2).at(0)) + " padding:" + padding.at(u.choices.at("padding").at(0)) +
           " act:" + act.at(u.choices.at("activation").at(0)) + " bias:" + bias.at(u.choices.at("bias").at(0));
}

std::string line_of(const UnitGenotype& u, const Grammar& g) {
    return UnitSpec{u.start_symbol, decode_unit(u, g), {}}.line();
}

}  // namespace

TEST_CASE("softmax unit has a single derivation") {
    const auto g = testing::cnn();
    Rng rng(3);
    const auto u = sample_unit(g, "softmax", rng);
    CHECK(u.params.empty());
    CHECK(u.choices.at("softmax") == std::vector<int>{0});
    CHECK(line_of(u, g) == "layer:fc act:softmax num-units:10 bias:True");
    Rng other(99);
    CHECK(sample_unit(g, "softmax", other) == u);
}

TEST_CASE("padding choices are uniform") {
    const auto g = testing::cnn();
    Rng rng(11);
    int same = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) same += sample_unit(g, "padding", rng).choices.at("padding").at(0) == 0;
    CHECK(std::abs(static_cast<double>(same) / n - 0.5) <= 0.02);
}

TEST_CASE("sampled convolutions respect the parameter blocks") {
    const auto g = testing::cnn();
    Rng rng(5);
    std::set<int> shapes;
    int seen = 0;
    while (seen < 2000) {
        const auto u = sample_unit(g, "features", rng);
        if (u.choices.at("features")[0] > 1) continue;
        ++seen;
        const double fs = u.params.at(1).at(0);
        CHECK(fs == std::floor(fs));
        CHECK(fs >= 2);
        CHECK(fs <= 5);
        shapes.insert(static_cast<int>(fs));
    }
    CHECK(shapes == std::set<int>{2, 3, 4, 5});
}

TEST_CASE("golden convolution line") {
    const auto golden = testing::slurp(testing::repo("tests/golden/conv_unit.txt"));
    const auto nl = golden.find('\n');
    const auto seed = std::stoull(golden.substr(5, nl - 5));
    const auto expected = golden.substr(nl + 1, golden.find('\n', nl + 1) - nl - 1);

    const auto g = testing::cnn();
    Rng rng(seed);
    const auto u = sample_unit(g, "features", rng);
    REQUIRE(u.choices.at("features")[0] <= 1);
    CHECK(trace_convolution(u) == expected);
    CHECK(line_of(u, g) == expected);
}

TEST_CASE("hand-built genotype decodes to the traced line") {
    const auto g = testing::cnn();
    UnitGenotype u{"features",
                   {{"features", {1}}, {"convolution", {0}}, {"padding", {1}}, {"activation", {1}}, {"bias", {0}}},
                   {{64}, {3}, {2}}};
    CHECK(line_of(u, g) == "layer:conv num-filters:64 filter-shape:3 stride:2 padding:valid act:relu bias:True");
    CHECK(line_of(u, g) == trace_convolution(u));
}

TEST_CASE("multi-valued parameters render comma-joined") {
    const auto g = testing::toy();
    UnitGenotype u{"tail", {{"tail", {0}}}, {{1, 4, 2}}};
    CHECK(line_of(u, g) == "tail:end t:1,4,2");
}

TEST_CASE("sample_individual") {
    const auto g = testing::cnn();
    SUBCASE("forced counts") {
        Rng rng(1);
        const auto ind = sample_individual(g, parse_macro("[(softmax,1,1)]"), rng);
        REQUIRE(ind.modules.size() == 1);
        CHECK(ind.modules[0].units.size() == 1);
    }
    SUBCASE("block lengths within bounds and deterministic") {
        std::set<std::size_t> lengths;
        for (std::uint64_t s = 0; s < 300; ++s) {
            Rng a(s), b(s);
            const auto x = sample_individual(g, testing::cnn_macro(), a);
            CHECK(x == sample_individual(g, testing::cnn_macro(), b));
            const auto n = x.modules[0].units.size();
            CHECK(n >= 1);
            CHECK(n <= 30);
            lengths.insert(n);
            CHECK(check_individual(x, g, testing::cnn_macro()).empty());
        }
        CHECK(lengths.size() > 20);
    }
}

TEST_CASE("sample then decode never fails") {
    const std::vector<std::pair<Grammar, MacroStructure>> fixtures{
        {testing::cnn(), testing::cnn_macro()}, {testing::dense(), testing::dense_macro()}, {testing::toy(), testing::toy_macro()}};
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        const auto& [g, m] = fixtures[static_cast<std::size_t>(i) % fixtures.size()];
        const auto ind = sample_individual(g, m, rng);
        CHECK_NOTHROW(decode(ind, g));
    }
}

TEST_CASE("decode is pure and shares referenced units") {
    const auto g = testing::cnn();
    Rng rng(8);
    auto ind = sample_individual(g, testing::cnn_macro(), rng);
    auto& block = ind.modules[0].units;
    block.push_back(UnitRef{block[0].id, {Origin::Duplicated, ""}});
    block.push_back(UnitRef{block[0].id, {Origin::Duplicated, ""}});
    const auto p = decode(ind, g);
    const auto n = block.size();
    CHECK(p.units[0].line() == p.units[n - 1].line());
    CHECK(p.units[0].line() == p.units[n - 2].line());
    CHECK(p.units[n - 1].provenance.tag() == "duplicated");
    CHECK(decode(ind, g).serialize() == p.serialize());
    CHECK(p.serialize_tagged().rfind("[random] ", 0) == 0);
}

TEST_CASE("decode rejects inconsistent genotypes") {
    const auto g = testing::cnn();
    UnitGenotype u{"softmax", {{"softmax", {0, 0}}}, {}};
    CHECK_THROWS_WITH_AS(decode_unit(u, g), doctest::Contains("<softmax>"), DecodeError);
    u.choices["softmax"] = {0};
    u.params.push_back({1});
    CHECK_THROWS_AS(decode_unit(u, g), DecodeError);
    UnitGenotype out_of_range{"padding", {{"padding", {2}}}, {}};
    CHECK_THROWS_AS(decode_unit(out_of_range, g), DecodeError);
    Individual ind;
    ind.modules.push_back(ModuleBlock{"softmax", {UnitRef{7, {}}}});
    CHECK_THROWS_AS(decode(ind, g), DecodeError);
}

TEST_CASE("repair") {
    const auto g = testing::cnn();
    Rng rng(17);
    SUBCASE("consistent units are fixpoints") {
        for (int i = 0; i < 200; ++i) {
            const auto u = sample_unit(g, i % 2 ? "features" : "learning", rng);
            CHECK(repair(u, g, rng) == u);
        }
    }
    SUBCASE("convolution flipped to pooling") {
        UnitGenotype u;
        do u = sample_unit(g, "features", rng);
        while (u.choices.at("features")[0] > 1);
        u.choices["features"][0] = 2;
        const auto r = repair(u, g, rng);
        const auto tokens = decode_unit(r, g);
        CHECK(tokens[0].second.rfind("pool-", 0) == 0);
        CHECK(r.choices.count("convolution") == 0);
        CHECK(r.choices.count("pool-type") == 1);
    }
    SUBCASE("learning flipped between optimizers") {
        for (int from = 0; from < 3; ++from) {
            for (int to = 0; to < 3; ++to) {
                if (from == to) continue;
                UnitGenotype u;
                do u = sample_unit(g, "learning", rng);
                while (u.choices.at("learning")[0] != from);
                u.choices["learning"][0] = to;
                const auto r = repair(u, g, rng);
                const auto spec = UnitSpec{"learning", decode_unit(r, g), {}};
                const std::array<const char*, 3> names{"gradient-descent", "rmsprop", "adam"};
                CHECK(*spec.get("learning") == names[static_cast<std::size_t>(to)]);
                CHECK(spec.get("batch_size") != nullptr);
                CHECK(spec.get("early_stop") != nullptr);
            }
        }
    }
    SUBCASE("idempotent on damaged units") {
        for (int i = 0; i < 500; ++i) {
            auto u = sample_unit(g, "features", rng);
            for (auto& [nt, list] : u.choices)
                for (auto& c : list)
                    if (rng.bernoulli(0.3)) c = static_cast<int>(rng.index(6));
            if (rng.bernoulli(0.5) && !u.params.empty()) u.params.pop_back();
            if (rng.bernoulli(0.3)) u.params.push_back({1.0});
            const auto once = repair(u, g, rng);
            CHECK_NOTHROW(decode_unit(once, g));
            CHECK(repair(once, g, rng) == once);
        }
    }
}

TEST_CASE("set_choice resamples only the subtree below the gene") {
    const auto g = testing::toy();
    Rng rng(4);
    // <pair> with two <leaf> children; flip the first leaf only.
    UnitGenotype u{"block", {{"block", {1}}, {"pair", {0}}, {"leaf", {0, 0}}, {"shade", {0, 2}}}, {{0.5, -0.5}, {0.25, 0.75}}};
    REQUIRE(line_of(u, g) == "kind:pair kind:leaf shade:dark w:0.5,-0.5 kind:leaf shade:grey w:0.25,0.75");
    const auto r = set_choice(u, g, ChoiceGene{"leaf", 0, 2}, 1, rng);
    const auto line = line_of(r, g);
    CHECK(line.rfind("kind:pair kind:int n:", 0) == 0);
    CHECK(line.find("kind:leaf shade:grey w:0.25,0.75") != std::string::npos);
    CHECK(r.choices.at("shade") == std::vector<int>{2});

    CHECK_THROWS_AS(set_choice(u, g, ChoiceGene{"leaf", 5, 2}, 1, rng), std::invalid_argument);
}

TEST_CASE("genes enumerates choices and parameter values in derivation order") {
    const auto g = testing::toy();
    UnitGenotype u{"block", {{"block", {1}}, {"pair", {0}}, {"leaf", {0, 1}}, {"shade", {0}}}, {{0.5, -0.5}, {3}}};
    const auto map = genes(u, g);
    REQUIRE(map.choices.size() == 5);
    CHECK(map.choices[0].nonterminal == "block");
    CHECK(map.choices[2].nonterminal == "leaf");
    CHECK(map.choices[3].nonterminal == "shade");
    CHECK(map.choices[4].occurrence == 1);
    REQUIRE(map.params.size() == 3);
    CHECK(map.params[1].value == 1);
    CHECK(map.params[2].spec.name == "n");
}

TEST_CASE("individual bookkeeping") {
    Individual ind;
    const auto a = ind.insert(UnitGenotype{"x", {}, {}});
    const auto b = ind.insert(UnitGenotype{"y", {}, {}});
    CHECK(b == a + 1);
    ind.modules.push_back(ModuleBlock{"m", {UnitRef{b, {}}, UnitRef{b, {}}}});
    CHECK(ind.reference_count(b) == 2);
    CHECK(ind.reference_count(a) == 0);
    ind.collect_garbage();
    CHECK(ind.unit_pool.size() == 1);
    ind.compact();
    CHECK(ind.modules[0].units[0].id == 0);
    CHECK(ind.unit_pool.begin()->first == 0);
    CHECK(ind.total_units() == 2);
}

TEST_CASE("check_individual reports broken invariants") {
    const auto g = testing::cnn();
    const auto m = parse_macro("[(softmax,1,1),(learning,1,1)]");
    Rng rng(1);
    auto ind = sample_individual(g, m, rng);
    CHECK(check_individual(ind, g, m).empty());
    ind.modules[0].units.push_back(ind.modules[0].units[0]);
    CHECK(!check_individual(ind, g, m).empty());
    ind.modules[0].units.pop_back();
    ind.insert(UnitGenotype{"softmax", {{"softmax", {0}}}, {}});
    CHECK(!check_individual(ind, g, m).empty());
}

TEST_CASE("provenance tags round-trip") {
    for (const auto& p : {Provenance{}, Provenance{Origin::Duplicated, ""}, Provenance{Origin::Transferred, "digits_0_4"}})
        CHECK(Provenance::parse(p.tag()) == p);
    CHECK(Provenance{Origin::Transferred, "a"}.tag() == "transferred(a)");
    CHECK_THROWS_AS(Provenance::parse("borrowed"), std::invalid_argument);
}

TEST_CASE("recursion guard") {
    const auto g = parse_grammar("<loop> ::= k:v <loop>\n");
    Rng rng(0);
    CHECK_THROWS_AS(sample_unit(g, "loop", rng), SamplingError);
}
