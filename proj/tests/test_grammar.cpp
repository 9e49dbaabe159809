#include <doctest.h>

#include <set>

#include "gramevo/grammar.hpp"
#include "gramevo/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gramevo;

namespace {

const ParamSpec& param_at(const Grammar& g, const std::string& lhs, std::size_t alt, std::size_t pos) {
    return std::get<ParamSpec>(g.at(lhs).alternatives.at(alt).at(pos));
}

}  // namespace

TEST_CASE("padding production has two single-literal alternatives") {
    const auto g = parse_grammar("<padding> ::= padding:same | padding:valid\n");
    const auto& p = g.at("padding");
    REQUIRE(p.alternatives.size() == 2);
    CHECK(p.alternatives[0] == Alternative{Literal{"padding:same"}});
    CHECK(p.alternatives[1] == Alternative{Literal{"padding:valid"}});
}

TEST_CASE("parameter blocks of the cnn grammar") {
    const auto g = testing::cnn();
    CHECK(param_at(g, "convolution", 0, 2) == ParamSpec{"filter-shape", ParamKind::Int, 1, 2, 5});
    CHECK(param_at(g, "dropout", 0, 1) == ParamSpec{"rate", ParamKind::Float, 1, 0, 0.7});
    CHECK(param_at(g, "fully-connected", 0, 2) == ParamSpec{"num-units", ParamKind::Int, 1, 128, 2048});
}

TEST_CASE("softmax literal keeps ten outputs") {
    const auto g = testing::cnn();
    const Alternative expected{Literal{"layer:fc"}, Literal{"act:softmax"}, Literal{"num-units:10"}, Literal{"bias:True"}};
    REQUIRE(g.at("softmax").alternatives.size() == 1);
    CHECK(g.at("softmax").alternatives[0] == expected);
}

TEST_CASE("continuation lines extend the current alternative") {
    const auto g = testing::cnn();
    const auto& conv = g.at("convolution");
    REQUIRE(conv.alternatives.size() == 1);
    CHECK(conv.alternatives[0].size() == 7);
    CHECK(g.at("features").alternatives.size() == 6);
    CHECK(g.at("learning").alternatives.size() == 3);
}

TEST_CASE("parse errors report position") {
    SUBCASE("inverted range") {
        try {
            parse_grammar("<a> ::= x:y\n<b> ::= [x,int,1,5,2]\n");
            FAIL("expected GrammarError");
        } catch (const GrammarError& e) {
            CHECK(e.line() == 2);
            CHECK(std::string(e.what()).find("min") != std::string::npos);
        }
    }
    SUBCASE("unknown kind") { CHECK_THROWS_AS(parse_grammar("<a> ::= [x,double,1,0,1]\n"), GrammarError); }
    SUBCASE("zero count") { CHECK_THROWS_AS(parse_grammar("<a> ::= [x,int,0,0,1]\n"), GrammarError); }
    SUBCASE("literal without colon") { CHECK_THROWS_AS(parse_grammar("<a> ::= plain\n"), GrammarError); }
    SUBCASE("missing assignment") {
        try {
            parse_grammar("# header\n<a> = x:y\n");
            FAIL("expected GrammarError");
        } catch (const GrammarError& e) {
            CHECK(e.line() == 2);
        }
    }
    SUBCASE("duplicate production") { CHECK_THROWS_AS(parse_grammar("<a> ::= x:y\n<a> ::= x:z\n"), GrammarError); }
    SUBCASE("duplicate parameter name in one alternative") {
        CHECK_THROWS_AS(parse_grammar("<a> ::= [p,int,1,0,1] k:v [p,int,1,0,2] | [p,int,1,0,1]\n"), GrammarError);
        CHECK_NOTHROW(parse_grammar("<a> ::= [p,int,1,0,1] | [p,int,1,0,2]\n"));
    }
}

TEST_CASE("serialize round-trips the shipped grammars") {
    for (const auto& g : {testing::cnn(), testing::dense(), testing::toy()}) {
        const auto text = serialize_grammar(g);
        const auto back = parse_grammar(text);
        CHECK(back == g);
        CHECK(serialize_grammar(back) == text);
        for (const auto& p : g.productions()) {
            const auto& q = back.at(p.lhs);
            REQUIRE(q.alternatives.size() == p.alternatives.size());
            for (std::size_t i = 0; i < p.alternatives.size(); ++i) CHECK(q.alternatives[i] == p.alternatives[i]);
        }
    }
}

TEST_CASE("serialize edge cases") {
    const auto one = parse_grammar("<padding> ::= padding:same | padding:valid\n");
    const auto text = serialize_grammar(one);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(text.back() == '\n');

    Grammar bad;
    bad.add(Production{"x", {Alternative{}}});
    CHECK_THROWS_AS(serialize_grammar(bad), std::invalid_argument);
}

TEST_CASE("fuzzed grammars round-trip") {
    Rng rng(20240611);
    for (int i = 0; i < 300; ++i) {
        const auto g = testing::fuzz_grammar(rng);
        REQUIRE(parse_grammar(serialize_grammar(g)) == g);
    }
}

TEST_CASE("validate") {
    const auto g = testing::cnn();
    SUBCASE("standard macro-structure is clean") { CHECK(validate(g, testing::cnn_macro()).empty()); }
    SUBCASE("undefined start symbol") {
        const auto d = validate(g, parse_macro("[(missing,1,2),(learning,1,1)]"));
        REQUIRE(d.size() == 1);
        CHECK(d[0] == Diagnostic{"missing", "undefined start symbol"});
    }
    SUBCASE("dangling reference") {
        auto text = testing::slurp(testing::repo("grammars/cnn.grm"));
        const auto at = text.find("<pool-type> ::=");
        text.erase(at, text.find('\n', at) - at + 1);
        const auto d = validate(parse_grammar(text), testing::cnn_macro());
        REQUIRE(d.size() == 1);
        CHECK(d[0].symbol == "pool-type");
    }
    SUBCASE("diagnostics name symbols from the input") {
        Grammar h;
        h.add(Production{"a", {Alternative{NonTerminal{"b"}, ParamSpec{"p", ParamKind::Int, 1, 3, 1}}}});
        const auto d = validate(h, MacroStructure{{MacroBlock{"a", 2, 1}, MacroBlock{"c", 1, 1}}});
        CHECK(d.size() == 4);
        for (const auto& x : d) CHECK((x.symbol == "a" || x.symbol == "b" || x.symbol == "c"));
    }
}

TEST_CASE("macro-structure") {
    const auto m = testing::cnn_macro();
    REQUIRE(m.blocks.size() == 4);
    CHECK(m.blocks[0] == MacroBlock{"features", 1, 30});
    CHECK(m.blocks[1] == MacroBlock{"classification", 1, 10});
    CHECK(parse_macro(serialize_macro(m)) == m);
    CHECK(parse_macro("(softmax, 1, 1)") == parse_macro("[(softmax,1,1)]"));
    CHECK_THROWS_AS(parse_macro("[(a,3,1)]"), GrammarError);
    CHECK_THROWS_AS(parse_macro("[(a,1)]"), GrammarError);
    CHECK_THROWS_AS(parse_macro("[]"), GrammarError);
}

TEST_CASE("fingerprints separate search spaces") {
    CHECK(fingerprint(testing::cnn()) == fingerprint(parse_grammar(serialize_grammar(testing::cnn()))));
    CHECK(fingerprint(testing::cnn()) != fingerprint(testing::dense()));
    CHECK(fingerprint(testing::cnn_macro()) != fingerprint(testing::dense_macro()));
    CHECK(fingerprint(testing::cnn()).size() == 16);
}

TEST_CASE("number rendering is the shortest round trip") {
    CHECK(format_number(0.35) == "0.35");
    CHECK(format_number(128) == "128");
    CHECK(format_number(1e-6) == "1e-06");
    CHECK(format_number(0.7) == "0.7");
    for (double v : {0.1 + 0.2, 1.0 / 3.0, 2048.0, -0.0001}) CHECK(std::stod(format_number(v)) == v);
}
