#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <memory>

#include "gramevo/evaluator.hpp"
#include "gramevo/genotype.hpp"
#include "gramevo/grammar.hpp"
#include "gramevo/rng.hpp"
#include "gramevo/task.hpp"
#include "gramevo/dataset.hpp"

namespace testing {

inline std::filesystem::path repo(const std::string& rel) { return std::filesystem::path(GRAMEVO_SOURCE_DIR) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline gramevo::Grammar cnn() { return gramevo::parse_grammar(slurp(repo("grammars/cnn.grm"))); }
inline gramevo::Grammar dense() { return gramevo::parse_grammar(slurp(repo("grammars/dense.grm"))); }

inline gramevo::MacroStructure cnn_macro() {
    return gramevo::parse_macro("[(features,1,30),(classification,1,10),(softmax,1,1),(learning,1,1)]");
}
inline gramevo::MacroStructure dense_macro() {
    return gramevo::parse_macro("[(classification,1,3),(softmax,1,1),(learning,1,1)]");
}

/// Small grammar with recursion, shared nonterminals and multi-valued params.
inline const char* kToyGrammar = R"(<block> ::= <leaf> | <pair> | kind:empty
<pair> ::= kind:pair <leaf> <leaf>
<leaf> ::= kind:leaf <shade> [w,float,2,-1,1] | kind:int [n,int,1,0,9]
<shade> ::= shade:dark | shade:light | shade:grey
<tail> ::= tail:end [t,int,3,1,4]
)";

inline gramevo::Grammar toy() { return gramevo::parse_grammar(kToyGrammar); }
inline gramevo::MacroStructure toy_macro() { return gramevo::parse_macro("[(block,0,4),(tail,1,2)]"); }

/// Fitness from a function of the phenotype; deterministic and reentrant.
class FunctionEvaluator : public gramevo::Evaluator {
public:
    using Fn = std::function<gramevo::EvalResult(const gramevo::Phenotype&, const gramevo::Budget&, std::uint64_t)>;
    explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}
    gramevo::EvalResult evaluate(const gramevo::Phenotype& p, const gramevo::Budget& b, std::uint64_t seed) const override {
        return fn_(p, b, seed);
    }

private:
    Fn fn_;
};

/// Gaussian clusters, one per class, centred on well separated corners.
inline gramevo::Dataset blobs(int per_class, int classes, std::size_t features, std::uint64_t seed, double spread = 0.3) {
    gramevo::Rng rng(seed);
    gramevo::Dataset d;
    d.n_features = features;
    d.n_classes = classes;
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            for (std::size_t f = 0; f < features; ++f) d.features.push_back((f % static_cast<std::size_t>(classes) == static_cast<std::size_t>(c) ? 2.0 : 0.0) + spread * rng.normal());
            d.labels.push_back(c);
        }
    }
    return d;
}

inline std::shared_ptr<const gramevo::Task> blob_task(std::uint64_t seed = 1, int classes = 5) {
    return std::make_shared<const gramevo::Task>(
        gramevo::make_task("blobs", blobs(40, classes, 10, seed), gramevo::SplitFractions{}, seed));
}

}  // namespace testing
