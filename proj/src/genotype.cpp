#include "gramevo/genotype.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gramevo {

std::string Provenance::tag() const {
    switch (origin) {
        case Origin::Random: return "random";
        case Origin::Duplicated: return "duplicated";
        case Origin::Transferred: return "transferred(" + task_id + ")";
    }
    return "random";
}

Provenance Provenance::parse(std::string_view tag) {
    if (tag == "random") return {};
    if (tag == "duplicated") return {Origin::Duplicated, {}};
    constexpr std::string_view prefix = "transferred(";
    if (tag.size() > prefix.size() && tag.substr(0, prefix.size()) == prefix && tag.back() == ')')
        return {Origin::Transferred, std::string(tag.substr(prefix.size(), tag.size() - prefix.size() - 1))};
    throw std::invalid_argument("unknown provenance tag '" + std::string(tag) + "'");
}

const UnitGenotype& Individual::unit(UnitId id) const {
    auto it = unit_pool.find(id);
    if (it == unit_pool.end()) throw std::out_of_range("unit id " + std::to_string(id) + " not in pool");
    return it->second;
}

UnitGenotype& Individual::unit(UnitId id) {
    return const_cast<UnitGenotype&>(static_cast<const Individual&>(*this).unit(id));
}

UnitId Individual::insert(UnitGenotype u) {
    const UnitId id = unit_pool.empty() ? 0 : unit_pool.rbegin()->first + 1;
    unit_pool.emplace(id, std::move(u));
    return id;
}

void Individual::collect_garbage() {
    for (auto it = unit_pool.begin(); it != unit_pool.end();) {
        it = reference_count(it->first) == 0 ? unit_pool.erase(it) : std::next(it);
    }
}

void Individual::compact() {
    std::map<UnitId, UnitId> remap;
    std::map<UnitId, UnitGenotype> pool;
    for (auto& block : modules) {
        for (auto& ref : block.units) {
            auto [it, fresh] = remap.emplace(ref.id, static_cast<UnitId>(remap.size()));
            if (fresh) pool.emplace(it->second, std::move(unit_pool.at(ref.id)));
            ref.id = it->second;
        }
    }
    unit_pool = std::move(pool);
}

std::size_t Individual::reference_count(UnitId id) const {
    std::size_t n = 0;
    for (const auto& block : modules)
        n += static_cast<std::size_t>(std::count_if(block.units.begin(), block.units.end(), [&](const UnitRef& r) { return r.id == id; }));
    return n;
}

std::size_t Individual::total_units() const {
    std::size_t n = 0;
    for (const auto& block : modules) n += block.units.size();
    return n;
}

std::string UnitSpec::type() const {
    return tokens.empty() ? std::string() : tokens.front().first + ":" + tokens.front().second;
}

std::string UnitSpec::line() const {
    std::string out;
    for (const auto& [k, v] : tokens) {
        if (!out.empty()) out += ' ';
        out += k;
        out += ':';
        out += v;
    }
    return out;
}

const std::string* UnitSpec::get(std::string_view key) const {
    for (const auto& [k, v] : tokens)
        if (k == key) return &v;
    return nullptr;
}

std::string Phenotype::serialize() const {
    std::string out;
    for (const auto& u : units) {
        out += u.line();
        out += '\n';
    }
    return out;
}

std::string Phenotype::serialize_tagged() const {
    std::string out;
    for (const auto& u : units) {
        out += '[' + u.provenance.tag() + "] " + u.line() + '\n';
    }
    return out;
}

namespace {

using Tokens = std::vector<std::pair<std::string, std::string>>;

std::string render_values(const ParamSpec& spec, const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        if (spec.kind == ParamKind::Int)
            out += std::to_string(static_cast<long long>(values[i]));
        else
            out += format_number(values[i]);
    }
    return out;
}

std::vector<double> sample_values(const ParamSpec& spec, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(spec.count));
    for (auto& x : v) {
        x = spec.kind == ParamKind::Int
                ? static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(spec.min), static_cast<std::int64_t>(spec.max)))
                : rng.uniform(spec.min, spec.max);
    }
    return v;
}

bool values_fit(const ParamSpec& spec, const std::vector<double>& v) {
    if (v.size() != static_cast<std::size_t>(spec.count)) return false;
    return std::all_of(v.begin(), v.end(), [&](double x) {
        return std::isfinite(x) && x >= spec.min && x <= spec.max && (spec.kind == ParamKind::Float || x == std::floor(x));
    });
}

/// Cursor over an existing unit's gene lists.
struct Cursors {
    std::map<std::string, std::size_t> choice;
    std::size_t param = 0;
};

/// Left-to-right derivation driven by a gene source. The walker records the
/// genes it consumes into `out`, so the result is always self-consistent.
template <class Source>
class Walker {
public:
    Walker(const Grammar& g, Source& src) : g_(g), src_(src) {}

    void run(const std::string& start) {
        out.start_symbol = start;
        expand(start, 0);
    }

    UnitGenotype out;
    Tokens tokens;

private:
    void expand(const std::string& nt, int depth) {
        if (depth >= kMaxDerivationDepth) src_.fail("derivation exceeds depth " + std::to_string(kMaxDerivationDepth) + " at <" + nt + ">");
        const Production* p = g_.find(nt);
        if (!p || p->alternatives.empty()) src_.fail("no production for <" + nt + ">");
        const int alt = src_.choose(nt, p->alternatives.size());
        out.choices[nt].push_back(alt);
        for (const auto& sym : p->alternatives[static_cast<std::size_t>(alt)]) {
            if (const auto* lit = std::get_if<Literal>(&sym)) {
                tokens.emplace_back(std::string(lit->key()), std::string(lit->value()));
            } else if (const auto* spec = std::get_if<ParamSpec>(&sym)) {
                auto values = src_.param(*spec);
                tokens.emplace_back(spec->name, render_values(*spec, values));
                out.params.push_back(std::move(values));
            } else {
                expand(std::get<NonTerminal>(sym).name, depth + 1);
            }
        }
        src_.done(nt);
    }

    const Grammar& g_;
    Source& src_;
};

struct FreshSource {
    Rng& rng;

    int choose(const std::string&, std::size_t n) { return static_cast<int>(rng.index(n)); }
    std::vector<double> param(const ParamSpec& spec) { return sample_values(spec, rng); }
    void done(const std::string&) {}
    [[noreturn]] void fail(const std::string& what) { throw SamplingError(what); }
};

/// Consumes an existing unit exactly; anything missing or malformed is an
/// error. Optionally records where the subtree of one choice gene ends.
struct StrictSource {
    const UnitGenotype& unit;
    Cursors at;
    GeneMap* genes = nullptr;

    const ChoiceGene* target = nullptr;
    int depth = 0;
    int target_depth = -1;
    bool target_hit = false;
    Cursors target_end;

    int choose(const std::string& nt, std::size_t n) {
        ++depth;
        auto it = unit.choices.find(nt);
        std::size_t& c = at.choice[nt];
        if (it == unit.choices.end() || c >= it->second.size())
            fail("missing expansion choice for <" + nt + ">");
        const int v = it->second[c];
        if (v < 0 || static_cast<std::size_t>(v) >= n)
            fail("expansion choice " + std::to_string(v) + " out of range for <" + nt + ">");
        if (genes) genes->choices.push_back(ChoiceGene{nt, c, n});
        if (target && target->nonterminal == nt && target->occurrence == c) {
            target_depth = depth;
            target_hit = true;
        }
        ++c;
        return v;
    }

    std::vector<double> param(const ParamSpec& spec) {
        if (at.param >= unit.params.size()) fail("missing value for parameter '" + spec.name + "'");
        const auto& v = unit.params[at.param];
        if (!values_fit(spec, v)) fail("value of parameter '" + spec.name + "' does not fit its block");
        if (genes) {
            for (std::size_t i = 0; i < v.size(); ++i) genes->params.push_back(ParamGene{at.param, i, spec});
        }
        ++at.param;
        return v;
    }

    void done(const std::string&) {
        if (depth == target_depth) {
            target_end = at;
            target_depth = -1;
        }
        --depth;
    }

    void check_consumed() const {
        for (const auto& [nt, list] : unit.choices) {
            auto it = at.choice.find(nt);
            const std::size_t used = it == at.choice.end() ? 0 : it->second;
            if (used != list.size()) fail("surplus expansion choices for <" + nt + ">");
        }
        if (at.param != unit.params.size()) fail("surplus parameter values");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw DecodeError("unit <" + unit.start_symbol + ">: " + what);
    }
};

struct RepairSource {
    const UnitGenotype& unit;
    Rng& rng;
    Cursors at;

    int choose(const std::string& nt, std::size_t n) {
        auto it = unit.choices.find(nt);
        std::size_t& c = at.choice[nt];
        if (it != unit.choices.end() && c < it->second.size()) {
            const int v = it->second[c++];
            if (v >= 0 && static_cast<std::size_t>(v) < n) return v;
        }
        return static_cast<int>(rng.index(n));
    }

    std::vector<double> param(const ParamSpec& spec) {
        if (at.param < unit.params.size()) {
            const auto& v = unit.params[at.param++];
            if (values_fit(spec, v)) return v;
        }
        return sample_values(spec, rng);
    }

    void done(const std::string&) {}
    [[noreturn]] void fail(const std::string& what) { throw SamplingError(what); }
};

/// Replays `unit` but swaps in a new alternative for one gene; the old
/// subtree's genes are skipped and the new subtree is sampled fresh.
struct SpliceSource {
    const UnitGenotype& unit;
    Rng& rng;
    const ChoiceGene& target;
    int alternative;
    Cursors skip_to;

    Cursors at;
    int depth = 0;
    int fresh_depth = -1;

    int choose(const std::string& nt, std::size_t n) {
        ++depth;
        if (fresh_depth >= 0) return static_cast<int>(rng.index(n));
        std::size_t& c = at.choice[nt];
        if (nt == target.nonterminal && c == target.occurrence) {
            at = skip_to;
            fresh_depth = depth;
            return alternative;
        }
        auto it = unit.choices.find(nt);
        if (it != unit.choices.end() && c < it->second.size()) return it->second[c++];
        return static_cast<int>(rng.index(n));
    }

    std::vector<double> param(const ParamSpec& spec) {
        if (fresh_depth < 0 && at.param < unit.params.size()) return unit.params[at.param++];
        return sample_values(spec, rng);
    }

    void done(const std::string&) {
        if (depth == fresh_depth) fresh_depth = -1;
        --depth;
    }

    [[noreturn]] void fail(const std::string& what) { throw SamplingError(what); }
};

}  // namespace

UnitGenotype sample_unit(const Grammar& g, const std::string& symbol, Rng& rng) {
    FreshSource src{rng};
    Walker<FreshSource> w(g, src);
    w.run(symbol);
    return std::move(w.out);
}

Individual sample_individual(const Grammar& g, const MacroStructure& m, Rng& rng) {
    Individual ind;
    for (const auto& block : m.blocks) {
        ModuleBlock mb{block.symbol, {}};
        const auto n = rng.uniform_int(block.min_units, block.max_units);
        for (std::int64_t i = 0; i < n; ++i) mb.units.push_back(UnitRef{ind.insert(sample_unit(g, block.symbol, rng)), {}});
        ind.modules.push_back(std::move(mb));
    }
    return ind;
}

std::vector<std::pair<std::string, std::string>> decode_unit(const UnitGenotype& u, const Grammar& g) {
    StrictSource src{u};
    Walker<StrictSource> w(g, src);
    try {
        w.run(u.start_symbol);
    } catch (const SamplingError& e) {
        throw DecodeError(std::string("unit <") + u.start_symbol + ">: " + e.what());
    }
    src.check_consumed();
    return std::move(w.tokens);
}

Phenotype decode(const Individual& ind, const Grammar& g) {
    Phenotype p;
    std::map<UnitId, Tokens> cache;
    for (const auto& block : ind.modules) {
        for (const auto& ref : block.units) {
            auto it = cache.find(ref.id);
            if (it == cache.end()) {
                const auto pool_it = ind.unit_pool.find(ref.id);
                if (pool_it == ind.unit_pool.end())
                    throw DecodeError("unit id " + std::to_string(ref.id) + " in <" + block.symbol + "> not in pool");
                try {
                    it = cache.emplace(ref.id, decode_unit(pool_it->second, g)).first;
                } catch (const DecodeError& e) {
                    throw DecodeError("unit " + std::to_string(ref.id) + ": " + e.what());
                }
            }
            p.units.push_back(UnitSpec{block.symbol, it->second, ref.provenance});
        }
    }
    return p;
}

UnitGenotype repair(const UnitGenotype& u, const Grammar& g, Rng& rng) {
    RepairSource src{u, rng};
    Walker<RepairSource> w(g, src);
    w.run(u.start_symbol);
    return std::move(w.out);
}

GeneMap genes(const UnitGenotype& u, const Grammar& g) {
    GeneMap map;
    StrictSource src{u};
    src.genes = &map;
    Walker<StrictSource> w(g, src);
    w.run(u.start_symbol);
    return map;
}

UnitGenotype set_choice(const UnitGenotype& u, const Grammar& g, const ChoiceGene& gene, int alternative, Rng& rng) {
    StrictSource probe{u};
    probe.target = &gene;
    Walker<StrictSource> pw(g, probe);
    pw.run(u.start_symbol);
    if (!probe.target_hit) throw std::invalid_argument("set_choice: <" + gene.nonterminal + "> occurrence not in derivation");

    SpliceSource src{u, rng, gene, alternative, probe.target_end};
    Walker<SpliceSource> w(g, src);
    w.run(u.start_symbol);
    return std::move(w.out);
}

std::vector<std::string> check_individual(const Individual& ind, const Grammar& g, const MacroStructure& m) {
    std::vector<std::string> out;
    if (ind.modules.size() != m.blocks.size()) {
        out.push_back("module count " + std::to_string(ind.modules.size()) + " != macro blocks " + std::to_string(m.blocks.size()));
        return out;
    }
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& mb = ind.modules[b];
        const auto& spec = m.blocks[b];
        if (mb.symbol != spec.symbol) out.push_back("module " + std::to_string(b) + " symbol <" + mb.symbol + "> != <" + spec.symbol + ">");
        const auto n = static_cast<int>(mb.units.size());
        if (n < spec.min_units || n > spec.max_units)
            out.push_back("module <" + spec.symbol + "> holds " + std::to_string(n) + " units, outside [" +
                          std::to_string(spec.min_units) + ", " + std::to_string(spec.max_units) + "]");
        for (const auto& ref : mb.units) {
            auto it = ind.unit_pool.find(ref.id);
            if (it == ind.unit_pool.end()) {
                out.push_back("module <" + spec.symbol + "> references missing unit " + std::to_string(ref.id));
                continue;
            }
            if (it->second.start_symbol != spec.symbol)
                out.push_back("unit " + std::to_string(ref.id) + " starts at <" + it->second.start_symbol + "> inside <" + spec.symbol + ">");
        }
    }
    for (const auto& [id, unit] : ind.unit_pool) {
        if (ind.reference_count(id) == 0) out.push_back("unit " + std::to_string(id) + " is unreferenced");
        try {
            decode_unit(unit, g);
        } catch (const DecodeError& e) {
            out.push_back("unit " + std::to_string(id) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace gramevo
