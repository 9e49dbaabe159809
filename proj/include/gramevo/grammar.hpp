#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gramevo {

enum class ParamKind { Int, Float };

std::string_view to_string(ParamKind kind);

/// Integer or float parameter block, `[name,kind,count,min,max]`.
struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::Int;
    int count = 1;
    double min = 0;
    double max = 0;

    bool operator==(const ParamSpec&) const = default;
};

/// Literal `key:value` token.
struct Literal {
    std::string text;

    std::string_view key() const { return std::string_view(text).substr(0, text.find(':')); }
    std::string_view value() const { return std::string_view(text).substr(text.find(':') + 1); }

    bool operator==(const Literal&) const = default;
};

struct NonTerminal {
    std::string name;

    bool operator==(const NonTerminal&) const = default;
};

using Symbol = std::variant<Literal, ParamSpec, NonTerminal>;
using Alternative = std::vector<Symbol>;

struct Production {
    std::string lhs;
    std::vector<Alternative> alternatives;

    bool operator==(const Production&) const = default;
};

/// Context-free grammar. Productions keep their source order so that
/// serialization is stable; lookup is by left-hand side.
class Grammar {
public:
    Grammar() = default;
    explicit Grammar(std::vector<Production> productions);

    /// Throws std::invalid_argument on a duplicate left-hand side.
    void add(Production p);

    const Production* find(std::string_view lhs) const;
    const Production& at(std::string_view lhs) const;
    bool contains(std::string_view lhs) const { return find(lhs) != nullptr; }

    const std::vector<Production>& productions() const { return productions_; }

    bool operator==(const Grammar& other) const { return productions_ == other.productions_; }

private:
    std::vector<Production> productions_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

struct MacroBlock {
    std::string symbol;
    int min_units = 0;
    int max_units = 0;

    bool operator==(const MacroBlock&) const = default;
};

/// Outer genotype schema: ordered (nonterminal, min, max) blocks.
struct MacroStructure {
    std::vector<MacroBlock> blocks;

    bool operator==(const MacroStructure&) const = default;
};

class GrammarError : public std::runtime_error {
public:
    GrammarError(const std::string& what, int line, int column);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct Diagnostic {
    std::string symbol;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

/// Parses the `.grm` format:
///
///     # comment
///     <lhs> ::= key:value <nt> [name,int,1,2,5] | key:other
///         | another alternative
///         continuation of the previous alternative
///
/// Throws GrammarError with 1-based line/column on malformed input.
Grammar parse_grammar(std::string_view text);

/// One line per production. Throws std::invalid_argument for productions
/// without alternatives or with an empty alternative.
std::string serialize_grammar(const Grammar& g);

/// Parses `[(features,1,30),(classification,1,10),...]`; brackets optional.
MacroStructure parse_macro(std::string_view text);
std::string serialize_macro(const MacroStructure& m);

/// Empty iff every macro symbol and every referenced nonterminal has a
/// production and every parameter block is well formed.
std::vector<Diagnostic> validate(const Grammar& g, const MacroStructure& m);

/// Hex digest of the canonical serialization; used to guard transfer
/// between incompatible search spaces.
std::string fingerprint(const Grammar& g);
std::string fingerprint(const MacroStructure& m);

/// Shortest round-trip decimal in %g style ("0.35", "1e-06", "128").
std::string format_number(double value);

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace gramevo
