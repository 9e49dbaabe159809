#include "gramevo/grammar.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace gramevo {

std::string_view to_string(ParamKind kind) { return kind == ParamKind::Int ? "int" : "float"; }

Grammar::Grammar(std::vector<Production> productions) {
    for (auto& p : productions) add(std::move(p));
}

void Grammar::add(Production p) {
    if (index_.count(p.lhs)) throw std::invalid_argument("duplicate production <" + p.lhs + ">");
    index_.emplace(p.lhs, productions_.size());
    productions_.push_back(std::move(p));
}

const Production* Grammar::find(std::string_view lhs) const {
    auto it = index_.find(lhs);
    return it == index_.end() ? nullptr : &productions_[it->second];
}

const Production& Grammar::at(std::string_view lhs) const {
    if (const auto* p = find(lhs)) return *p;
    throw std::out_of_range("no production <" + std::string(lhs) + ">");
}

GrammarError::GrammarError(const std::string& what, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

std::string format_number(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (is_space(c) || c == '<' || c == '>' || c == '[' || c == ']' || c == '|' || c == ',' || c == ':') return false;
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

class LineParser {
public:
    LineParser(std::string_view text, int line, Production& target)
        : text_(text), line_(line), target_(target) {}

    /// Parses `body`, starting at column offset `pos`. When `continue_last`
    /// is set, symbols before the first `|` extend the current alternative.
    void parse_body(std::size_t pos, bool continue_last) {
        if (!continue_last) target_.alternatives.emplace_back();
        bool empty_alt = !continue_last;
        std::size_t alt_start = pos;
        while (true) {
            while (pos < text_.size() && is_space(text_[pos])) ++pos;
            if (pos >= text_.size()) break;
            const char c = text_[pos];
            if (c == '|') {
                if (empty_alt) fail("empty alternative", alt_start);
                target_.alternatives.emplace_back();
                empty_alt = true;
                alt_start = pos;
                ++pos;
                continue;
            }
            empty_alt = false;
            if (c == '<') {
                auto close = text_.find('>', pos);
                if (close == std::string_view::npos) fail("unterminated nonterminal", pos);
                auto name = text_.substr(pos + 1, close - pos - 1);
                if (!valid_name(name)) fail("invalid nonterminal name", pos);
                target_.alternatives.back().push_back(NonTerminal{std::string(name)});
                pos = close + 1;
            } else if (c == '[') {
                auto close = text_.find(']', pos);
                if (close == std::string_view::npos) fail("unterminated parameter block", pos);
                target_.alternatives.back().push_back(parse_param(pos, close));
                pos = close + 1;
            } else {
                std::size_t end = pos;
                while (end < text_.size() && !is_space(text_[end]) && text_[end] != '|') ++end;
                auto tok = text_.substr(pos, end - pos);
                auto colon = tok.find(':');
                if (colon == std::string_view::npos || tok.find(':', colon + 1) != std::string_view::npos ||
                    colon == 0 || colon + 1 == tok.size())
                    fail("literal must have the form key:value", pos);
                if (tok.find_first_of("<>[]") != std::string_view::npos) fail("unexpected character in literal", pos);
                target_.alternatives.back().push_back(Literal{std::string(tok)});
                pos = end;
            }
        }
        if (empty_alt) fail("empty alternative", alt_start);
    }

    [[noreturn]] void fail(const std::string& what, std::size_t pos) const {
        throw GrammarError(what, line_, static_cast<int>(pos) + 1);
    }

private:
    ParamSpec parse_param(std::size_t open, std::size_t close) {
        std::vector<std::string_view> fields;
        auto inner = text_.substr(open + 1, close - open - 1);
        std::size_t start = 0;
        while (true) {
            auto comma = inner.find(',', start);
            fields.push_back(trim(inner.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 5) fail("parameter block needs [name,kind,count,min,max]", open);
        ParamSpec spec;
        if (!valid_name(fields[0])) fail("invalid parameter name", open);
        spec.name = std::string(fields[0]);
        if (fields[1] == "int") {
            spec.kind = ParamKind::Int;
        } else if (fields[1] == "float") {
            spec.kind = ParamKind::Float;
        } else {
            fail("unknown parameter kind '" + std::string(fields[1]) + "'", open);
        }
        double count = 0;
        if (!parse_double(fields[2], count) || count < 1 || count != std::floor(count) || count > 1e6)
            fail("parameter count must be a positive integer", open);
        spec.count = static_cast<int>(count);
        if (!parse_double(fields[3], spec.min) || !parse_double(fields[4], spec.max))
            fail("parameter bounds must be numbers", open);
        if (spec.kind == ParamKind::Int && (spec.min != std::floor(spec.min) || spec.max != std::floor(spec.max)))
            fail("int parameter bounds must be integers", open);
        if (spec.min > spec.max) fail("parameter '" + spec.name + "' has min > max", open);
        return spec;
    }

    std::string_view text_;
    int line_;
    Production& target_;
};

void write_symbol(std::ostream& os, const Symbol& sym) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Literal>) {
                os << s.text;
            } else if constexpr (std::is_same_v<T, NonTerminal>) {
                os << '<' << s.name << '>';
            } else {
                os << '[' << s.name << ',' << to_string(s.kind) << ',' << s.count << ',' << format_number(s.min) << ','
                   << format_number(s.max) << ']';
            }
        },
        sym);
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

Grammar parse_grammar(std::string_view text) {
    Grammar g;
    std::vector<Production> prods;
    std::vector<int> prod_lines;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::size_t first = 0;
        while (first < line.size() && is_space(line[first])) ++first;
        if (first == line.size() || line[first] == '#') continue;

        if (line[first] == '<' && line.find("::=") != std::string_view::npos) {
            auto close = line.find('>', first);
            auto assign = line.find("::=", first);
            if (close == std::string_view::npos || close > assign) throw GrammarError("malformed left-hand side", line_no, static_cast<int>(first) + 1);
            auto lhs = line.substr(first + 1, close - first - 1);
            if (!valid_name(lhs)) throw GrammarError("invalid nonterminal name", line_no, static_cast<int>(first) + 1);
            if (!trim(line.substr(close + 1, assign - close - 1)).empty())
                throw GrammarError("expected '::='", line_no, static_cast<int>(close) + 2);
            if (!seen.insert(std::string(lhs)).second)
                throw GrammarError("duplicate production <" + std::string(lhs) + ">", line_no, static_cast<int>(first) + 1);
            prods.push_back(Production{std::string(lhs), {}});
            prod_lines.push_back(line_no);
            LineParser(line, line_no, prods.back()).parse_body(assign + 3, false);
        } else if (prods.empty()) {
            throw GrammarError("expected '<symbol> ::='", line_no, static_cast<int>(first) + 1);
        } else if (line[first] == '|') {
            LineParser(line, line_no, prods.back()).parse_body(first, true);
        } else if (first > 0) {
            LineParser(line, line_no, prods.back()).parse_body(first, true);
        } else {
            throw GrammarError("expected '<symbol> ::=', '|' or an indented continuation", line_no, 1);
        }
    }
    for (std::size_t i = 0; i < prods.size(); ++i) {
        for (const auto& alt : prods[i].alternatives) {
            std::set<std::string_view> names;
            for (const auto& sym : alt) {
                const auto* ps = std::get_if<ParamSpec>(&sym);
                if (ps && !names.insert(ps->name).second)
                    throw GrammarError("duplicate parameter '" + ps->name + "' in an alternative of <" + prods[i].lhs + ">",
                                       prod_lines[i], 1);
            }
        }
    }
    return Grammar(std::move(prods));
}

std::string serialize_grammar(const Grammar& g) {
    std::ostringstream os;
    for (const auto& p : g.productions()) {
        if (p.alternatives.empty()) throw std::invalid_argument("production <" + p.lhs + "> has no alternatives");
        os << '<' << p.lhs << "> ::=";
        for (std::size_t a = 0; a < p.alternatives.size(); ++a) {
            const auto& alt = p.alternatives[a];
            if (alt.empty()) throw std::invalid_argument("production <" + p.lhs + "> has an empty alternative");
            if (a > 0) os << " |";
            for (const auto& sym : alt) {
                os << ' ';
                write_symbol(os, sym);
            }
        }
        os << '\n';
    }
    return os.str();
}

MacroStructure parse_macro(std::string_view text) {
    MacroStructure m;
    std::size_t pos = 0;
    auto fail = [&](const std::string& what) { throw GrammarError(what, 1, static_cast<int>(pos) + 1); };
    while (true) {
        auto open = text.find('(', pos);
        if (open == std::string_view::npos) break;
        auto close = text.find(')', open);
        if (close == std::string_view::npos) {
            pos = open;
            fail("unterminated macro tuple");
        }
        auto inner = text.substr(open + 1, close - open - 1);
        std::vector<std::string_view> f;
        std::size_t s = 0;
        while (true) {
            auto c = inner.find(',', s);
            f.push_back(trim(inner.substr(s, c - s)));
            if (c == std::string_view::npos) break;
            s = c + 1;
        }
        pos = open;
        if (f.size() != 3) fail("macro tuple needs (symbol,min,max)");
        auto sym = f[0];
        if (sym.size() >= 2 && sym.front() == '<' && sym.back() == '>') sym = sym.substr(1, sym.size() - 2);
        if (!valid_name(sym)) fail("invalid macro symbol");
        double lo = 0, hi = 0;
        if (!parse_double(f[1], lo) || !parse_double(f[2], hi) || lo != std::floor(lo) || hi != std::floor(hi) || lo < 0)
            fail("macro bounds must be non-negative integers");
        if (lo > hi) fail("macro block has min > max");
        m.blocks.push_back(MacroBlock{std::string(sym), static_cast<int>(lo), static_cast<int>(hi)});
        pos = close + 1;
    }
    if (m.blocks.empty()) throw GrammarError("empty macro-structure", 1, 1);
    return m;
}

std::string serialize_macro(const MacroStructure& m) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < m.blocks.size(); ++i) {
        if (i) os << ", ";
        os << '(' << m.blocks[i].symbol << ", " << m.blocks[i].min_units << ", " << m.blocks[i].max_units << ')';
    }
    os << ']';
    return os.str();
}

std::vector<Diagnostic> validate(const Grammar& g, const MacroStructure& m) {
    std::vector<Diagnostic> out;
    for (const auto& b : m.blocks) {
        if (!g.contains(b.symbol)) out.push_back({b.symbol, "undefined start symbol"});
        if (b.min_units < 0 || b.min_units > b.max_units)
            out.push_back({b.symbol, "macro block bounds invalid (" + std::to_string(b.min_units) + ", " +
                                         std::to_string(b.max_units) + ")"});
    }
    for (const auto& p : g.productions()) {
        if (p.alternatives.empty()) out.push_back({p.lhs, "production has no alternatives"});
        for (const auto& alt : p.alternatives) {
            if (alt.empty()) out.push_back({p.lhs, "empty alternative"});
            for (const auto& sym : alt) {
                if (const auto* nt = std::get_if<NonTerminal>(&sym)) {
                    if (!g.contains(nt->name))
                        out.push_back({nt->name, "undefined nonterminal referenced from <" + p.lhs + ">"});
                } else if (const auto* ps = std::get_if<ParamSpec>(&sym)) {
                    const bool bad_bounds = !std::isfinite(ps->min) || !std::isfinite(ps->max) || ps->min > ps->max;
                    const bool bad_int = ps->kind == ParamKind::Int &&
                                         (ps->min != std::floor(ps->min) || ps->max != std::floor(ps->max));
                    if (bad_bounds || bad_int || ps->count < 1 || ps->name.empty())
                        out.push_back({p.lhs, "invalid parameter block '" + ps->name + "'"});
                }
            }
        }
    }
    return out;
}

std::string fingerprint(const Grammar& g) { return hex64(fnv1a(serialize_grammar(g))); }

std::string fingerprint(const MacroStructure& m) { return hex64(fnv1a(serialize_macro(m))); }

}  // namespace gramevo
