#include "gramevo/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gramevo {

TargetSpec TargetSpec::from_phenotype(Phenotype target, const Grammar& g) {
    if (target.units.empty()) throw std::invalid_argument("synthetic target must be non-empty");
    TargetSpec t{std::move(target), {}};
    for (const auto& p : g.productions()) {
        for (const auto& alt : p.alternatives) {
            for (const auto& sym : alt) {
                const auto* ps = std::get_if<ParamSpec>(&sym);
                if (!ps) continue;
                auto [it, fresh] = t.ranges.emplace(ps->name, std::make_pair(ps->min, ps->max));
                if (!fresh) {
                    it->second.first = std::min(it->second.first, ps->min);
                    it->second.second = std::max(it->second.second, ps->max);
                }
            }
        }
    }
    return t;
}

Phenotype parse_phenotype(std::string_view text) {
    Phenotype p;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        UnitSpec u;
        std::size_t at = 0;
        while (at < line.size()) {
            while (at < line.size() && std::isspace(static_cast<unsigned char>(line[at]))) ++at;
            if (at >= line.size() || (u.tokens.empty() && line[at] == '#')) break;
            auto end = at;
            while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
            const auto tok = line.substr(at, end - at);
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos || colon == 0)
                throw std::invalid_argument("phenotype line " + std::to_string(line_no) + ": token '" + std::string(tok) +
                                            "' is not key:value");
            u.tokens.emplace_back(std::string(tok.substr(0, colon)), std::string(tok.substr(colon + 1)));
            at = end;
        }
        if (!u.tokens.empty()) p.units.push_back(std::move(u));
    }
    return p;
}

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        auto end = comma == std::string::npos ? s.size() : comma;
        double v = 0;
        auto res = std::from_chars(s.data() + start, s.data() + end, v);
        if (res.ec != std::errc() || res.ptr != s.data() + end) return {};
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

double unit_closeness(const UnitSpec& candidate, const UnitSpec& target, const TargetSpec& t) {
    if (target.tokens.size() <= 1) return 1.0;
    double total = 0;
    for (std::size_t i = 1; i < target.tokens.size(); ++i) {
        const auto& [key, want] = target.tokens[i];
        const std::string* have = candidate.get(key);
        if (!have) continue;
        auto range = t.ranges.find(key);
        if (range == t.ranges.end()) {
            total += *have == want ? 1.0 : 0.0;
            continue;
        }
        const auto a = parse_list(*have);
        const auto b = parse_list(want);
        if (a.empty() || a.size() != b.size()) continue;
        const double width = range->second.second - range->second.first;
        double c = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            c += width > 0 ? 1.0 - std::min(1.0, std::abs(a[k] - b[k]) / width) : (a[k] == b[k] ? 1.0 : 0.0);
        }
        total += c / static_cast<double>(a.size());
    }
    return total / static_cast<double>(target.tokens.size() - 1);
}

double evaluate_synthetic(const Phenotype& p, const TargetSpec& t) {
    const auto& a = p.units;
    const auto& b = t.target.units;
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0) return 0.0;

    std::vector<std::string> ta(n), tb(m);
    for (std::size_t i = 0; i < n; ++i) ta[i] = a[i].type();
    for (std::size_t j = 0; j < m; ++j) tb[j] = b[j].type();

    // dp over (matched count, closeness sum), compared lexicographically.
    struct Cell {
        int len = 0;
        double close = 0;
        bool operator<(const Cell& o) const { return len != o.len ? len < o.len : close < o.close; }
    };
    std::vector<Cell> dp((n + 1) * (m + 1));
    auto at = [&](std::size_t i, std::size_t j) -> Cell& { return dp[i * (m + 1) + j]; };
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            Cell best = std::max(at(i - 1, j), at(i, j - 1));
            if (ta[i - 1] == tb[j - 1]) {
                Cell diag = at(i - 1, j - 1);
                diag.len += 1;
                diag.close += unit_closeness(a[i - 1], b[j - 1], t);
                best = std::max(best, diag);
            }
            at(i, j) = best;
        }
    }
    const Cell& final = at(n, m);
    if (final.len == 0) return 0.0;
    const double structure = static_cast<double>(final.len) / static_cast<double>(std::max(n, m));
    return 0.8 * structure + 0.2 * (final.close / final.len);
}

EvalResult SyntheticEvaluator::evaluate(const Phenotype& p, const Budget&, std::uint64_t) const {
    EvalResult r;
    r.fitness = evaluate_synthetic(p, target_);
    r.meta.stopped_by = StopReason::EarlyStop;
    return r;
}

}  // namespace gramevo
