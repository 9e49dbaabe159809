#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "gramevo/grammar.hpp"
#include "gramevo/rng.hpp"

namespace testing {

using namespace gramevo;

// Random grammar over a pool of nonterminals; every reference resolves.
inline Grammar fuzz_grammar(Rng& rng) {
    const std::size_t n = 1 + rng.index(6);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("nt" + std::to_string(i) + (rng.bernoulli(0.5) ? "-x" : ""));
    Grammar g;
    for (std::size_t i = 0; i < n; ++i) {
        Production p{names[i], {}};
        const std::size_t alts = 1 + rng.index(4);
        for (std::size_t a = 0; a < alts; ++a) {
            Alternative alt;
            const std::size_t len = 1 + rng.index(5);
            std::set<std::string> used;
            for (std::size_t k = 0; k < len; ++k) {
                switch (rng.index(3)) {
                    case 0:
                        alt.push_back(Literal{"key" + std::to_string(rng.index(5)) + ":v" + std::to_string(rng.index(100))});
                        break;
                    case 1: {
                        std::string name = "p" + std::to_string(rng.index(20));
                        if (!used.insert(name).second) break;
                        const bool is_int = rng.bernoulli(0.5);
                        double lo = is_int ? static_cast<double>(rng.uniform_int(-50, 50)) : rng.uniform(-10, 10);
                        double hi = is_int ? lo + static_cast<double>(rng.uniform_int(0, 100)) : lo + rng.uniform(0, 5);
                        alt.push_back(ParamSpec{name, is_int ? ParamKind::Int : ParamKind::Float, static_cast<int>(1 + rng.index(3)), lo, hi});
                        break;
                    }
                    default:
                        alt.push_back(NonTerminal{names[rng.index(n)]});
                }
            }
            if (alt.empty()) alt.push_back(Literal{"only:one"});
            p.alternatives.push_back(std::move(alt));
        }
        g.add(std::move(p));
    }
    return g;
}

// Two-sided exact p by enumerating every split of the pooled sample.
inline double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size(), n1 = a.size();
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double below = 0, same = 0;
        for (double v : pooled) {
            below += v < pooled[i];
            same += v == pooled[i];
        }
        rank[i] = below + (same + 1) / 2;
    }
    const double mean = static_cast<double>(n1 * b.size()) / 2;
    double observed = 0;
    for (std::size_t i = 0; i < n1; ++i) observed += rank[i];
    observed -= static_cast<double>(n1 * (n1 + 1)) / 2;
    std::size_t hits = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        double r = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) r += rank[i];
        const double u = r - static_cast<double>(n1 * (n1 + 1)) / 2;
        ++total;
        hits += std::abs(u - mean) >= std::abs(observed - mean) - 1e-9;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

// Scalar reference updates, one parameter at a time.
struct GdOracle {
    double lr, momentum, decay;
    bool nesterov;
    double v = 0;
    double step(double w, double g, int t) {
        const double a = lr / (1 + decay * t);
        v = momentum * v - a * g;
        return nesterov ? w + momentum * v - a * g : w + v;
    }
};

struct AdamOracle {
    double lr, b1, b2, decay;
    double m = 0, v = 0;
    double step(double w, double g, int t) {
        const double a = lr / (1 + decay * t);
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t + 1));
        const double vhat = v / (1 - std::pow(b2, t + 1));
        return w - a * mhat / (std::sqrt(vhat) + 1e-7);
    }
};

struct RmsOracle {
    double lr, rho, decay;
    double s = 0;
    double step(double w, double g, int t) {
        const double a = lr / (1 + decay * t);
        s = rho * s + (1 - rho) * g * g;
        return w - a * g / (std::sqrt(s) + 1e-7);
    }
};

}  // namespace testing
