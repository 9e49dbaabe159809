#include "gramevo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gramevo {

namespace {

struct Ranked {
    std::vector<double> ranks;  // pooled, a first then b
    double tie_term = 0;        // sum of t^3 - t over tie groups
    double u1 = 0;
};

Ranked rank(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u needs two nonempty samples");
    const std::size_t n = a.size() + b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    for (double v : pooled)
        if (std::isnan(v)) throw std::invalid_argument("mann_whitney_u sample contains NaN");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return pooled[x] < pooled[y]; });

    Ranked r;
    r.ranks.assign(n, 0);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = mid;
        const double t = static_cast<double>(j - i + 1);
        r.tie_term += t * t * t - t;
        i = j + 1;
    }
    const double n1 = static_cast<double>(a.size());
    const double r1 = std::accumulate(r.ranks.begin(), r.ranks.begin() + static_cast<long>(a.size()), 0.0);
    r.u1 = r1 - n1 * (n1 + 1) / 2.0;
    return r;
}

double normal_z(const Ranked& r, std::size_t n1s, std::size_t n2s) {
    const double n1 = static_cast<double>(n1s), n2 = static_cast<double>(n2s), n = n1 + n2;
    const double var = n1 * n2 / 12.0 * ((n + 1) - r.tie_term / (n * (n - 1)));
    if (var <= 0) return 0;
    const double dev = std::max(0.0, std::abs(r.u1 - n1 * n2 / 2.0) - 0.5);
    return dev / std::sqrt(var);
}

double exact_p(const Ranked& r, std::size_t n1) {
    // Doubled midranks are integers; count subsets of size n1 by rank sum.
    const std::size_t n = r.ranks.size();
    std::vector<long> twice(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        twice[i] = std::lround(2 * r.ranks[i]);
        total += twice[i];
    }
    std::vector<std::vector<double>> count(n1 + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    count[0][0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = std::min(i + 1, n1); k >= 1; --k) {
            auto& dst = count[k];
            const auto& src = count[k - 1];
            for (long s = total; s >= twice[i]; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - twice[i])];
        }
    }
    const double dn1 = static_cast<double>(n1);
    const double mean_u = dn1 * static_cast<double>(n - n1) / 2.0;
    const double observed = std::abs(r.u1 - mean_u);
    double hit = 0, all = 0;
    for (long s = 0; s <= total; ++s) {
        const double c = count[n1][static_cast<std::size_t>(s)];
        if (c == 0) continue;
        const double u = static_cast<double>(s) / 2.0 - dn1 * (dn1 + 1) / 2.0;
        all += c;
        if (std::abs(u - mean_u) >= observed - 1e-9) hit += c;
    }
    return std::min(1.0, hit / all);
}

}  // namespace

double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b) { return exact_p(rank(a, b), a.size()); }

double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b) {
    const auto r = rank(a, b);
    if (r.tie_term == std::pow(static_cast<double>(r.ranks.size()), 3) - static_cast<double>(r.ranks.size())) return 1.0;
    return std::min(1.0, std::erfc(normal_z(r, a.size(), b.size()) / std::sqrt(2.0)));
}

StatsResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    const auto r = rank(a, b);
    StatsResult s;
    s.n1 = a.size();
    s.n2 = b.size();
    const double prod = static_cast<double>(s.n1 * s.n2);
    const double n = static_cast<double>(s.n1 + s.n2);
    s.u1 = r.u1;
    s.u = std::min(r.u1, prod - r.u1);
    if (r.tie_term == n * n * n - n) {
        s.u = s.u1 = prod / 2;
        return s;
    }
    s.z = normal_z(r, s.n1, s.n2);
    s.r = std::abs(s.z) / std::sqrt(n);
    s.exact = s.n1 <= 8 && s.n2 <= 8;
    s.p = s.exact ? exact_p(r, s.n1) : std::min(1.0, std::erfc(s.z / std::sqrt(2.0)));
    return s;
}

}  // namespace gramevo
