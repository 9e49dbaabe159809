#pragma once

#include <cstddef>
#include <span>

namespace gramevo {

struct StatsResult {
    double u = 0;   // min(U1, U2)
    double u1 = 0;  // statistic of the first sample
    double p = 1;   // two-sided
    double z = 0;   // tie-corrected, continuity-corrected
    double r = 0;   // |z| / sqrt(n1 + n2)
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    bool exact = false;
};

/// Mann-Whitney U with midranks. p is exact when both samples have at
/// most 8 values, else from the normal approximation. When every value is
/// equal, p = 1, U = n1 * n2 / 2 and r = 0.
StatsResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Two-sided p from the permutation distribution of U1 over all
/// C(n1 + n2, n1) assignments of the pooled midranks.
double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b);

/// Two-sided p from the tie-corrected normal approximation with
/// continuity correction.
double mann_whitney_normal_p(std::span<const double> a, std::span<const double> b);

}  // namespace gramevo
