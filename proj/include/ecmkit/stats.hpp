#pragma once

#include <span>
#include <vector>

namespace ecmkit::stats {

/// Midranks (1-based, ties averaged) and the tie term sum(t^3 - t).
struct Ranking {
    std::vector<double> ranks;
    double tie_term = 0.0;
};

Ranking rank_with_ties(std::span<const double> values);

struct MannWhitneyResult {
    double u = 0.0;        // U statistic of the first sample
    double z = 0.0;        // continuity-corrected normal score
    double p_value = 1.0;  // two-sided
};

/// Two-sided Mann-Whitney U test, normal approximation with tie and
/// continuity correction. Returns p = 1 when either sample is empty or all
/// values are tied.
MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

/// Same test from precomputed midranks of the pooled sample; `in_first`
/// marks membership of the first sample.
MannWhitneyResult mann_whitney_u(const Ranking& pooled, std::span<const char> in_first);

/// Upper tail of the standard normal distribution.
double normal_sf(double z);

/// Benjamini-Yekutieli step-up procedure at FDR level alpha. Returns the
/// rejection (selection) mask; valid under arbitrary dependence.
std::vector<bool> benjamini_yekutieli(std::span<const double> p_values, double alpha);

}  // namespace ecmkit::stats
