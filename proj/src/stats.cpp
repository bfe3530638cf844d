#include "ecmkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ecmkit::stats {

Ranking rank_with_ties(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });

    Ranking out;
    out.ranks.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) out.ranks[order[k]] = midrank;
        const auto t = static_cast<double>(j - i);
        out.tie_term += t * t * t - t;
        i = j;
    }
    return out;
}

double normal_sf(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

MannWhitneyResult mann_whitney_u(const Ranking& pooled, std::span<const char> in_first) {
    MannWhitneyResult out;
    double rank_sum = 0.0;
    double n1 = 0.0;
    for (std::size_t i = 0; i < in_first.size(); ++i) {
        if (in_first[i]) {
            rank_sum += pooled.ranks[i];
            n1 += 1.0;
        }
    }
    const double n = static_cast<double>(in_first.size());
    const double n2 = n - n1;
    out.u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    if (n1 == 0.0 || n2 == 0.0) return out;

    const double mean = n1 * n2 / 2.0;
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - pooled.tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) return out;

    const double deviation = std::max(std::abs(out.u - mean) - 0.5, 0.0);
    out.z = deviation / std::sqrt(variance);
    out.p_value = std::min(1.0, 2.0 * normal_sf(out.z));
    return out;
}

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::vector<char> in_first(pooled.size(), 0);
    std::fill(in_first.begin(), in_first.begin() + static_cast<std::ptrdiff_t>(x.size()), 1);
    return mann_whitney_u(rank_with_ties(pooled), in_first);
}

std::vector<bool> benjamini_yekutieli(std::span<const double> p_values, double alpha) {
    const std::size_t m = p_values.size();
    std::vector<bool> selected(m, false);
    if (m == 0) return selected;

    double harmonic = 0.0;
    for (std::size_t i = 1; i <= m; ++i) harmonic += 1.0 / static_cast<double>(i);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p_values[a] < p_values[b]; });

    std::size_t last = 0;  // number of rejections
    for (std::size_t k = 1; k <= m; ++k) {
        const double threshold = static_cast<double>(k) * alpha / (static_cast<double>(m) * harmonic);
        if (p_values[order[k - 1]] <= threshold) last = k;
    }
    for (std::size_t k = 0; k < last; ++k) selected[order[k]] = true;
    return selected;
}

}  // namespace ecmkit::stats
