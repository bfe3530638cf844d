#include "ecmkit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ecmkit/error.hpp"
#include "ecmkit/parallel.hpp"

namespace ecmkit {

FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::size_t>& keep) {
    FeatureMatrix out;
    out.X = Matrix(m.rows(), keep.size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < keep.size(); ++c) out.X(r, c) = m.X(r, keep[c]);
    }
    for (auto c : keep) out.columns.push_back(m.columns.at(c));
    out.labels = m.labels;
    out.ids = m.ids;
    return out;
}

void FilterConfig::validate() const {
    if (min_neg_imag_points == 0 || !(range_ratio > 0.0) || !(real_increase_tol > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "filter thresholds must be positive");
    }
}

const char* to_string(RejectReason reason) noexcept {
    switch (reason) {
        case RejectReason::TooFewNegImag: return "TooFewNegImag";
        case RejectReason::SmallNegImagRange: return "SmallNegImagRange";
        case RejectReason::NegativeReal: return "NegativeReal";
        case RejectReason::RealIncrease: return "RealIncrease";
    }
    return "?";
}

Spectrum drop_positive_imag(const Spectrum& s) {
    Spectrum out;
    out.label = s.label;
    out.id = s.id;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s.z[i].imag() > 0.0)) {
            out.freq.push_back(s.freq[i]);
            out.z.push_back(s.z[i]);
        }
    }
    return out;
}

namespace {

bool too_few_negative_imag(const Spectrum& s, const FilterConfig& config) {
    const auto count = std::count_if(s.z.begin(), s.z.end(), [](Complex z) { return z.imag() < 0.0; });
    return static_cast<std::size_t>(count) < config.min_neg_imag_points;
}

bool small_negative_imag_range(const Spectrum& s, const FilterConfig& config) {
    if (s.empty()) return false;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (auto z : s.z) {
        lo = std::min(lo, -z.imag());
        hi = std::max(hi, -z.imag());
    }
    return lo < 0.0 && hi < config.range_ratio * std::abs(lo);
}

bool negative_real(const Spectrum& kept) {
    return std::any_of(kept.z.begin(), kept.z.end(), [](Complex z) { return z.real() < 0.0; });
}

bool real_increase(const Spectrum& kept, const FilterConfig& config) {
    if (kept.size() < 2) return false;
    double max_re = 0.0;
    for (auto z : kept.z) max_re = std::max(max_re, z.real());
    if (!(max_re > 0.0)) return false;
    if (config.real_increase_mode == FilterConfig::RealIncreaseMode::Consecutive) {
        for (std::size_t i = 1; i < kept.size(); ++i) {
            if ((kept.z[i].real() - kept.z[i - 1].real()) / max_re > config.real_increase_tol) return true;
        }
        return false;
    }
    // All pairs i > j: the largest rise is against the running minimum.
    double running_min = kept.z[0].real() / max_re;
    for (std::size_t i = 1; i < kept.size(); ++i) {
        const double value = kept.z[i].real() / max_re;
        if (value - running_min > config.real_increase_tol) return true;
        running_min = std::min(running_min, value);
    }
    return false;
}

}  // namespace

bool violates(const Spectrum& s, const FilterConfig& config, RejectReason criterion) {
    switch (criterion) {
        case RejectReason::TooFewNegImag: return too_few_negative_imag(s, config);
        case RejectReason::SmallNegImagRange: return small_negative_imag_range(s, config);
        case RejectReason::NegativeReal: return negative_real(drop_positive_imag(s));
        case RejectReason::RealIncrease: return real_increase(drop_positive_imag(s), config);
    }
    return false;
}

std::optional<RejectReason> filter_spectrum(const Spectrum& s, const FilterConfig& config) {
    if (too_few_negative_imag(s, config)) return RejectReason::TooFewNegImag;
    if (small_negative_imag_range(s, config)) return RejectReason::SmallNegImagRange;
    const Spectrum kept = drop_positive_imag(s);
    if (negative_real(kept)) return RejectReason::NegativeReal;
    if (real_increase(kept, config)) return RejectReason::RealIncrease;
    return std::nullopt;
}

std::size_t FilterReport::rejected_count() const {
    return static_cast<std::size_t>(
        std::count_if(decisions.begin(), decisions.end(), [](const auto& d) { return d.reason.has_value(); }));
}

std::map<RejectReason, std::size_t> FilterReport::reason_counts() const {
    std::map<RejectReason, std::size_t> counts;
    for (const auto& d : decisions) {
        if (d.reason) ++counts[*d.reason];
    }
    return counts;
}

FilterReport filter_dataset(const Dataset& d, const FilterConfig& config) {
    config.validate();
    FilterReport report;
    report.kept.provenance = d.provenance + " | filtered";
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& s = d.spectra[i];
        auto reason = filter_spectrum(s, config);
        report.decisions.push_back({s.id, s.label, reason});
        if (reason) {
            ++report.removed_per_class[s.label];
        } else {
            ++report.kept_per_class[s.label];
            report.kept.spectra.push_back(drop_positive_imag(s));
            if (i < d.true_params.size()) report.kept.true_params.push_back(d.true_params[i]);
        }
    }
    return report;
}

std::string filter_report_csv(const FilterReport& report) {
    std::string out = "id,class,decision,reason\n";
    for (const auto& d : report.decisions) {
        out += fmt::format("{},{},{},{}\n", d.id, d.label, d.reason ? "reject" : "keep",
                           d.reason ? to_string(*d.reason) : "");
    }
    return out;
}

std::vector<double> InterpolationGrid::frequencies() const {
    return log_grid(points, fmin, fmax);
}

Interpolated interpolate(const Spectrum& s, std::span<const double> grid) {
    if (s.size() < 2) {
        throw Error(ErrorCode::TooFewPoints, fmt::format("spectrum '{}' has {} points, need 2", s.id, s.size()));
    }
    if (s.freq.size() != s.z.size()) throw Error(ErrorCode::LengthMismatch, s.id);

    Interpolated out;
    out.spectrum.id = s.id;
    out.spectrum.label = s.label;
    out.spectrum.freq.assign(grid.begin(), grid.end());
    out.spectrum.z.resize(grid.size());

    std::vector<double> log_f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) log_f[i] = std::log10(s.freq[i]);

    constexpr double kCoverTol = 1e-9;
    if (!grid.empty() && (grid.front() < s.freq.front() * (1.0 - kCoverTol) ||
                          grid.back() > s.freq.back() * (1.0 + kCoverTol))) {
        out.extrapolated = true;
    }

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = std::log10(grid[k]);
        if (x <= log_f.front()) {
            out.spectrum.z[k] = s.z.front();
            continue;
        }
        if (x >= log_f.back()) {
            out.spectrum.z[k] = s.z.back();
            continue;
        }
        const auto upper = std::upper_bound(log_f.begin(), log_f.end(), x);
        const auto j = static_cast<std::size_t>(upper - log_f.begin());
        const double w = (x - log_f[j - 1]) / (log_f[j] - log_f[j - 1]);
        out.spectrum.z[k] = s.z[j - 1] + w * (s.z[j] - s.z[j - 1]);
    }
    return out;
}

Interpolated interpolate(const Spectrum& s, std::size_t points, double fmin, double fmax) {
    const auto grid = log_grid(points, fmin, fmax);
    return interpolate(s, grid);
}

InterpolatedSet interpolate_dataset(const Dataset& d, const InterpolationGrid& grid, int jobs) {
    InterpolatedSet out;
    out.grid = grid.frequencies();
    std::vector<Interpolated> results(d.size());
    parallel_for(d.size(), jobs, [&](std::size_t i) { results[i] = interpolate(d.spectra[i], out.grid); });
    out.spectra.reserve(results.size());
    for (auto& r : results) {
        out.extrapolated += r.extrapolated ? 1 : 0;
        out.spectra.push_back(std::move(r.spectrum));
    }
    return out;
}

FeatureMatrix raw_feature_matrix(std::span<const Spectrum> spectra) {
    FeatureMatrix m;
    if (spectra.empty()) return m;
    const auto& grid = spectra.front().freq;
    const std::size_t p = grid.size();
    m.freq_grid = grid;
    m.X = Matrix(spectra.size(), 2 * p);
    for (std::size_t j = 0; j < p; ++j) m.columns.push_back(fmt::format("zreal_{}", j));
    for (std::size_t j = 0; j < p; ++j) m.columns.push_back(fmt::format("zimag_{}", j));
    for (std::size_t r = 0; r < spectra.size(); ++r) {
        const auto& s = spectra[r];
        if (s.freq != grid) {
            throw Error(ErrorCode::ShapeMismatch, fmt::format("spectrum '{}' is not on the common grid", s.id));
        }
        for (std::size_t j = 0; j < p; ++j) {
            m.X(r, j) = s.z[j].real();
            m.X(r, p + j) = s.z[j].imag();
        }
        m.labels.push_back(s.label);
        m.ids.push_back(s.id);
    }
    return m;
}

FeatureMatrix normalize_max_real(FeatureMatrix m) {
    const std::size_t p = m.cols() / 2;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.X.row(r);
        const double max_re = *std::max_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(p));
        if (!(max_re > 0.0)) {
            throw Error(ErrorCode::NonPositiveMaxReal,
                        fmt::format("row {} ('{}') has max real part {}", r, r < m.ids.size() ? m.ids[r] : "",
                                    max_re));
        }
        for (auto& v : row) v /= max_re;
    }
    return m;
}

Spectrum normalize_max_real(Spectrum s) {
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& z : s.z) max_re = std::max(max_re, z.real());
    if (!(max_re > 0.0)) {
        throw Error(ErrorCode::NonPositiveMaxReal, fmt::format("spectrum '{}' has max real part {}", s.id, max_re));
    }
    for (auto& z : s.z) z /= max_re;
    return s;
}

MinMaxNormalized normalize_minmax(const Spectrum& s) {
    if (s.size() < 2) throw Error(ErrorCode::TooFewPoints, "min-max normalization needs at least 2 points");
    MinMaxNormalized out;
    auto scale = [](std::vector<double> values, bool& degenerate) {
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double min = *lo;
        const double range = *hi - *lo;
        degenerate = !(range > 0.0);
        for (auto& v : values) v = degenerate ? 0.0 : (v - min) / range;
        return values;
    };
    std::vector<double> re(s.size()), im(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        re[i] = s.z[i].real();
        im[i] = s.z[i].imag();
    }
    out.re = scale(std::move(re), out.degenerate_re);
    out.im = scale(std::move(im), out.degenerate_im);
    return out;
}

}  // namespace ecmkit
