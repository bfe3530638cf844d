#include "ecmkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ecmkit/error.hpp"
#include "ecmkit/parallel.hpp"
#include "ecmkit/stats.hpp"

namespace ecmkit::features {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_non_empty(std::span<const double> series) {
    if (series.empty()) throw Error(ErrorCode::Empty, "series is empty");
}

double aggregate(std::span<const double> chunk, Aggregate agg) {
    switch (agg) {
        case Aggregate::Max: return maximum(chunk);
        case Aggregate::Min: return minimum(chunk);
        case Aggregate::Mean: return mean(chunk);
        case Aggregate::Var: return variance(chunk);
    }
    return kNaN;
}

const char* channel_name(Channel c) {
    return c == Channel::ZReal ? "zreal" : "zimag";
}

const char* agg_name(Aggregate a) {
    switch (a) {
        case Aggregate::Max: return "max";
        case Aggregate::Min: return "min";
        case Aggregate::Mean: return "mean";
        case Aggregate::Var: return "var";
    }
    return "?";
}

const char* attr_name(TrendAttr a) {
    switch (a) {
        case TrendAttr::RValue: return "rvalue";
        case TrendAttr::Slope: return "slope";
        case TrendAttr::Intercept: return "intercept";
    }
    return "?";
}

double pick(const LinearFit& fit, TrendAttr attr) {
    switch (attr) {
        case TrendAttr::RValue: return fit.rvalue;
        case TrendAttr::Slope: return fit.slope;
        case TrendAttr::Intercept: return fit.intercept;
    }
    return kNaN;
}

}  // namespace

double minimum(std::span<const double> series) {
    require_non_empty(series);
    return *std::min_element(series.begin(), series.end());
}

double maximum(std::span<const double> series) {
    require_non_empty(series);
    return *std::max_element(series.begin(), series.end());
}

double mean(std::span<const double> series) {
    require_non_empty(series);
    return std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
}

double median(std::span<const double> series) {
    require_non_empty(series);
    std::vector<double> v(series.begin(), series.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double variance(std::span<const double> series) {
    const double m = mean(series);
    double acc = 0.0;
    for (double x : series) acc += (x - m) * (x - m);
    return acc / static_cast<double>(series.size());
}

double skewness(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 3) return kNaN;
    const double m = mean(series);
    double m2 = 0.0, m3 = 0.0;
    for (double x : series) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (!(m2 > 0.0)) return 0.0;
    const double g1 = m3 / std::pow(m2, 1.5);
    const auto nd = static_cast<double>(n);
    return g1 * std::sqrt(nd * (nd - 1.0)) / (nd - 2.0);
}

double abs_energy(std::span<const double> series) {
    double acc = 0.0;
    for (double x : series) acc += x * x;
    return acc;
}

double mean_abs_change(std::span<const double> series) {
    if (series.size() < 2) return kNaN;
    double acc = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) acc += std::abs(series[i] - series[i - 1]);
    return acc / static_cast<double>(series.size() - 1);
}

double mean_change(std::span<const double> series) {
    if (series.size() < 2) return kNaN;
    return (series.back() - series.front()) / static_cast<double>(series.size() - 1);
}

std::size_t count_above_mean(std::span<const double> series) {
    const double m = mean(series);
    return static_cast<std::size_t>(std::count_if(series.begin(), series.end(), [m](double x) { return x > m; }));
}

std::size_t count_below_mean(std::span<const double> series) {
    const double m = mean(series);
    return static_cast<std::size_t>(std::count_if(series.begin(), series.end(), [m](double x) { return x < m; }));
}

LinearFit linear_trend(std::span<const double> y) {
    LinearFit fit;
    const std::size_t n = y.size();
    if (n < 2) return {kNaN, kNaN, kNaN};
    const double x_mean = 0.5 * static_cast<double>(n - 1);
    const double y_mean = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - x_mean;
        const double dy = y[i] - y_mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    fit.slope = sxy / sxx;
    fit.intercept = y_mean - fit.slope * x_mean;
    fit.rvalue = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : kNaN;
    return fit;
}

LinearFit agg_linear_trend(std::span<const double> series, std::size_t chunk_len, Aggregate agg) {
    if (chunk_len == 0 || series.size() < chunk_len) {
        throw Error(ErrorCode::TooShort,
                    fmt::format("series of length {} has no chunk of length {}", series.size(), chunk_len));
    }
    const std::size_t chunks = series.size() / chunk_len;
    std::vector<double> aggregated(chunks);
    for (std::size_t c = 0; c < chunks; ++c) aggregated[c] = aggregate(series.subspan(c * chunk_len, chunk_len), agg);
    return linear_trend(aggregated);
}

double agg_linear_trend_rvalue(std::span<const double> series, std::size_t chunk_len, Aggregate agg) {
    return agg_linear_trend(series, chunk_len, agg).rvalue;
}

std::size_t number_peaks(std::span<const double> series, std::size_t support) {
    if (support == 0 || series.size() < 2 * support + 1) {
        throw Error(ErrorCode::TooShort,
                    fmt::format("number_peaks(n={}) needs {} values, got {}", support, 2 * support + 1, series.size()));
    }
    std::size_t count = 0;
    for (std::size_t i = support; i + support < series.size(); ++i) {
        bool peak = true;
        for (std::size_t k = 1; k <= support && peak; ++k) {
            peak = series[i] > series[i - k] && series[i] > series[i + k];
        }
        count += peak ? 1 : 0;
    }
    return count;
}

FeatureValue energy_ratio_by_chunks(std::span<const double> series, std::size_t num_segments, std::size_t focus) {
    if (num_segments == 0 || focus >= num_segments || series.size() < num_segments) {
        throw Error(ErrorCode::TooShort, fmt::format("cannot split {} values into {} segments (focus {})",
                                                     series.size(), num_segments, focus));
    }
    const double total = abs_energy(series);
    if (!(total > 0.0)) return {0.0, true};
    const std::size_t base = series.size() / num_segments;
    const std::size_t extra = series.size() % num_segments;
    std::size_t start = 0;
    for (std::size_t s = 0; s < focus; ++s) start += base + (s < extra ? 1 : 0);
    const std::size_t len = base + (focus < extra ? 1 : 0);
    return {abs_energy(series.subspan(start, len)) / total, false};
}

std::vector<double> ar_coefficients(std::span<const double> series, std::size_t k) {
    if (k == 0 || series.size() < 2 * k) {
        throw Error(ErrorCode::TooShort, fmt::format("AR({}) needs {} values, got {}", k, 2 * k, series.size()));
    }
    const std::size_t rows = series.size() - k;
    Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k + 1));
    Eigen::VectorXd target(static_cast<Eigen::Index>(rows));
    for (std::size_t t = k; t < series.size(); ++t) {
        const auto r = static_cast<Eigen::Index>(t - k);
        design(r, 0) = 1.0;
        for (std::size_t lag = 1; lag <= k; ++lag) design(r, static_cast<Eigen::Index>(lag)) = series[t - lag];
        target(r) = series[t];
    }
    const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(target);
    return {coef.data(), coef.data() + coef.size()};
}

double FeatureDef::evaluate(std::span<const double> series) const {
    switch (kind) {
        case FeatureKind::Mean: return features::mean(series);
        case FeatureKind::Median: return features::median(series);
        case FeatureKind::StandardDeviation: return std::sqrt(features::variance(series));
        case FeatureKind::Variance: return features::variance(series);
        case FeatureKind::Skewness: return features::skewness(series);
        case FeatureKind::Maximum: return features::maximum(series);
        case FeatureKind::Minimum: return features::minimum(series);
        case FeatureKind::AbsEnergy: return features::abs_energy(series);
        case FeatureKind::MeanAbsChange: return features::mean_abs_change(series);
        case FeatureKind::MeanChange: return features::mean_change(series);
        case FeatureKind::CountAboveMean: return static_cast<double>(features::count_above_mean(series));
        case FeatureKind::CountBelowMean: return static_cast<double>(features::count_below_mean(series));
        case FeatureKind::FirstValue: require_non_empty(series); return series.front();
        case FeatureKind::LastValue: require_non_empty(series); return series.back();
        case FeatureKind::LinearTrend: return pick(linear_trend(series), attr);
        case FeatureKind::AggLinearTrend: return pick(agg_linear_trend(series, a, agg), attr);
        case FeatureKind::NumberPeaks: return static_cast<double>(number_peaks(series, a));
        case FeatureKind::EnergyRatioByChunks: {
            const auto v = energy_ratio_by_chunks(series, a, b);
            return v.degenerate ? kNaN : v.value;
        }
        case FeatureKind::ArCoefficient: return ar_coefficients(series, a).at(b);
    }
    return kNaN;
}

FeatureDef make_feature(Channel channel, FeatureKind kind, TrendAttr attr, Aggregate agg, std::size_t a,
                        std::size_t b) {
    FeatureDef def{"", channel, kind, attr, agg, a, b};
    const std::string ch = channel_name(channel);
    switch (kind) {
        case FeatureKind::Mean: def.name = ch + "__mean"; break;
        case FeatureKind::Median: def.name = ch + "__median"; break;
        case FeatureKind::StandardDeviation: def.name = ch + "__standard_deviation"; break;
        case FeatureKind::Variance: def.name = ch + "__variance"; break;
        case FeatureKind::Skewness: def.name = ch + "__skewness"; break;
        case FeatureKind::Maximum: def.name = ch + "__maximum"; break;
        case FeatureKind::Minimum: def.name = ch + "__minimum"; break;
        case FeatureKind::AbsEnergy: def.name = ch + "__abs_energy"; break;
        case FeatureKind::MeanAbsChange: def.name = ch + "__mean_abs_change"; break;
        case FeatureKind::MeanChange: def.name = ch + "__mean_change"; break;
        case FeatureKind::CountAboveMean: def.name = ch + "__count_above_mean"; break;
        case FeatureKind::CountBelowMean: def.name = ch + "__count_below_mean"; break;
        case FeatureKind::FirstValue: def.name = ch + "__first_value"; break;
        case FeatureKind::LastValue: def.name = ch + "__last_value"; break;
        case FeatureKind::LinearTrend:
            def.name = fmt::format("{}__linear_trend__attr_\"{}\"", ch, attr_name(attr));
            break;
        case FeatureKind::AggLinearTrend:
            def.name = fmt::format("{}__agg_linear_trend__attr_\"{}\"__chunk_len_{}__f_agg_\"{}\"", ch,
                                   attr_name(attr), a, agg_name(agg));
            break;
        case FeatureKind::NumberPeaks: def.name = fmt::format("{}__number_peaks__n_{}", ch, a); break;
        case FeatureKind::EnergyRatioByChunks:
            def.name = fmt::format("{}__energy_ratio_by_chunks__num_segments_{}__segment_focus_{}", ch, a, b);
            break;
        case FeatureKind::ArCoefficient: def.name = fmt::format("{}__ar_coefficient__coeff_{}__k_{}", ch, b, a); break;
    }
    return def;
}

const std::vector<FeatureDef>& default_bank() {
    static const std::vector<FeatureDef> bank = [] {
        std::vector<FeatureDef> out;
        for (auto channel : {Channel::ZReal, Channel::ZImag}) {
            for (auto kind : {FeatureKind::Mean, FeatureKind::Median, FeatureKind::StandardDeviation,
                              FeatureKind::Variance, FeatureKind::Skewness, FeatureKind::Maximum,
                              FeatureKind::Minimum, FeatureKind::AbsEnergy, FeatureKind::MeanAbsChange,
                              FeatureKind::MeanChange, FeatureKind::CountAboveMean, FeatureKind::CountBelowMean,
                              FeatureKind::FirstValue, FeatureKind::LastValue}) {
                out.push_back(make_feature(channel, kind));
            }
            for (auto attr : {TrendAttr::Slope, TrendAttr::Intercept, TrendAttr::RValue}) {
                out.push_back(make_feature(channel, FeatureKind::LinearTrend, attr));
            }
            for (std::size_t chunk : {5, 10}) {
                for (auto agg : {Aggregate::Max, Aggregate::Min, Aggregate::Mean}) {
                    for (auto attr : {TrendAttr::RValue, TrendAttr::Slope}) {
                        out.push_back(make_feature(channel, FeatureKind::AggLinearTrend, attr, agg, chunk));
                    }
                }
            }
            for (std::size_t n : {1, 2, 3}) {
                out.push_back(make_feature(channel, FeatureKind::NumberPeaks, {}, {}, n));
            }
            for (std::size_t focus = 0; focus < 10; ++focus) {
                out.push_back(make_feature(channel, FeatureKind::EnergyRatioByChunks, {}, {}, 10, focus));
            }
            for (std::size_t coeff = 0; coeff <= 4; ++coeff) {
                out.push_back(make_feature(channel, FeatureKind::ArCoefficient, {}, {}, 10, coeff));
            }
        }
        return out;
    }();
    return bank;
}

const FeatureDef& find_feature(const std::string& name) {
    static const std::map<std::string, std::size_t> index = [] {
        std::map<std::string, std::size_t> out;
        const auto& bank = default_bank();
        for (std::size_t i = 0; i < bank.size(); ++i) out.emplace(bank[i].name, i);
        return out;
    }();
    const auto it = index.find(name);
    if (it == index.end()) throw Error(ErrorCode::InvalidConfig, fmt::format("unknown feature '{}'", name));
    return default_bank()[it->second];
}

std::vector<FeatureDef> bank_from_names(const std::vector<std::string>& names) {
    std::vector<FeatureDef> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(find_feature(n));
    return out;
}

FeatureVector extract_features(const Spectrum& s, std::span<const FeatureDef> bank) {
    std::vector<double> re(s.size()), im(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        re[i] = s.z[i].real();
        im[i] = s.z[i].imag();
    }
    FeatureVector out;
    out.values.reserve(bank.size());
    out.degenerate.reserve(bank.size());
    for (const auto& def : bank) {
        const double v = def.evaluate(def.channel == Channel::ZReal ? re : im);
        const bool bad = !std::isfinite(v);
        out.values.push_back(bad ? 0.0 : v);
        out.degenerate.push_back(bad);
    }
    return out;
}

Featurized featurize(std::span<const Spectrum> spectra, std::span<const FeatureDef> bank, int jobs) {
    Featurized out;
    auto& m = out.matrix;
    m.X = Matrix(spectra.size(), bank.size());
    for (const auto& def : bank) m.columns.push_back(def.name);
    std::vector<FeatureVector> rows(spectra.size());
    parallel_for(spectra.size(), jobs, [&](std::size_t i) { rows[i] = extract_features(spectra[i], bank); });
    out.degenerate_counts.assign(bank.size(), 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < bank.size(); ++c) {
            m.X(r, c) = rows[r].values[c];
            out.degenerate_counts[c] += rows[r].degenerate[c] ? 1 : 0;
        }
        m.labels.push_back(spectra[r].label);
        m.ids.push_back(spectra[r].id);
    }
    return out;
}

std::vector<std::size_t> RelevanceTable::selected_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (selected[i]) out.push_back(i);
    }
    return out;
}

RelevanceTable select_relevant(const FeatureMatrix& m, double fdr) {
    if (!(fdr > 0.0 && fdr < 1.0)) throw Error(ErrorCode::InvalidConfig, "FDR level must lie in (0, 1)");
    if (m.labels.size() != m.rows()) throw Error(ErrorCode::ShapeMismatch, "one label per row required");

    std::map<std::string, std::size_t> class_sizes;
    for (const auto& label : m.labels) ++class_sizes[label];
    if (class_sizes.size() < 2) throw Error(ErrorCode::DegenerateLabels, "need at least two classes");
    for (const auto& [label, count] : class_sizes) {
        if (count < 2) throw Error(ErrorCode::DegenerateLabels, fmt::format("class '{}' has fewer than 2 rows", label));
    }

    std::vector<std::vector<char>> membership;
    for (const auto& [label, count] : class_sizes) {
        std::vector<char> mask(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) mask[r] = m.labels[r] == label ? 1 : 0;
        membership.push_back(std::move(mask));
    }
    // Two classes give the same test twice; count distinct tests.
    const double tests = class_sizes.size() == 2 ? 1.0 : static_cast<double>(class_sizes.size());

    RelevanceTable table;
    table.fdr = fdr;
    table.features = m.columns;
    table.p_values.assign(m.cols(), 1.0);
    std::vector<bool> constant(m.cols(), false);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto column = m.X.column(c);
        const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
        if (column.empty() || *lo == *hi) {
            constant[c] = true;
            continue;
        }
        const auto ranking = stats::rank_with_ties(column);
        double best = 1.0;
        for (const auto& mask : membership) best = std::min(best, stats::mann_whitney_u(ranking, mask).p_value);
        table.p_values[c] = std::min(1.0, best * tests);
    }
    table.selected = stats::benjamini_yekutieli(table.p_values, fdr);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        if (constant[c]) table.selected[c] = false;
    }
    return table;
}

}  // namespace ecmkit::features
