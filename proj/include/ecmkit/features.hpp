#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecmkit/circuit.hpp"
#include "ecmkit/feature_matrix.hpp"

namespace ecmkit::features {

// Series functions. Inputs are evenly spaced in log-frequency, which is
// treated as time.

enum class Aggregate { Max, Min, Mean, Var };
enum class TrendAttr { RValue, Slope, Intercept };

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rvalue = 0.0;  // NaN when either variable is constant
};

/// Ordinary least squares of y against 0..n-1.
LinearFit linear_trend(std::span<const double> y);

/// Splits into chunks of chunk_len (incomplete tail dropped), aggregates
/// each chunk and regresses the aggregates against 0..k-1.
LinearFit agg_linear_trend(std::span<const double> series, std::size_t chunk_len, Aggregate agg);

/// Pearson r of the chunk aggregates; throws TooShort if no full chunk.
double agg_linear_trend_rvalue(std::span<const double> series, std::size_t chunk_len = 10,
                               Aggregate agg = Aggregate::Max);

/// Count of i with series[i] strictly greater than its n neighbours on both
/// sides. Throws TooShort if series.size() < 2n+1.
std::size_t number_peaks(std::span<const double> series, std::size_t support = 1);

struct FeatureValue {
    double value = 0.0;
    bool degenerate = false;
};

/// Energy share of chunk `focus` out of `num_segments` near-equal chunks
/// (earlier chunks take the remainder). Zero-energy input gives 0, flagged.
FeatureValue energy_ratio_by_chunks(std::span<const double> series, std::size_t num_segments = 10,
                                    std::size_t focus = 9);

/// AR(k) with intercept by conditional least squares: regress x_t on
/// [1, x_{t-1}, ..., x_{t-k}]. Returns [intercept, lag1, ..., lagk];
/// minimum-norm solution for rank-deficient designs. Needs n >= 2k.
std::vector<double> ar_coefficients(std::span<const double> series, std::size_t k = 10);

double minimum(std::span<const double> series);
double maximum(std::span<const double> series);
double mean(std::span<const double> series);
double median(std::span<const double> series);
double variance(std::span<const double> series);  // population
double skewness(std::span<const double> series);  // adjusted Fisher-Pearson
double abs_energy(std::span<const double> series);
double mean_abs_change(std::span<const double> series);
double mean_change(std::span<const double> series);
std::size_t count_above_mean(std::span<const double> series);
std::size_t count_below_mean(std::span<const double> series);

// Feature bank.

enum class Channel { ZReal, ZImag };

enum class FeatureKind {
    Mean,
    Median,
    StandardDeviation,
    Variance,
    Skewness,
    Maximum,
    Minimum,
    AbsEnergy,
    MeanAbsChange,
    MeanChange,
    CountAboveMean,
    CountBelowMean,
    FirstValue,
    LastValue,
    LinearTrend,
    AggLinearTrend,
    NumberPeaks,
    EnergyRatioByChunks,
    ArCoefficient,
};

struct FeatureDef {
    std::string name;  // channel__feature__params
    Channel channel = Channel::ZReal;
    FeatureKind kind = FeatureKind::Mean;
    TrendAttr attr = TrendAttr::RValue;
    Aggregate agg = Aggregate::Max;
    std::size_t a = 0;  // chunk_len | support | num_segments | k
    std::size_t b = 0;  // segment_focus | coeff

    double evaluate(std::span<const double> series) const;
};

FeatureDef make_feature(Channel channel, FeatureKind kind, TrendAttr attr = TrendAttr::RValue,
                        Aggregate agg = Aggregate::Max, std::size_t a = 0, std::size_t b = 0);

/// The curated bank: 47 features per channel, including the seven named in
/// the SHAP ranking (agg_linear_trend rvalue max/min, number_peaks n=1,
/// energy_ratio_by_chunks focus 9, AR coeff 0/1, minimum).
const std::vector<FeatureDef>& default_bank();

/// Looks a name up in the default bank; throws InvalidConfig if absent.
const FeatureDef& find_feature(const std::string& name);

std::vector<FeatureDef> bank_from_names(const std::vector<std::string>& names);

struct FeatureVector {
    std::vector<double> values;
    std::vector<bool> degenerate;  // value was NaN/Inf and replaced by 0
};

FeatureVector extract_features(const Spectrum& s, std::span<const FeatureDef> bank);

struct Featurized {
    FeatureMatrix matrix;
    std::vector<std::size_t> degenerate_counts;  // per feature
};

/// Row i depends only on spectra[i].
Featurized featurize(std::span<const Spectrum> spectra, std::span<const FeatureDef> bank, int jobs = 1);

struct RelevanceTable {
    std::vector<std::string> features;
    std::vector<double> p_values;
    std::vector<bool> selected;
    double fdr = 0.05;

    std::vector<std::size_t> selected_indices() const;
};

/// One-vs-rest two-sided Mann-Whitney test per feature and class. The
/// per-feature p-value is the smallest class p-value, Bonferroni-adjusted
/// by the number of classes tested; Benjamini-Yekutieli at `fdr` selects.
/// Constant features are always rejected.
RelevanceTable select_relevant(const FeatureMatrix& m, double fdr = 0.05);

}  // namespace ecmkit::features
