#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecmkit/circuit.hpp"
#include "ecmkit/datagen.hpp"
#include "ecmkit/feature_matrix.hpp"

namespace ecmkit {

struct FilterConfig {
    enum class RealIncreaseMode { AllPairs, Consecutive };

    std::size_t min_neg_imag_points = 10;
    double range_ratio = 0.5;
    /// Largest allowed rise of max-normalized Re(z) towards higher frequency.
    double real_increase_tol = 0.03;
    RealIncreaseMode real_increase_mode = RealIncreaseMode::AllPairs;

    void validate() const;
};

enum class RejectReason {
    TooFewNegImag,      // fewer than min_neg_imag_points points with Im(z) < 0
    SmallNegImagRange,  // max(-Im) < range_ratio * |min(-Im)| on the unfiltered points
    NegativeReal,       // some Re(z) < 0
    RealIncrease,       // Re(z) not mainly decreasing with frequency
};

const char* to_string(RejectReason reason) noexcept;

/// Removes points with Im(z) > 0, preserving order.
Spectrum drop_positive_imag(const Spectrum& s);

/// Evaluates a single criterion on a (raw) spectrum sorted by frequency.
bool violates(const Spectrum& s, const FilterConfig& config, RejectReason criterion);

/// Returns the first violated criterion in declaration order, or nullopt to
/// keep. The negative-imaginary count and range checks look at all points;
/// the real-part checks look at the points left after drop_positive_imag.
std::optional<RejectReason> filter_spectrum(const Spectrum& s, const FilterConfig& config);

struct FilterDecision {
    std::string id;
    std::string label;
    std::optional<RejectReason> reason;  // nullopt: kept
};

struct FilterReport {
    Dataset kept;  // point-dropped survivors
    std::vector<FilterDecision> decisions;  // one per input spectrum, input order
    std::map<std::string, std::size_t> removed_per_class;
    std::map<std::string, std::size_t> kept_per_class;

    std::size_t rejected_count() const;
    std::map<RejectReason, std::size_t> reason_counts() const;
};

FilterReport filter_dataset(const Dataset& d, const FilterConfig& config);

/// CSV with columns id,class,decision,reason.
std::string filter_report_csv(const FilterReport& report);

struct InterpolationGrid {
    std::size_t points = 30;
    double fmin = 1e1;
    double fmax = 1e5;

    std::vector<double> frequencies() const;
};

struct Interpolated {
    Spectrum spectrum;
    bool extrapolated = false;
};

/// Re and Im interpolated separately, piecewise linear in log10(f), with the
/// end values held outside the source range.
Interpolated interpolate(const Spectrum& s, std::span<const double> grid);
Interpolated interpolate(const Spectrum& s, std::size_t points = 30, double fmin = 1e1, double fmax = 1e5);

struct InterpolatedSet {
    std::vector<double> grid;
    std::vector<Spectrum> spectra;
    std::size_t extrapolated = 0;
};

InterpolatedSet interpolate_dataset(const Dataset& d, const InterpolationGrid& grid, int jobs = 1);

/// Raw X = [Re | Im] over spectra that share one frequency grid.
FeatureMatrix raw_feature_matrix(std::span<const Spectrum> spectra);

/// Divides each row by its maximum real-part entry.
FeatureMatrix normalize_max_real(FeatureMatrix m);

/// Same scaling applied to one spectrum: z / max Re(z).
Spectrum normalize_max_real(Spectrum s);

struct MinMaxNormalized {
    std::vector<double> re;
    std::vector<double> im;
    bool degenerate_re = false;  // max == min on that axis; values set to 0
    bool degenerate_im = false;
};

MinMaxNormalized normalize_minmax(const Spectrum& s);

}  // namespace ecmkit
