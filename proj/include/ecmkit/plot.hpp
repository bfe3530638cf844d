#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ecmkit/circuit.hpp"
#include "ecmkit/metrics.hpp"

namespace ecmkit {

enum class PlotKind { Nyquist, Bode, Combined };

PlotKind plot_kind_from_string(std::string_view name);

struct PlotOptions {
    double panel_width = 420.0;
    double panel_height = 320.0;
    std::string title;
    /// Drawn as a line over the measured points, on the same axes.
    std::optional<Spectrum> overlay;
};

/// Standalone SVG. Nyquist panels plot x = Re(z), y = -Im(z); Bode panels
/// plot log10 |z| and the phase in degrees against log10 f.
/// Throws EmptySpectrum.
std::string plot_spectrum(const Spectrum& s, PlotKind kind, const PlotOptions& options = {});

/// Heatmap of row-normalized counts with the raw count in each cell.
std::string plot_confusion(const ConfusionMatrix& cm, const std::string& title = {});

}  // namespace ecmkit
