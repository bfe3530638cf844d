#pragma once

#include <string>
#include <vector>

#include "ecmkit/matrix.hpp"

namespace ecmkit {

/// One row per spectrum. For raw impedance input the columns are the p real
/// parts followed by the p imaginary parts on the common grid; for
/// engineered input they are named channel__feature__params.
struct FeatureMatrix {
    Matrix X;
    std::vector<std::string> columns;
    std::vector<std::string> labels;
    std::vector<std::string> ids;
    std::vector<double> freq_grid;  // empty for engineered features

    std::size_t rows() const noexcept { return X.rows(); }
    std::size_t cols() const noexcept { return X.cols(); }
};

/// Keeps only the listed column indices, in the given order.
FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::size_t>& keep);

}  // namespace ecmkit
