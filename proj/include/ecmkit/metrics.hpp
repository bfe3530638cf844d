#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ecmkit {

/// counts[t][p]: samples of true class t predicted as class p.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t size() const noexcept { return classes.size(); }
    std::size_t total() const;
    std::size_t support(std::size_t k) const;
    std::size_t predicted(std::size_t k) const;
    /// Row-normalized matrix; rows with no support are all zero.
    std::vector<std::vector<double>> row_normalized() const;
};

/// Throws LengthMismatch on unequal lengths and UnknownLabel for labels
/// outside `classes`.
ConfusionMatrix confusion(std::span<const std::string> y_true, std::span<const std::string> y_pred,
                          const std::vector<std::string>& classes);

/// Integer labels in [0, n_classes); classes are named by index.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes);

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// A zero denominator makes that precision, recall or F1 equal to 0. Macro
/// averages cover every class in the matrix; weighted averages use support.
struct Scores {
    std::vector<ClassScore> per_class;
    double accuracy = 0.0;
    double f1_macro = 0.0;
    double f1_weighted = 0.0;
    double recall_macro = 0.0;
    double recall_weighted = 0.0;
};

/// Throws EmptyMatrix if the matrix holds no samples.
Scores scores(const ConfusionMatrix& cm);

std::string confusion_csv(const ConfusionMatrix& cm);
std::string scores_csv(const ConfusionMatrix& cm, const Scores& s);

}  // namespace ecmkit
