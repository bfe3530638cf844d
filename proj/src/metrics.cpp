#include "ecmkit/metrics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ecmkit/error.hpp"

namespace ecmkit {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
        for (auto c : row) n += c;
    }
    return n;
}

std::size_t ConfusionMatrix::support(std::size_t k) const {
    std::size_t n = 0;
    for (auto c : counts.at(k)) n += c;
    return n;
}

std::size_t ConfusionMatrix::predicted(std::size_t k) const {
    std::size_t n = 0;
    for (const auto& row : counts) n += row.at(k);
    return n;
}

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
    std::vector<std::vector<double>> out(size(), std::vector<double>(size(), 0.0));
    for (std::size_t t = 0; t < size(); ++t) {
        const auto n = support(t);
        if (n == 0) continue;
        for (std::size_t p = 0; p < size(); ++p) out[t][p] = double(counts[t][p]) / double(n);
    }
    return out;
}

ConfusionMatrix confusion(std::span<const std::string> y_true, std::span<const std::string> y_pred,
                          const std::vector<std::string>& classes) {
    if (y_true.size() != y_pred.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("{} true labels but {} predictions", y_true.size(), y_pred.size()));
    }
    auto index = [&](const std::string& label) {
        const auto it = std::find(classes.begin(), classes.end(), label);
        if (it == classes.end()) throw Error(ErrorCode::UnknownLabel, fmt::format("label '{}' is not a class", label));
        return static_cast<std::size_t>(it - classes.begin());
    };
    ConfusionMatrix cm{classes, std::vector<std::vector<std::size_t>>(classes.size(),
                                                                      std::vector<std::size_t>(classes.size(), 0))};
    for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[index(y_true[i])][index(y_pred[i])];
    return cm;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("{} true labels but {} predictions", y_true.size(), y_pred.size()));
    }
    ConfusionMatrix cm;
    for (std::size_t k = 0; k < n_classes; ++k) cm.classes.push_back(std::to_string(k));
    cm.counts.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    auto check = [&](int label) {
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
            throw Error(ErrorCode::UnknownLabel, fmt::format("label {} outside [0, {})", label, n_classes));
        }
        return static_cast<std::size_t>(label);
    };
    for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[check(y_true[i])][check(y_pred[i])];
    return cm;
}

Scores scores(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix holds no samples");
    Scores s;
    const std::size_t k = cm.size();
    std::size_t correct = 0;
    for (std::size_t c = 0; c < k; ++c) {
        ClassScore cs;
        const auto tp = cm.counts[c][c];
        correct += tp;
        cs.support = cm.support(c);
        const auto predicted = cm.predicted(c);
        cs.precision = predicted == 0 ? 0.0 : double(tp) / double(predicted);
        cs.recall = cs.support == 0 ? 0.0 : double(tp) / double(cs.support);
        const double denom = cs.precision + cs.recall;
        cs.f1 = denom > 0.0 ? 2.0 * cs.precision * cs.recall / denom : 0.0;
        s.per_class.push_back(cs);
        s.f1_macro += cs.f1;
        s.recall_macro += cs.recall;
        s.f1_weighted += cs.f1 * double(cs.support);
        s.recall_weighted += cs.recall * double(cs.support);
    }
    s.f1_macro /= double(k);
    s.recall_macro /= double(k);
    s.f1_weighted /= double(total);
    s.recall_weighted /= double(total);
    s.accuracy = double(correct) / double(total);
    return s;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "true\\predicted";
    for (const auto& c : cm.classes) out += "," + c;
    out += "\n";
    for (std::size_t t = 0; t < cm.size(); ++t) {
        out += cm.classes[t];
        for (auto v : cm.counts[t]) out += fmt::format(",{}", v);
        out += "\n";
    }
    return out;
}

std::string scores_csv(const ConfusionMatrix& cm, const Scores& s) {
    std::string out = "class,precision,recall,f1,support\n";
    for (std::size_t k = 0; k < cm.size(); ++k) {
        const auto& c = s.per_class[k];
        out += fmt::format("{},{},{},{},{}\n", cm.classes[k], c.precision, c.recall, c.f1, c.support);
    }
    out += fmt::format("macro,,{},{},\n", s.recall_macro, s.f1_macro);
    out += fmt::format("weighted,,{},{},\n", s.recall_weighted, s.f1_weighted);
    out += fmt::format("accuracy,,,{},\n", s.accuracy);
    return out;
}

}  // namespace ecmkit
