#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecmkit/error.hpp"
#include "ecmkit/model.hpp"
#include "ecmkit/parallel.hpp"

namespace ecmkit {

void GbtConfig::validate() const {
    if (n_rounds == 0) throw Error(ErrorCode::InvalidConfig, "n_rounds must be positive");
    if (max_depth == 0) throw Error(ErrorCode::InvalidConfig, "max_depth must be positive");
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "learning_rate must lie in [0, 1]");
    }
    if (!(lambda >= 0.0) || !(min_child_weight >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "lambda and min_child_weight must be non-negative");
    }
    if (!(row_subsample > 0.0 && row_subsample <= 1.0) || !(col_subsample > 0.0 && col_subsample <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "subsample fractions must lie in (0, 1]");
    }
}

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct NodeStats {
    double G = 0.0;
    double H = 0.0;
    int tree_node = 0;
};

double leaf_score(double G, double H, double lambda) {
    return G * G / (H + lambda);
}

class RegressionTreeBuilder {
public:
    RegressionTreeBuilder(const Matrix& X, const std::vector<std::vector<std::uint32_t>>& sorted, const GbtConfig& cfg,
                          int jobs)
        : X_(X), sorted_(sorted), cfg_(cfg), jobs_(jobs) {}

    // Rows with in_sample[r] == 0 do not contribute to any statistic.
    DecisionTree build(std::span<const double> g, std::span<const double> h, std::span<const char> in_sample,
                       std::span<const int> features) {
        const std::size_t n = X_.rows();
        DecisionTree tree(1);
        node_of_.assign(n, -1);
        std::vector<NodeStats> active(1);
        active[0].tree_node = tree.add_node(std::vector<double>{0.0});
        for (std::size_t r = 0; r < n; ++r) {
            if (!in_sample[r]) continue;
            node_of_[r] = 0;
            active[0].G += g[r];
            active[0].H += h[r];
        }

        for (std::size_t depth = 0; depth < cfg_.max_depth && !active.empty(); ++depth) {
            const auto best = find_splits(g, h, active, features);

            std::vector<NodeStats> next;
            std::vector<int> remap_left(active.size(), -1), remap_right(active.size(), -1);
            for (std::size_t a = 0; a < active.size(); ++a) {
                const auto& node = active[a];
                const auto& split = best[a];
                if (split.feature < 0) {
                    finalize(tree, node);
                    continue;
                }
                const int left = tree.add_node(std::vector<double>{0.0});
                const int right = tree.add_node(std::vector<double>{0.0});
                tree.split(node.tree_node, split.feature, split.threshold, left, right);
                remap_left[a] = static_cast<int>(next.size());
                next.push_back({0.0, 0.0, left});
                remap_right[a] = static_cast<int>(next.size());
                next.push_back({0.0, 0.0, right});
            }
            for (std::size_t r = 0; r < n; ++r) {
                const int a = node_of_[r];
                if (a < 0) continue;
                const auto& split = best[static_cast<std::size_t>(a)];
                if (split.feature < 0) {
                    node_of_[r] = -1;
                    continue;
                }
                const bool go_left = X_(r, static_cast<std::size_t>(split.feature)) <= split.threshold;
                const int child = go_left ? remap_left[static_cast<std::size_t>(a)] : remap_right[static_cast<std::size_t>(a)];
                node_of_[r] = child;
                next[static_cast<std::size_t>(child)].G += g[r];
                next[static_cast<std::size_t>(child)].H += h[r];
            }
            active = std::move(next);
        }
        for (const auto& node : active) finalize(tree, node);
        return tree;
    }

private:
    void finalize(DecisionTree& tree, const NodeStats& node) const {
        const double weight = -node.G / (node.H + cfg_.lambda);
        tree.set_payload(node.tree_node, std::vector<double>{std::isfinite(weight) ? weight : 0.0});
    }

    std::vector<SplitCandidate> find_splits(std::span<const double> g, std::span<const double> h,
                                            const std::vector<NodeStats>& active, std::span<const int> features) {
        const std::size_t m = active.size();
        std::vector<std::vector<SplitCandidate>> per_feature(features.size());
        parallel_for(features.size(), jobs_, [&](std::size_t fi) {
            const int f = features[fi];
            std::vector<SplitCandidate> best(m);
            std::vector<double> GL(m, 0.0), HL(m, 0.0), last(m, 0.0);
            std::vector<char> seen(m, 0);
            for (auto r : sorted_[static_cast<std::size_t>(f)]) {
                const int a = node_of_[r];
                if (a < 0) continue;
                const auto ai = static_cast<std::size_t>(a);
                const double v = X_(r, static_cast<std::size_t>(f));
                if (seen[ai] && v != last[ai]) {
                    const double GR = active[ai].G - GL[ai];
                    const double HR = active[ai].H - HL[ai];
                    if (HL[ai] >= cfg_.min_child_weight && HR >= cfg_.min_child_weight) {
                        const double gain = 0.5 * (leaf_score(GL[ai], HL[ai], cfg_.lambda) +
                                                   leaf_score(GR, HR, cfg_.lambda) -
                                                   leaf_score(active[ai].G, active[ai].H, cfg_.lambda));
                        // Ascending sweep with strict comparison keeps the lowest threshold.
                        if (gain > best[ai].gain) best[ai] = {gain, f, last[ai]};
                    }
                }
                seen[ai] = 1;
                GL[ai] += g[r];
                HL[ai] += h[r];
                last[ai] = v;
            }
            per_feature[fi] = std::move(best);
        });

        // Reduce in ascending feature order so equal gains keep the lowest index.
        std::vector<std::size_t> order(features.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return features[a] < features[b]; });
        std::vector<SplitCandidate> best(m);
        for (auto fi : order) {
            for (std::size_t a = 0; a < m; ++a) {
                const auto& c = per_feature[fi][a];
                if (c.feature >= 0 && c.gain > best[a].gain) best[a] = c;
            }
        }
        return best;
    }

    const Matrix& X_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const GbtConfig& cfg_;
    int jobs_;
    std::vector<int> node_of_;
};

void softmax_row(std::span<double> row) {
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto& v : row) {
        v = std::exp(v - peak);
        sum += v;
    }
    for (auto& v : row) v /= sum;
}

}  // namespace

GbtModel train_gbt(const Matrix& X, std::span<const int> y, std::size_t n_classes, const GbtConfig& config, int jobs,
                   std::vector<double>* loss_history) {
    config.validate();
    detail::check_training_data(X, y, n_classes);
    const std::size_t n = X.rows();
    const std::size_t F = X.cols();
    const std::size_t K = n_classes;

    GbtModel model;
    model.n_classes = K;
    model.n_features = F;
    model.learning_rate = config.learning_rate;
    model.config = config;

    std::vector<double> prior(K, 0.0);
    for (int label : y) prior[static_cast<std::size_t>(label)] += 1.0;
    model.base_scores.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        // Absent classes get a large negative score instead of log(0).
        model.base_scores[k] = prior[k] > 0.0 ? std::log(prior[k] / double(n)) : -30.0;
    }

    std::vector<std::vector<std::uint32_t>> sorted(F);
    parallel_for(F, jobs, [&](std::size_t f) {
        auto& idx = sorted[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
    });

    Matrix scores(n, K);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < K; ++k) scores(r, k) = model.base_scores[k];
    }
    Matrix proba(n, K);
    std::vector<double> g(n), h(n);
    std::vector<char> in_sample(n);
    std::vector<int> all_features(F);
    std::iota(all_features.begin(), all_features.end(), 0);
    RegressionTreeBuilder builder(X, sorted, config, jobs);

    for (std::size_t round = 0; round < config.n_rounds; ++round) {
        Rng rng(derive_seed(config.seed, round));
        for (std::size_t r = 0; r < n; ++r) {
            std::copy(scores.row(r).begin(), scores.row(r).end(), proba.row(r).begin());
            softmax_row(proba.row(r));
        }
        for (std::size_t r = 0; r < n; ++r) {
            in_sample[r] = config.row_subsample >= 1.0 || uniform01(rng) < config.row_subsample;
        }
        std::vector<int> features = all_features;
        if (config.col_subsample < 1.0) {
            shuffle(std::span<int>(features), rng);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(config.col_subsample * static_cast<double>(F))));
            features.resize(keep);
            std::sort(features.begin(), features.end());
        }

        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t r = 0; r < n; ++r) {
                const double p = proba(r, k);
                g[r] = p - (static_cast<std::size_t>(y[r]) == k ? 1.0 : 0.0);
                h[r] = std::max(2.0 * p * (1.0 - p), 1e-16);
            }
            model.trees.push_back(builder.build(g, h, in_sample, features));
        }
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < K; ++k) {
                scores(r, k) += config.learning_rate * model.trees[round * K + k].predict(X.row(r))[0];
            }
        }
        if (loss_history) {
            double loss = 0.0;
            std::vector<double> row(K);
            for (std::size_t r = 0; r < n; ++r) {
                std::copy(scores.row(r).begin(), scores.row(r).end(), row.begin());
                softmax_row(row);
                loss -= std::log(std::max(row[static_cast<std::size_t>(y[r])], 1e-300));
            }
            loss_history->push_back(loss / double(n));
        }
    }
    return model;
}

Matrix predict_scores(const GbtModel& model, const Matrix& X) {
    detail::check_predict_shape(X, model.n_features);
    const std::size_t K = model.n_classes;
    Matrix out(X.rows(), K);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto x = X.row(r);
        for (std::size_t k = 0; k < K; ++k) {
            double s = model.base_scores[k];
            for (std::size_t t = k; t < model.trees.size(); t += K) s += model.learning_rate * model.trees[t].predict(x)[0];
            out(r, k) = s;
        }
    }
    return out;
}

Matrix predict_proba(const GbtModel& model, const Matrix& X) {
    Matrix out = predict_scores(model, X);
    for (std::size_t r = 0; r < out.rows(); ++r) softmax_row(out.row(r));
    return out;
}

std::vector<int> predict(const GbtModel& model, const Matrix& X) {
    return argmax_rows(predict_proba(model, X));
}

}  // namespace ecmkit
