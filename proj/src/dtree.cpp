#include "edgetune/dtree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace edgetune {

double entropy(const std::map<int, int>& label_counts) {
    long total = 0;
    for (const auto& [label, count] : label_counts) total += count;
    if (total < 1) throw std::invalid_argument("entropy: empty histogram");
    double h = 0.0;
    for (const auto& [label, count] : label_counts) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / total;
        h -= p * std::log2(p);
    }
    return h;
}

int DTree::leaf_count() const {
    int leaves = 0;
    for (const auto& n : nodes) leaves += n.feature < 0 ? 1 : 0;
    return leaves;
}

namespace {

double entropy_of(const std::vector<int>& counts, int total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

int majority_label(const std::map<int, int>& counts) {
    int best_label = 0, best = -1;
    for (const auto& [label, count] : counts)
        if (count > best) {  // map order makes ties go to the lowest label
            best = count;
            best_label = label;
        }
    return best_label;
}

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Best entropy split of the given index set; gain <= 0 means no usable
// split exists. Tie-break: lowest feature index, then lowest threshold.
SplitChoice best_split(const std::vector<TrainingSample>& samples,
                       const std::vector<int>& idx, const FeatureMask& mask) {
    std::map<int, int> parent_hist;
    for (int i : idx) ++parent_hist[samples[i].label];
    if (parent_hist.size() < 2) return {};

    // dense re-labeling for fast histogram arithmetic
    std::map<int, int> dense;
    for (const auto& [label, count] : parent_hist)
        dense.emplace(label, static_cast<int>(dense.size()));
    const int L = static_cast<int>(dense.size());
    const int n = static_cast<int>(idx.size());

    std::vector<int> parent_counts(L, 0);
    for (int i : idx) ++parent_counts[dense[samples[i].label]];
    const double parent_h = entropy_of(parent_counts, n);

    SplitChoice best;
    std::vector<std::pair<double, int>> order(n);  // (value, dense label)
    for (int f = 0; f < kFeatureCount; ++f) {
        if (!mask[f]) continue;
        for (int j = 0; j < n; ++j) {
            const auto& s = samples[idx[j]];
            order[j] = {s.features.raw()[f], dense[s.label]};
        }
        std::sort(order.begin(), order.end());

        std::vector<int> left_counts(L, 0);
        int left_n = 0;
        for (int j = 0; j + 1 < n; ++j) {
            ++left_counts[order[j].second];
            ++left_n;
            if (order[j].first == order[j + 1].first) continue;
            const double threshold =
                order[j].first + (order[j + 1].first - order[j].first) / 2.0;
            std::vector<int> right_counts(L);
            for (int l = 0; l < L; ++l)
                right_counts[l] = parent_counts[l] - left_counts[l];
            const int right_n = n - left_n;
            const double child_h =
                (left_n * entropy_of(left_counts, left_n) +
                 right_n * entropy_of(right_counts, right_n)) /
                n;
            const double gain = parent_h - child_h;
            if (gain > best.gain + 1e-12 ||
                (std::abs(gain - best.gain) <= 1e-12 &&
                 (f < best.feature ||
                  (f == best.feature && threshold < best.threshold)))) {
                if (gain > 1e-12) best = {gain, f, threshold};
            }
        }
    }
    return best;
}

}  // namespace

DTree train_dtree(const std::vector<TrainingSample>& samples,
                  const DTreeHyper& hyper) {
    if (samples.empty())
        throw std::invalid_argument("train_dtree: no training samples");

    DTree tree;
    struct Frontier {
        int node;
        std::vector<int> idx;
        SplitChoice split;
        long order;  // creation order breaks expansion ties
    };
    std::vector<Frontier> frontier;
    long next_order = 0;

    auto make_leaf = [&](const std::vector<int>& idx) {
        std::map<int, int> hist;
        for (int i : idx) ++hist[samples[i].label];
        DTree::Node node;
        node.label = majority_label(hist);
        node.sample_count = static_cast<int>(idx.size());
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size()) - 1;
    };

    std::vector<int> all(samples.size());
    std::iota(all.begin(), all.end(), 0);
    const int root = make_leaf(all);
    if (static_cast<int>(all.size()) >= hyper.min_samples_split) {
        auto split = best_split(samples, all, hyper.mask);
        if (split.feature >= 0)
            frontier.push_back({root, std::move(all), split, next_order++});
    }

    int leaves = 1;
    while (!frontier.empty() && leaves < hyper.max_leaf_nodes) {
        // expand the highest-gain frontier leaf first
        std::size_t pick = 0;
        for (std::size_t i = 1; i < frontier.size(); ++i) {
            const auto& a = frontier[i];
            const auto& b = frontier[pick];
            if (a.split.gain > b.split.gain + 1e-12 ||
                (std::abs(a.split.gain - b.split.gain) <= 1e-12 &&
                 a.order < b.order))
                pick = i;
        }
        Frontier cur = std::move(frontier[pick]);
        frontier.erase(frontier.begin() + pick);

        std::vector<int> left_idx, right_idx;
        for (int i : cur.idx) {
            if (samples[i].features.raw()[cur.split.feature] <=
                cur.split.threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }

        const int left = make_leaf(left_idx);
        const int right = make_leaf(right_idx);
        tree.nodes[cur.node].feature = cur.split.feature;
        tree.nodes[cur.node].threshold = cur.split.threshold;
        tree.nodes[cur.node].left = left;
        tree.nodes[cur.node].right = right;
        ++leaves;  // one leaf became an internal node, two appeared

        for (auto [node, idx] : {std::pair{left, std::move(left_idx)},
                                 std::pair{right, std::move(right_idx)}}) {
            if (static_cast<int>(idx.size()) < hyper.min_samples_split) continue;
            auto split = best_split(samples, idx, hyper.mask);
            if (split.feature >= 0)
                frontier.push_back({node, std::move(idx), split, next_order++});
        }
    }
    return tree;
}

int predict(const DTree& tree, const FeatureVector& f) {
    if (!tree.trained()) throw std::invalid_argument("predict: tree not trained");
    const Eigen::Vector4d x = f.raw();
    int cur = 0;
    while (tree.nodes[cur].feature >= 0) {
        const auto& n = tree.nodes[cur];
        cur = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[cur].label;
}

double cross_validate(const std::vector<TrainingSample>& samples, int folds,
                      std::mt19937_64& rng, const DTreeHyper& hyper) {
    if (folds < 2) throw std::invalid_argument("cross_validate: folds must be >= 2");
    if (static_cast<int>(samples.size()) < folds)
        throw std::invalid_argument("cross_validate: fewer samples than folds");

    // stratified assignment: shuffle within each label, deal round-robin
    std::map<int, std::vector<int>> by_label;
    for (std::size_t i = 0; i < samples.size(); ++i)
        by_label[samples[i].label].push_back(static_cast<int>(i));
    std::vector<int> fold_of(samples.size(), 0);
    int next_fold = 0;
    for (auto& [label, idx] : by_label) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i : idx) {
            fold_of[i] = next_fold;
            next_fold = (next_fold + 1) % folds;
        }
    }

    double accuracy_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<TrainingSample> train;
        std::vector<int> test;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (fold_of[i] == f)
                test.push_back(static_cast<int>(i));
            else
                train.push_back(samples[i]);
        }
        const DTree tree = train_dtree(train, hyper);
        int hits = 0;
        for (int i : test)
            hits += predict(tree, samples[i].features) == samples[i].label;
        accuracy_sum += test.empty() ? 1.0
                                     : static_cast<double>(hits) / test.size();
    }
    return accuracy_sum / folds;
}

nlohmann::json dtree_to_json(const DTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"label", n.label},
                         {"count", n.sample_count}});
    return nlohmann::json{{"nodes", nodes}};
}

DTree dtree_from_json(const nlohmann::json& j) {
    DTree tree;
    for (const auto& n : j.at("nodes")) {
        DTree::Node node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.label = n.at("label").get<int>();
        node.sample_count = n.at("count").get<int>();
        tree.nodes.push_back(node);
    }
    return tree;
}

}  // namespace edgetune
