#pragma once

#include "edgetune/netclass.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace edgetune {

struct TrainingSample {
    FeatureVector features;
    int label = 0;  // configuration id in [0, 767]
};

struct DTreeHyper {
    int min_samples_split = 2;
    int max_leaf_nodes = 80;
    FeatureMask mask = kAllFeatures;
};

/// Binary CART classifier grown best-first by information gain (entropy
/// criterion). Ties break on the lower feature index, then the lower
/// threshold; expansion order ties break on node creation order. Depth is
/// unbounded.
struct DTree {
    struct Node {
        int feature = -1;       // -1: leaf
        double threshold = 0.0;  // feature value <= threshold goes left
        int left = -1, right = -1;
        int label = 0;
        int sample_count = 0;
    };
    std::vector<Node> nodes;  // nodes[0] is the root, empty if untrained

    bool trained() const { return !nodes.empty(); }
    int leaf_count() const;
};

/// Shannon entropy in bits of a label histogram.
double entropy(const std::map<int, int>& label_counts);

DTree train_dtree(const std::vector<TrainingSample>& samples,
                  const DTreeHyper& hyper = {});

int predict(const DTree& tree, const FeatureVector& f);

/// Mean held-out exact-label accuracy over stratified folds.
double cross_validate(const std::vector<TrainingSample>& samples, int folds,
                      std::mt19937_64& rng, const DTreeHyper& hyper = {});

nlohmann::json dtree_to_json(const DTree& tree);
DTree dtree_from_json(const nlohmann::json& j);

}  // namespace edgetune
