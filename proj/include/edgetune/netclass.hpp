#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace edgetune {

constexpr int kFeatureCount = 4;
extern const char* const kFeatureNames[kFeatureCount];

using FeatureMask = std::array<bool, kFeatureCount>;
constexpr FeatureMask kAllFeatures = {true, true, true, true};

/// Client-side estimates plus a website-complexity scalar
/// (object_count * avg_object_bytes). Raw values; the model log-scales
/// bandwidth, rtt and complexity before z-scoring.
struct FeatureVector {
    double bandwidth_kbps = 0.0;
    double rtt_ms = 0.0;
    double loss_rate = 0.0;
    double complexity = 1.0;

    Eigen::Vector4d raw() const {
        return {bandwidth_kbps, rtt_ms, loss_rate, complexity};
    }
};

/// Standardized k-means model over the (possibly masked) feature space.
struct NCModel {
    int k = 0;
    FeatureMask mask = kAllFeatures;
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();  // of log-scaled features
    Eigen::Vector4d stddev = Eigen::Vector4d::Ones();
    Eigen::MatrixXd centroids;  // k x 4, standardized, masked dims zero

    /// Log-scale + z-score + zero masked dims.
    Eigen::Vector4d standardize(const FeatureVector& f) const;
};

struct NCFitStats {
    int iterations = 0;
    std::vector<double> wcss_history;  // after each Lloyd iteration
};

/// Lloyd's algorithm with k-means++ seeding on standardized features,
/// keeping the lowest within-cluster sum of squares over `restarts`
/// seedings. Deterministic per rng state; each restart converges to an
/// assignment fixpoint or stops after 100 iterations.
NCModel fit_netclass(const std::vector<FeatureVector>& samples, int k,
                     std::mt19937_64& rng, FeatureMask mask = kAllFeatures,
                     NCFitStats* stats = nullptr, int restarts = 10);

/// Smallest k in [2, k_max] whose clustering leaves >= 90% of clusters
/// with a default-PLT coefficient of variation <= cv_threshold; k_max if
/// none qualifies.
int choose_k(const std::vector<FeatureVector>& samples,
             const std::vector<double>& default_plts, double cv_threshold,
             int k_max, std::uint64_t seed = 0,
             FeatureMask mask = kAllFeatures);

/// Nearest standardized centroid, ties to the lowest class id.
int classify(const NCModel& model, const FeatureVector& f);

/// Serializable rule payload: {version, feature_names, means, stds,
/// centroids}. Versions from consecutive exports strictly increase.
nlohmann::json export_rules(const NCModel& model);
NCModel import_rules(const nlohmann::json& rules);

double within_cluster_ss(const NCModel& model,
                         const std::vector<FeatureVector>& samples);

}  // namespace edgetune
