#include "edgetune/netclass.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edgetune {

const char* const kFeatureNames[kFeatureCount] = {
    "log_bandwidth_kbps", "log_rtt_ms", "loss_rate", "log_complexity"};

namespace {

std::atomic<std::int64_t> g_export_version{0};

Eigen::Vector4d log_scale(const FeatureVector& f) {
    return {std::log(std::max(f.bandwidth_kbps, 1e-9)),
            std::log(std::max(f.rtt_ms, 1e-9)), f.loss_rate,
            std::log(std::max(f.complexity, 1e-9))};
}

}  // namespace

Eigen::Vector4d NCModel::standardize(const FeatureVector& f) const {
    Eigen::Vector4d z =
        (log_scale(f) - mean).cwiseQuotient(stddev);
    for (int d = 0; d < kFeatureCount; ++d)
        if (!mask[d]) z[d] = 0.0;
    return z;
}

namespace {

NCModel fit_once(const std::vector<FeatureVector>& samples, int k,
                 std::mt19937_64& rng, FeatureMask mask, NCFitStats* stats) {
    const int n = static_cast<int>(samples.size());
    if (k < 1) throw std::invalid_argument("fit_netclass: k must be >= 1");
    if (k > n) throw std::invalid_argument("fit_netclass: k exceeds sample count");
    bool any_active = false;
    for (bool m : mask) any_active |= m;
    if (!any_active)
        throw std::invalid_argument("fit_netclass: empty feature mask");

    NCModel model;
    model.k = k;
    model.mask = mask;

    Eigen::MatrixXd raw(n, kFeatureCount);
    for (int i = 0; i < n; ++i) raw.row(i) = log_scale(samples[i]).transpose();
    model.mean = raw.colwise().mean();
    for (int d = 0; d < kFeatureCount; ++d) {
        const double var =
            (raw.col(d).array() - model.mean[d]).square().sum() / n;
        model.stddev[d] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    Eigen::MatrixXd z(n, kFeatureCount);
    for (int i = 0; i < n; ++i)
        z.row(i) = model.standardize(samples[i]).transpose();

    // k-means++ seeding: D^2-weighted picks; degenerate all-zero weights
    // fall back to a uniform pick.
    Eigen::MatrixXd centroids(k, kFeatureCount);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    {
        std::uniform_int_distribution<int> first(0, n - 1);
        centroids.row(0) = z.row(first(rng));
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d2 =
                    (z.row(i) - centroids.row(c - 1)).squaredNorm();
                min_d2[i] = std::min(min_d2[i], d2);
                total += min_d2[i];
            }
            int pick;
            if (total <= 0.0) {
                std::uniform_int_distribution<int> u(0, n - 1);
                pick = u(rng);
            } else {
                std::uniform_real_distribution<double> u(0.0, total);
                double target = u(rng), acc = 0.0;
                pick = n - 1;
                for (int i = 0; i < n; ++i) {
                    acc += min_d2[i];
                    if (acc >= target) {
                        pick = i;
                        break;
                    }
                }
            }
            centroids.row(c) = z.row(pick);
        }
    }

    std::vector<int> assign(n, -1);
    auto assign_all = [&]() {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (z.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        return changed;
    };

    if (stats) {
        stats->iterations = 0;
        stats->wcss_history.clear();
    }
    assign_all();
    for (int iter = 0; iter < 100; ++iter) {
        // update step; empty clusters keep their previous centroid
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, kFeatureCount);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[i]) += z.row(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];

        const bool changed = assign_all();
        if (stats) {
            ++stats->iterations;
            double wcss = 0.0;
            for (int i = 0; i < n; ++i)
                wcss += (z.row(i) - centroids.row(assign[i])).squaredNorm();
            stats->wcss_history.push_back(wcss);
        }
        if (!changed) break;
    }

    model.centroids = centroids;
    return model;
}

}  // namespace

NCModel fit_netclass(const std::vector<FeatureVector>& samples, int k,
                     std::mt19937_64& rng, FeatureMask mask,
                     NCFitStats* stats, int restarts) {
    restarts = std::max(1, restarts);
    NCModel best;
    double best_wcss = std::numeric_limits<double>::infinity();
    NCFitStats best_stats;
    for (int r = 0; r < restarts; ++r) {
        NCFitStats run_stats;
        NCModel m = fit_once(samples, k, rng, mask, &run_stats);
        const double wcss = within_cluster_ss(m, samples);
        if (wcss < best_wcss) {
            best_wcss = wcss;
            best = std::move(m);
            best_stats = std::move(run_stats);
        }
    }
    if (stats) *stats = best_stats;
    return best;
}

int classify(const NCModel& model, const FeatureVector& f) {
    if (model.k < 1) throw std::invalid_argument("classify: model not fit");
    const Eigen::Vector4d z = model.standardize(f);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.k; ++c) {
        const double d = (z.transpose() - model.centroids.row(c)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

int choose_k(const std::vector<FeatureVector>& samples,
             const std::vector<double>& default_plts, double cv_threshold,
             int k_max, std::uint64_t seed, FeatureMask mask) {
    if (samples.size() != default_plts.size())
        throw std::invalid_argument("choose_k: sample/plt length mismatch");
    if (k_max < 2) throw std::invalid_argument("choose_k: k_max must be >= 2");

    const int highest = std::min<int>(k_max, static_cast<int>(samples.size()));
    for (int k = 2; k <= highest; ++k) {
        std::mt19937_64 rng(seed + k);
        const NCModel model = fit_netclass(samples, k, rng, mask);

        std::vector<double> sum(k, 0.0), sum2(k, 0.0);
        std::vector<int> count(k, 0);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const int c = classify(model, samples[i]);
            sum[c] += default_plts[i];
            sum2[c] += default_plts[i] * default_plts[i];
            ++count[c];
        }
        int ok = 0, nonempty = 0;
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) continue;
            ++nonempty;
            const double m = sum[c] / count[c];
            const double var = std::max(0.0, sum2[c] / count[c] - m * m);
            const double cv = m > 0.0 ? std::sqrt(var) / m : 0.0;
            if (cv <= cv_threshold) ++ok;
        }
        if (nonempty > 0 && ok >= 0.9 * nonempty) return k;
    }
    return k_max;
}

nlohmann::json export_rules(const NCModel& model) {
    std::vector<std::vector<double>> centroids(model.k);
    for (int c = 0; c < model.k; ++c)
        for (int d = 0; d < kFeatureCount; ++d)
            centroids[c].push_back(model.centroids(c, d));
    std::vector<std::string> names(kFeatureNames, kFeatureNames + kFeatureCount);
    return nlohmann::json{
        {"version", ++g_export_version},
        {"feature_names", names},
        {"mask", std::vector<bool>(model.mask.begin(), model.mask.end())},
        {"means", std::vector<double>(model.mean.data(), model.mean.data() + 4)},
        {"stds",
         std::vector<double>(model.stddev.data(), model.stddev.data() + 4)},
        {"centroids", centroids}};
}

NCModel import_rules(const nlohmann::json& rules) {
    NCModel model;
    const auto means = rules.at("means").get<std::vector<double>>();
    const auto stds = rules.at("stds").get<std::vector<double>>();
    const auto centroids =
        rules.at("centroids").get<std::vector<std::vector<double>>>();
    if (means.size() != kFeatureCount || stds.size() != kFeatureCount)
        throw std::invalid_argument("import_rules: bad standardization arrays");
    for (int d = 0; d < kFeatureCount; ++d) {
        model.mean[d] = means[d];
        model.stddev[d] = stds[d];
    }
    if (rules.contains("mask")) {
        const auto m = rules.at("mask").get<std::vector<bool>>();
        for (int d = 0; d < kFeatureCount; ++d) model.mask[d] = m[d];
    }
    model.k = static_cast<int>(centroids.size());
    model.centroids.resize(model.k, kFeatureCount);
    for (int c = 0; c < model.k; ++c) {
        if (centroids[c].size() != kFeatureCount)
            throw std::invalid_argument("import_rules: bad centroid width");
        for (int d = 0; d < kFeatureCount; ++d)
            model.centroids(c, d) = centroids[c][d];
    }
    return model;
}

double within_cluster_ss(const NCModel& model,
                         const std::vector<FeatureVector>& samples) {
    double wcss = 0.0;
    for (const auto& f : samples) {
        const Eigen::Vector4d z = model.standardize(f);
        const int c = classify(model, f);
        wcss += (z.transpose() - model.centroids.row(c)).squaredNorm();
    }
    return wcss;
}

}  // namespace edgetune
