#pragma once

#include "edgetune/config_space.hpp"

#include <Eigen/Dense>

#include <optional>
#include <set>
#include <vector>

namespace edgetune {

/// Fixed-hyperparameter squared-exponential GP over encoded
/// configurations. Targets live on the log-PLT scale. The signal
/// variance shrinks a prior spread belief toward the robust (MAD-based)
/// spread of the observations:
///   signal = (prior_weight * prior_scale^2 + n * mad^2) / (prior_weight + n)
/// so a handful of clumped samples cannot collapse the exploration scale,
/// while genuinely flat landscapes still drive it down. No
/// marginal-likelihood fitting.
struct GPHyper {
    double lengthscale = 0.5;
    std::optional<double> signal_variance;  // overrides the shrinkage rule
    double noise_ratio = 0.05;              // noise = ratio * signal
    double prior_scale = 0.25;              // ~25% relative PLT spread
    double prior_weight = 8.0;              // pseudo-observations
};

class GPModel {
  public:
    /// Fits on inputs in [0,1]^10 and (log-space) targets. Cholesky of
    /// K + noise*I with jitter 1e-8*I escalated x10 up to 1e-2 on
    /// numerical failure; throws beyond that.
    static GPModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const GPHyper& hyper = {});

    /// Posterior predictive mean and stddev (includes observation noise).
    std::pair<double, double> predict(const Vec10& x) const;

    double kernel(const Vec10& a, const Vec10& b) const;
    double prior_mean() const { return y_mean_; }
    double signal_variance() const { return signal_var_; }
    double noise_variance() const { return noise_var_; }
    double y_best() const { return y_best_; }
    int observation_count() const { return static_cast<int>(X_.rows()); }

  private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd alpha_;  // (K + noise I)^-1 (y - mean)
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double lengthscale_ = 0.5;
    double signal_var_ = 1.0;
    double noise_var_ = 0.05;
    double y_mean_ = 0.0;
    double y_best_ = 0.0;
};

/// Expected improvement for minimization:
///   z  = (y_best - mu - xi) / sigma
///   EI = (y_best - mu - xi) Phi(z) + sigma phi(z),
/// and max(0, y_best - mu - xi) when sigma is zero. xi < 0 requests the
/// default jitter of 0.01 (1% relative improvement on the log scale).
double expected_improvement(const GPModel& model, const Vec10& x, double y_best,
                            double xi = -1.0);

/// Per-class exploration state with the ensemble's thresholds.
struct GPExploreState {
    std::optional<GPModel> model;
    std::set<int> tested_config_ids;
    int init_sample = 4;
    int min_sample_tested = 7;
    double ei_rel_threshold = 0.05;
    double last_max_ei = std::numeric_limits<double>::infinity();

    int tested_count() const { return static_cast<int>(tested_config_ids.size()); }
};

/// Argmax of EI over the candidate list, ties to the lowest config id.
/// Updates state.last_max_ei. Throws "space exhausted" on an empty list.
std::pair<Configuration, double> suggest_next(
    GPExploreState& state, const std::vector<Configuration>& candidates);

/// True once at least min_sample_tested configurations are tested and the
/// best candidate EI (log-space, which reads as expected relative PLT
/// improvement) has dropped below ei_rel_threshold.
bool should_stop(const GPExploreState& state);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace edgetune
