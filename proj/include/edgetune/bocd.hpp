#pragma once

#include <Eigen/Core>
#include <vector>

namespace edgetune {

/// Bayesian online changepoint detection over a scalar series: constant
/// hazard 1/lambda, Gaussian observations under a normal-inverse-gamma
/// prior (Student-t predictive). A changepoint is committed when the
/// maximum-a-posteriori run length collapses below 2 after having
/// exceeded 4.
struct BocdResult {
    std::vector<int> changepoints;     // strictly increasing indices
    std::vector<int> map_run_lengths;  // per step
    std::vector<double> row_sums;      // posterior mass per step (~1)
};

BocdResult bocd_run(const std::vector<double>& series, double hazard_lambda,
                    double prior_mean, double prior_var_scale);

/// Committed changepoint indices only.
std::vector<int> detect_changepoints(const std::vector<double>& series,
                                     double hazard_lambda, double prior_mean,
                                     double prior_var_scale);

}  // namespace edgetune
