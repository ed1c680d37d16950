#include "edgetune/bocd.hpp"

#include <cmath>
#include <stdexcept>

namespace edgetune {

namespace {

// log pdf of the Student-t predictive with df = 2*alpha, location mu and
// squared scale s2.
double log_student_t(double x, double mu, double s2, double alpha) {
    const double df = 2.0 * alpha;
    const double z2 = (x - mu) * (x - mu) / s2;
    return std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
           0.5 * std::log(df * M_PI * s2) -
           (df + 1.0) / 2.0 * std::log1p(z2 / df);
}

}  // namespace

BocdResult bocd_run(const std::vector<double>& series, double hazard_lambda,
                    double prior_mean, double prior_var_scale) {
    if (series.size() < 2)
        throw std::invalid_argument("bocd: series length must be >= 2");
    if (hazard_lambda <= 1.0)
        throw std::invalid_argument("bocd: hazard_lambda must be > 1");
    if (prior_var_scale <= 0.0)
        throw std::invalid_argument("bocd: prior variance scale must be > 0");

    const double hazard = 1.0 / hazard_lambda;
    const int n = static_cast<int>(series.size());

    // Sufficient statistics per run length, kappa0 = alpha0 = 1.
    const double mu0 = prior_mean, kappa0 = 1.0, alpha0 = 1.0;
    const double beta0 = prior_var_scale;
    std::vector<double> mu{mu0}, kappa{kappa0}, alpha{alpha0}, beta{beta0};
    std::vector<double> r{1.0};  // run-length posterior, r[j] = P(run = j)

    BocdResult result;
    result.map_run_lengths.reserve(n);
    result.row_sums.reserve(n);

    bool armed = false;  // MAP run length has exceeded 4 since last commit
    int prev_map = 0;
    for (int t = 0; t < n; ++t) {
        const double x = series[t];
        const int m = static_cast<int>(r.size());

        // Predictive under each run-length hypothesis, scaled by the max
        // log density so the normalization below stays finite.
        std::vector<double> logpred(m);
        double maxlp = -1e300;
        for (int j = 0; j < m; ++j) {
            const double s2 = beta[j] * (kappa[j] + 1.0) / (alpha[j] * kappa[j]);
            logpred[j] = log_student_t(x, mu[j], s2, alpha[j]);
            maxlp = std::max(maxlp, logpred[j]);
        }

        std::vector<double> next(m + 1, 0.0);
        for (int j = 0; j < m; ++j) {
            const double w = r[j] * std::exp(logpred[j] - maxlp);
            next[j + 1] += w * (1.0 - hazard);
            next[0] += w * hazard;
        }
        double total = 0.0;
        for (double v : next) total += v;
        for (double& v : next) v /= total;
        r = std::move(next);

        // Posterior parameter update; run length j+1 absorbs x into the
        // stats of run length j, run length 0 restarts from the prior.
        std::vector<double> mu2(m + 1), kappa2(m + 1), alpha2(m + 1), beta2(m + 1);
        mu2[0] = mu0;
        kappa2[0] = kappa0;
        alpha2[0] = alpha0;
        beta2[0] = beta0;
        for (int j = 0; j < m; ++j) {
            mu2[j + 1] = (kappa[j] * mu[j] + x) / (kappa[j] + 1.0);
            kappa2[j + 1] = kappa[j] + 1.0;
            alpha2[j + 1] = alpha[j] + 0.5;
            beta2[j + 1] = beta[j] + kappa[j] * (x - mu[j]) * (x - mu[j]) /
                                         (2.0 * (kappa[j] + 1.0));
        }
        mu = std::move(mu2);
        kappa = std::move(kappa2);
        alpha = std::move(alpha2);
        beta = std::move(beta2);

        double row_sum = 0.0;
        int map_run = 0;
        double best = -1.0;
        for (int j = 0; j < static_cast<int>(r.size()); ++j) {
            row_sum += r[j];
            if (r[j] > best) {
                best = r[j];
                map_run = j;
            }
        }
        result.row_sums.push_back(row_sum);
        result.map_run_lengths.push_back(map_run);

        // Commit when the MAP run collapses: either to a fresh run, or by
        // a large jump downward (the restart hypothesis can win a sample
        // or two late, landing at run length 2 or 3).
        if (map_run > 4) armed = true;
        if (armed && (map_run < 2 || map_run + 4 < prev_map)) {
            result.changepoints.push_back(t);
            armed = false;
        }
        prev_map = map_run;
    }
    return result;
}

std::vector<int> detect_changepoints(const std::vector<double>& series,
                                     double hazard_lambda, double prior_mean,
                                     double prior_var_scale) {
    return bocd_run(series, hazard_lambda, prior_mean, prior_var_scale)
        .changepoints;
}

}  // namespace edgetune
