#include "edgetune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace edgetune {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double GPModel::kernel(const Vec10& a, const Vec10& b) const {
    const double d2 = (a - b).squaredNorm();
    return signal_var_ * std::exp(-d2 / (2.0 * lengthscale_ * lengthscale_));
}

GPModel GPModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GPHyper& hyper) {
    if (X.rows() < 1 || X.rows() != y.size())
        throw std::invalid_argument("gp fit: bad observation shape");

    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("gp fit: non-finite observation");

    GPModel m;
    m.X_ = X;
    m.lengthscale_ = hyper.lengthscale;
    m.y_mean_ = y.mean();
    m.y_best_ = y.minCoeff();

    if (hyper.signal_variance) {
        m.signal_var_ = *hyper.signal_variance;
    } else {
        // robust data spread: PLT landscapes carry protocol cliffs and
        // spike noise, and a plain variance inflated by those outliers
        // keeps the EI floor above the stop threshold indefinitely
        const int n = static_cast<int>(y.size());
        double mad_var = 0.0;
        if (n >= 2) {
            std::vector<double> v(y.data(), y.data() + n);
            std::nth_element(v.begin(), v.begin() + n / 2, v.end());
            const double med = v[n / 2];
            for (double& x : v) x = std::abs(x - med);
            std::nth_element(v.begin(), v.begin() + n / 2, v.end());
            const double mad_sigma = 1.4826 * v[n / 2];
            mad_var = mad_sigma * mad_sigma;
        }
        const double prior_var = hyper.prior_scale * hyper.prior_scale;
        m.signal_var_ = std::max(
            (hyper.prior_weight * prior_var + n * mad_var) /
                (hyper.prior_weight + n),
            1e-4);
    }
    m.noise_var_ = hyper.noise_ratio * m.signal_var_;

    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = m.kernel(X.row(i), X.row(j));
            K(i, j) = v;
            K(j, i) = v;
        }

    for (double jitter = 1e-8;; jitter *= 10.0) {
        Eigen::MatrixXd Kn =
            K + (m.noise_var_ + jitter) * Eigen::MatrixXd::Identity(n, n);
        m.llt_.compute(Kn);
        if (m.llt_.info() == Eigen::Success) break;
        if (jitter > 1e-2)
            throw std::runtime_error("gp fit: kernel matrix not positive definite");
    }
    m.alpha_ = m.llt_.solve((y.array() - m.y_mean_).matrix().eval());
    return m;
}

std::pair<double, double> GPModel::predict(const Vec10& x) const {
    const int n = static_cast<int>(X_.rows());
    Eigen::VectorXd k_star(n);
    for (int i = 0; i < n; ++i) k_star[i] = kernel(x, X_.row(i));
    const double mu = y_mean_ + k_star.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k_star);
    const double var =
        std::max(0.0, kernel(x, x) - v.squaredNorm() + noise_var_);
    return {mu, std::sqrt(var)};
}

double expected_improvement(const GPModel& model, const Vec10& x, double y_best,
                            double xi) {
    if (xi < 0.0) xi = 0.01;  // log-scale default: 1% relative improvement
    const auto [mu, sigma] = model.predict(x);
    const double gap = y_best - mu - xi;
    if (sigma <= 0.0) return std::max(0.0, gap);
    const double z = gap / sigma;
    return std::max(0.0, gap * normal_cdf(z) + sigma * normal_pdf(z));
}

std::pair<Configuration, double> suggest_next(
    GPExploreState& state, const std::vector<Configuration>& candidates) {
    if (candidates.empty()) throw std::runtime_error("space exhausted");
    if (!state.model) throw std::runtime_error("suggest_next: no fitted model");

    const double y_best = state.model->y_best();
    double best_ei = -1.0;
    int best_id = 0;
    const Configuration* best = nullptr;
    for (const auto& c : candidates) {
        const double ei = expected_improvement(*state.model, encode(c), y_best);
        const int id = c.id();
        if (ei > best_ei || (ei == best_ei && id < best_id)) {
            best_ei = ei;
            best_id = id;
            best = &c;
        }
    }
    state.last_max_ei = best_ei;
    return {*best, best_ei};
}

bool should_stop(const GPExploreState& state) {
    // Log-space EI approximates expected relative PLT improvement, so the
    // 5% gate compares it to the threshold directly.
    return state.tested_count() >= state.min_sample_tested &&
           state.last_max_ei < state.ei_rel_threshold;
}

}  // namespace edgetune
