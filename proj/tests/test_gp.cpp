#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgetune/gp.hpp"

#include <cmath>
#include <random>

using namespace edgetune;

namespace {

Eigen::MatrixXd encode_rows(const std::vector<int>& ids) {
    Eigen::MatrixXd X(ids.size(), 10);
    for (std::size_t i = 0; i < ids.size(); ++i)
        X.row(i) = encode(Configuration::from_id(ids[i])).transpose();
    return X;
}

}  // namespace

TEST_CASE("single observation shrinks variance at the observed point") {
    Eigen::MatrixXd X = encode_rows({100});
    Eigen::VectorXd y(1);
    y << 6.0;
    GPHyper hyper;
    hyper.signal_variance = 1.0;
    const GPModel m = GPModel::fit(X, y, hyper);

    const auto [mu, sigma] = m.predict(encode(Configuration::from_id(100)));
    CHECK(mu == doctest::Approx(6.0).epsilon(0.05));
    CHECK(sigma * sigma < m.signal_variance() + m.noise_variance());
}

TEST_CASE("duplicated observation rows still factorize") {
    Eigen::MatrixXd X = encode_rows({5, 5, 5});
    Eigen::VectorXd y(3);
    y << 6.0, 6.1, 5.9;
    CHECK_NOTHROW(GPModel::fit(X, y));
}

TEST_CASE("kernel diagonal equals the signal variance and decays with distance") {
    Eigen::MatrixXd X = encode_rows({0, 767});
    Eigen::VectorXd y(2);
    y << 6.0, 7.0;
    GPHyper hyper;
    hyper.signal_variance = 2.0;
    const GPModel m = GPModel::fit(X, y, hyper);

    const Vec10 a = encode(Configuration::from_id(0));
    const Vec10 b = encode(Configuration::from_id(1));    // near a
    const Vec10 c = encode(Configuration::from_id(767));  // far from a
    CHECK(m.kernel(a, a) == doctest::Approx(2.0));
    CHECK(m.kernel(a, b) < m.kernel(a, a));
    CHECK(m.kernel(a, c) < m.kernel(a, b));
}

TEST_CASE("far from all data the posterior reverts to the prior") {
    Eigen::MatrixXd X = encode_rows({0, 1, 2, 3});
    Eigen::VectorXd y(4);
    y << 6.0, 6.2, 5.9, 6.1;
    GPHyper hyper;
    hyper.lengthscale = 0.08;  // shorten so id 767 is effectively far
    const GPModel m = GPModel::fit(X, y, hyper);

    const auto [mu, sigma] = m.predict(encode(Configuration::from_id(767)));
    CHECK(mu == doctest::Approx(m.prior_mean()).epsilon(0.01));
    const double prior_var = m.signal_variance() + m.noise_variance();
    CHECK(sigma * sigma == doctest::Approx(prior_var).epsilon(0.01));
}

TEST_CASE("training points are reproduced within the noise band") {
    std::mt19937_64 rng(3);
    std::vector<int> ids{10, 200, 400, 600, 750};
    Eigen::MatrixXd X = encode_rows(ids);
    Eigen::VectorXd y(5);
    y << 5.8, 6.4, 6.0, 7.1, 6.6;
    const GPModel m = GPModel::fit(X, y);
    for (int i = 0; i < 5; ++i) {
        const auto [mu, sigma] =
            m.predict(encode(Configuration::from_id(ids[i])));
        CHECK(std::abs(mu - y[i]) <= 3.0 * std::sqrt(m.noise_variance()));
    }
}

TEST_CASE("prediction is deterministic") {
    Eigen::MatrixXd X = encode_rows({10, 200, 400});
    Eigen::VectorXd y(3);
    y << 5.8, 6.4, 6.0;
    const GPModel m = GPModel::fit(X, y);
    const Vec10 x = encode(Configuration::from_id(300));
    const auto a = m.predict(x);
    const auto b = m.predict(x);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("expected improvement degenerate cases") {
    // sigma = 0 path goes through the closed-form max(0, gap)
    Eigen::MatrixXd X = encode_rows({100});
    Eigen::VectorXd y(1);
    y << 6.0;
    GPHyper hyper;
    hyper.signal_variance = 1.0;
    hyper.noise_ratio = 0.0;  // noiseless: sigma at the data point is ~0
    const GPModel m = GPModel::fit(X, y, hyper);
    const Vec10 at_data = encode(Configuration::from_id(100));
    // mu == y_best and xi > 0, so no improvement is possible
    CHECK(expected_improvement(m, at_data, 6.0, 0.1) ==
          doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("expected improvement at z=0 equals sigma times phi(0)") {
    Eigen::MatrixXd X = encode_rows({0});
    Eigen::VectorXd y(1);
    y << 6.0;
    GPHyper hyper;
    hyper.lengthscale = 0.08;
    hyper.signal_variance = 1.0;
    const GPModel m = GPModel::fit(X, y, hyper);
    const Vec10 far = encode(Configuration::from_id(767));
    const auto [mu, sigma] = m.predict(far);
    // choose y_best and xi so the gap vanishes: z = 0
    const double xi = 0.25;
    const double y_best = mu + xi;
    CHECK(expected_improvement(m, far, y_best, xi) ==
          doctest::Approx(sigma * 0.3989422804014327).epsilon(1e-9));
}

TEST_CASE("closed-form EI matches a monte-carlo oracle on 100 posteriors") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pick(0, 767);
    std::uniform_real_distribution<double> target(5.0, 8.0);
    std::uniform_real_distribution<double> best_offset(-1.0, 1.0);
    std::uniform_real_distribution<double> xi_pick(0.0, 0.2);

    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> ids;
        Eigen::VectorXd y(6);
        for (int i = 0; i < 6; ++i) {
            int id = pick(rng);
            while (std::find(ids.begin(), ids.end(), id) != ids.end())
                id = pick(rng);
            ids.push_back(id);
            y[i] = target(rng);
        }
        const GPModel m = GPModel::fit(encode_rows(ids), y);
        const Vec10 x = encode(Configuration::from_id(pick(rng)));
        const auto [mu, sigma] = m.predict(x);
        const double y_best = y.minCoeff() + best_offset(rng) * 0.3;
        const double xi = xi_pick(rng);

        const double closed = expected_improvement(m, x, y_best, xi);

        double sum = 0.0;
        const int draws = 1000000;
        std::normal_distribution<double> posterior(mu, sigma);
        for (int d = 0; d < draws; ++d)
            sum += std::max(0.0, y_best - xi - posterior(rng));
        const double mc = sum / draws;
        CHECK(std::abs(closed - mc) <= 1e-2);
    }
}

TEST_CASE("EI is non-negative everywhere") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick(0, 767);
    Eigen::VectorXd y(5);
    y << 6.0, 5.5, 7.0, 6.2, 5.9;
    const GPModel m = GPModel::fit(encode_rows({1, 50, 300, 500, 700}), y);
    for (int i = 0; i < 500; ++i) {
        const Vec10 x = encode(Configuration::from_id(pick(rng)));
        CHECK(expected_improvement(m, x, 5.5) >= 0.0);
    }
}

TEST_CASE("suggest_next returns the single candidate and is deterministic") {
    GPExploreState state;
    Eigen::VectorXd y(2);
    y << 6.0, 6.5;
    state.model = GPModel::fit(encode_rows({0, 100}), y);

    const std::vector<Configuration> one{Configuration::from_id(400)};
    auto [c, ei] = suggest_next(state, one);
    CHECK(c.id() == 400);

    const auto all = ConfigSpace::full().enumerate();
    auto [c1, e1] = suggest_next(state, all);
    auto [c2, e2] = suggest_next(state, all);
    CHECK(c1.id() == c2.id());
    CHECK(e1 == e2);

    CHECK_THROWS_WITH(suggest_next(state, {}), "space exhausted");
}

TEST_CASE("a distant candidate out-scores a near-duplicate of the best point") {
    // three observations; candidate A equals the best observed point,
    // candidate B lies far away with near-prior variance
    Eigen::VectorXd y(3);
    y << 6.0, 6.3, 6.4;
    GPHyper hyper;
    hyper.lengthscale = 0.08;
    GPExploreState state;
    state.model = GPModel::fit(encode_rows({0, 2, 4}), y, hyper);

    const double ei_near =
        expected_improvement(*state.model, encode(Configuration::from_id(1)),
                             6.0);
    const double ei_far =
        expected_improvement(*state.model, encode(Configuration::from_id(767)),
                             6.0);
    CHECK(ei_far >= ei_near);
}

TEST_CASE("stop rule follows the tested count and the EI gate") {
    GPExploreState state;
    state.min_sample_tested = 7;
    state.ei_rel_threshold = 0.05;

    for (int id = 0; id < 6; ++id) state.tested_config_ids.insert(id);
    state.last_max_ei = 0.0;
    CHECK_FALSE(should_stop(state));  // tested = 6 < 7 regardless of EI

    state.tested_config_ids.insert(6);
    state.last_max_ei = 0.04;
    CHECK(should_stop(state));  // tested = 7, ratio 0.04 < 0.05

    for (int id = 7; id < 20; ++id) state.tested_config_ids.insert(id);
    state.last_max_ei = 0.5;
    CHECK_FALSE(should_stop(state));  // high EI keeps exploring
}

TEST_CASE("posterior variance never rises as observations accumulate") {
    GPHyper hyper;
    hyper.signal_variance = 1.0;  // fixed so refits share the prior
    std::vector<int> ids{0, 100, 200, 300, 400, 500, 600};
    Eigen::VectorXd y(7);
    y << 6.0, 6.2, 5.9, 6.4, 6.1, 6.3, 6.0;

    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> pick(0, 767);
    std::vector<Vec10> probes;
    for (int i = 0; i < 32; ++i)
        probes.push_back(encode(Configuration::from_id(pick(rng))));

    std::vector<double> last(probes.size(),
                             std::numeric_limits<double>::infinity());
    for (int n = 1; n <= 7; ++n) {
        const GPModel m =
            GPModel::fit(encode_rows({ids.begin(), ids.begin() + n}),
                         y.head(n), hyper);
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const double var = std::pow(m.predict(probes[p]).second, 2);
            CHECK(var <= last[p] + 1e-9);
            last[p] = var;
        }
    }
}

TEST_CASE("irrecoverable factorization failures throw after escalation") {
    Eigen::MatrixXd X = encode_rows({1, 2});
    X(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd y(2);
    y << 6.0, 6.5;
    CHECK_THROWS(GPModel::fit(X, y));
}
