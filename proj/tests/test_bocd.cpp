#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgetune/bocd.hpp"

#include <cmath>
#include <random>

using namespace edgetune;

namespace {

std::vector<double> step_series(int pre, int post, double mu1, double mu2,
                                double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> out;
    out.reserve(pre + post);
    for (int i = 0; i < pre; ++i)
        out.push_back(mu1 + (sigma > 0 ? noise(rng) : 0.0));
    for (int i = 0; i < post; ++i)
        out.push_back(mu2 + (sigma > 0 ? noise(rng) : 0.0));
    return out;
}

}  // namespace

TEST_CASE("a clean level shift commits exactly one changepoint near it") {
    std::mt19937_64 rng(1);
    const auto series = step_series(60, 60, 10.0, 100.0, 0.0, rng);
    const auto cps = detect_changepoints(series, 250.0, 10.0, 1.0);
    REQUIRE(cps.size() == 1);
    CHECK(cps[0] >= 57);
    CHECK(cps[0] <= 63);
}

TEST_CASE("constant series commits nothing") {
    const std::vector<double> series(100, 42.0);
    CHECK(detect_changepoints(series, 250.0, 42.0, 1.0).empty());
}

TEST_CASE("run-length posterior rows stay normalized") {
    std::mt19937_64 rng(2);
    const auto series = step_series(80, 80, 5.0, 9.0, 1.0, rng);
    const auto result = bocd_run(series, 250.0, 5.0, 1.0);
    REQUIRE(result.row_sums.size() == series.size());
    for (double s : result.row_sums) CHECK(std::abs(s - 1.0) <= 1e-9);
}

TEST_CASE("changepoint indices are strictly increasing") {
    std::mt19937_64 rng(3);
    std::vector<double> series = step_series(60, 60, 10.0, 18.0, 1.0, rng);
    const auto more = step_series(60, 60, 18.0, 10.0, 1.0, rng);
    series.insert(series.end(), more.begin(), more.end());
    const auto cps = detect_changepoints(series, 250.0, 10.0, 1.0);
    for (std::size_t i = 1; i < cps.size(); ++i) CHECK(cps[i] > cps[i - 1]);
}

TEST_CASE("snr-4 shifts are caught within three samples at least 90% of the time") {
    int detected = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng(1000 + t);
        const auto series = step_series(60, 60, 10.0, 14.0, 1.0, rng);
        const auto cps = detect_changepoints(series, 250.0, 10.0, 1.0);
        for (int cp : cps)
            if (std::abs(cp - 60) <= 3) {
                ++detected;
                break;
            }
    }
    CHECK(detected >= 45);
}

TEST_CASE("false-positive rate on shift-free noise stays at or below 10%") {
    int false_positives = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng(5000 + t);
        const auto series = step_series(120, 0, 10.0, 10.0, 1.0, rng);
        if (!detect_changepoints(series, 250.0, 10.0, 1.0).empty())
            ++false_positives;
    }
    CHECK(false_positives <= 10);
}

TEST_CASE("input validation") {
    CHECK_THROWS(detect_changepoints({1.0}, 250.0, 0.0, 1.0));
    CHECK_THROWS(detect_changepoints({1.0, 2.0}, 1.0, 0.0, 1.0));
    CHECK_THROWS(detect_changepoints({1.0, 2.0}, 250.0, 0.0, 0.0));
}
