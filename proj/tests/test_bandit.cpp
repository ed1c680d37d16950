#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgetune/bandit.hpp"
#include "edgetune/plt_oracle.hpp"

#include <cmath>
#include <set>

using namespace edgetune;

namespace {

FeatureVector probe_features(double bw = 5000, double rtt = 100,
                             double loss = 0.01, double cx = 1e6) {
    return FeatureVector{bw, rtt, loss, cx};
}

PerformanceSample feedback_for(int class_id, const Configuration& c,
                               double plt, std::int64_t ts = 0,
                               const char* tag = arm::kLhc) {
    PerformanceSample s;
    s.client_id = "c0";
    s.class_id = class_id;
    s.features = probe_features();
    s.website_id = "w";
    s.config_id = c.id();
    s.plt_ms = plt;
    s.ts_ms = ts;
    s.arm = tag;
    return s;
}

EnsembleParams quiet_params(std::uint64_t seed = 1) {
    EnsembleParams p;
    p.epsilon = 0.0;
    p.seed = seed;
    return p;
}

// feed the controller a decision/feedback loop against a deterministic
// objective; returns the sequence of (config id, arm) decisions
std::vector<std::pair<int, std::string>> drive(
    BanditController& bandit, int class_id, int rounds,
    const std::function<double(const Configuration&)>& objective) {
    std::vector<std::pair<int, std::string>> decisions;
    for (int i = 0; i < rounds; ++i) {
        auto [config, tag] = bandit.on_session(class_id, probe_features());
        decisions.emplace_back(config.id(), tag);
        bandit.on_feedback(
            feedback_for(class_id, config, objective(config), i, tag.c_str()));
    }
    return decisions;
}

}  // namespace

TEST_CASE("a fresh class with no tree bootstraps with the LHC quartet") {
    BanditController bandit(ConfigSpace::full(), quiet_params());
    std::set<int> ids;
    for (int i = 0; i < 4; ++i) {
        auto [config, tag] = bandit.on_session(7, probe_features());
        CHECK(tag == arm::kLhc);
        ids.insert(config.id());
        bandit.on_feedback(feedback_for(7, config, 400.0 + i, i));
    }
    CHECK(ids.size() == 4);  // distinct latin-hypercube picks
    auto [c5, tag5] = bandit.on_session(7, probe_features());
    CHECK(tag5 == arm::kGp);  // exploration takes over after the quartet
}

TEST_CASE("epsilon = 1 makes every decision a uniform resample") {
    EnsembleParams p = quiet_params();
    p.epsilon = 1.0;
    BanditController bandit(ConfigSpace::full(), p);
    std::set<int> seen;
    for (int i = 0; i < 300; ++i) {
        auto [config, tag] = bandit.on_session(1, probe_features());
        CHECK(tag == arm::kEpsilon);
        seen.insert(config.id());
    }
    CHECK(seen.size() > 100);  // spread over the space, not a fixed point
}

TEST_CASE("steady phase with a trained tree predicts deterministically") {
    BanditController bandit(ConfigSpace::full(), quiet_params(3));
    auto objective = [](const Configuration& c) {
        return 300.0 + (c.id() % 97);
    };
    drive(bandit, 1, 40, objective);
    bandit.update_models(kAllFeatures);
    REQUIRE(bandit.tree().trained());

    auto [c1, t1] = bandit.on_session(1, probe_features());
    auto [c2, t2] = bandit.on_session(1, probe_features());
    CHECK(t1 == arm::kDtree);
    CHECK(t2 == arm::kDtree);
    CHECK(c1.id() == c2.id());
}

TEST_CASE("feedback maintains the incumbent by mean PLT") {
    BanditController bandit(ConfigSpace::full(), quiet_params(5));
    bandit.on_session(2, probe_features());  // create the class

    const Configuration a = Configuration::from_id(100);
    const Configuration b = Configuration::from_id(200);
    bandit.on_feedback(feedback_for(2, a, 400.0));
    CHECK(bandit.find_class(2)->best_config_id == 100);

    bandit.on_feedback(feedback_for(2, b, 300.0));
    CHECK(bandit.find_class(2)->best_config_id == 200);
}

TEST_CASE("steady-state incumbents only switch past the 10% margin") {
    BanditController bandit(ConfigSpace::full(), quiet_params(7));
    bandit.on_session(3, probe_features());
    ClassState& cs = bandit.state(3);

    bandit.on_feedback(feedback_for(3, Configuration::from_id(10), 400.0));
    cs.phase = BanditPhase::Steady;

    // challenger at a 380 mean over two samples: better, but within the
    // 10% hysteresis band
    bandit.on_feedback(feedback_for(3, Configuration::from_id(20), 380.0));
    bandit.on_feedback(feedback_for(3, Configuration::from_id(20), 380.0));
    CHECK(bandit.find_class(3)->best_config_id == 10);

    // a single lucky observation cannot take incumbency
    bandit.on_feedback(feedback_for(3, Configuration::from_id(30), 350.0));
    CHECK(bandit.find_class(3)->best_config_id == 10);

    // but a challenger accumulating a 350 mean clears 0.9 * 400
    bandit.on_feedback(feedback_for(3, Configuration::from_id(30), 350.0));
    CHECK(bandit.find_class(3)->best_config_id == 30);
}

TEST_CASE("update_models trains a tree labeled by class incumbents") {
    BanditController bandit(ConfigSpace::full(), quiet_params(9));
    CHECK_THROWS(bandit.update_models(kAllFeatures));  // no data yet

    // class 0: fast clients, best config 50; class 1: slow, best 700
    for (int i = 0; i < 20; ++i) {
        PerformanceSample s =
            feedback_for(0, Configuration::from_id(50), 200.0 + i);
        s.features = probe_features(50000, 20, 0.0, 2e5);
        bandit.on_feedback(s);
        PerformanceSample t =
            feedback_for(1, Configuration::from_id(700), 900.0 + i);
        t.features = probe_features(600, 300, 0.1, 5e6);
        bandit.on_feedback(t);
    }
    const auto update = bandit.update_models(kAllFeatures);
    CHECK(update.training_samples == 40);
    CHECK(update.class_decisions.at(0).id() == 50);
    CHECK(update.class_decisions.at(1).id() == 700);
    CHECK(predict(update.tree, probe_features(50000, 20, 0.0, 2e5)) == 50);
    CHECK(predict(update.tree, probe_features(600, 300, 0.1, 5e6)) == 700);

    // one-class tree predicts that class's best everywhere
    BanditController solo(ConfigSpace::full(), quiet_params(10));
    for (int i = 0; i < 5; ++i)
        solo.on_feedback(feedback_for(4, Configuration::from_id(123), 300.0));
    const auto solo_update = solo.update_models(kAllFeatures);
    CHECK(predict(solo_update.tree, probe_features(1, 1, 0, 1)) == 123);
    CHECK(predict(solo_update.tree, probe_features(1e6, 500, 0.4, 1e9)) == 123);
}

TEST_CASE("a trained tree seeds the first bootstrap slot of new classes") {
    BanditController bandit(ConfigSpace::full(), quiet_params(11));
    for (int i = 0; i < 8; ++i)
        bandit.on_feedback(feedback_for(0, Configuration::from_id(321), 250.0));
    bandit.update_models(kAllFeatures);

    // class 5 is created after the tree exists: slot 1 is the prediction
    auto [c1, t1] = bandit.on_session(5, probe_features());
    CHECK(t1 == arm::kDtree);
    CHECK(c1.id() == 321);
    auto [c2, t2] = bandit.on_session(5, probe_features());
    CHECK(t2 == arm::kLhc);

    // classes created before any tree never use the seeded slot
    BanditController fresh(ConfigSpace::full(), quiet_params(12));
    auto [c3, t3] = fresh.on_session(0, probe_features());
    CHECK(t3 == arm::kLhc);
}

TEST_CASE("nogp skips guided exploration, nodt ignores the tree") {
    EnsembleParams nogp = quiet_params(13);
    nogp.no_gp = true;
    BanditController bandit(ConfigSpace::full(), nogp);
    auto objective = [](const Configuration& c) { return 300.0 + c.id(); };
    const auto decisions = drive(bandit, 1, 8, objective);
    for (int i = 0; i < 4; ++i) CHECK(decisions[i].second == arm::kLhc);
    for (int i = 4; i < 8; ++i) CHECK(decisions[i].second == arm::kDtree);

    EnsembleParams nodt = quiet_params(13);
    nodt.no_dt = true;
    BanditController plain(ConfigSpace::full(), nodt);
    drive(plain, 1, 30, objective);
    plain.update_models(kAllFeatures);  // tree exists but must be unused
    const auto state_best = plain.find_class(1)->best_config_id;
    if (plain.find_class(1)->phase == BanditPhase::Steady) {
        auto [c, tag] = plain.on_session(1, probe_features());
        CHECK(c.id() == state_best);
    }
}

TEST_CASE("with a noiseless oracle and epsilon 0 decisions converge") {
    const OracleParams oracle;
    const Website site{"w", 30, 8000, 40000, ""};
    const NetworkCondition cond{3000, 150, 0.03};
    auto objective = [&](const Configuration& c) {
        return noiseless_plt(c, cond, site, oracle);
    };

    BanditController bandit(ConfigSpace::full(), quiet_params(17));
    drive(bandit, 1, 60, objective);
    CHECK(bandit.find_class(1)->phase == BanditPhase::Steady);

    const int incumbent = bandit.find_class(1)->best_config_id;
    const auto more = drive(bandit, 1, 40, objective);
    CHECK(bandit.find_class(1)->best_config_id == incumbent);
    // without a tree, steady decisions repeat the incumbent
    for (const auto& [id, tag] : more) CHECK(id == incumbent);
}

TEST_CASE("every decision carries exactly one known arm tag") {
    EnsembleParams p = quiet_params(19);
    p.epsilon = 0.3;
    BanditController bandit(ConfigSpace::full(), p);
    auto objective = [](const Configuration& c) { return 300.0 + c.id() % 31; };
    const std::set<std::string> known{arm::kLhc, arm::kGp, arm::kEpsilon,
                                      arm::kDtree, arm::kDefault};
    for (const auto& [id, tag] : drive(bandit, 2, 100, objective))
        CHECK(known.count(tag) == 1);
}

TEST_CASE("arm fractions per bucket sum to one") {
    std::vector<std::pair<std::int64_t, std::string>> tagged;
    for (int i = 0; i < 50; ++i) tagged.emplace_back(i, arm::kGp);
    for (int i = 50; i < 200; ++i)
        tagged.emplace_back(i, i % 3 ? arm::kDtree : arm::kEpsilon);
    const std::vector<std::int64_t> edges{0, 50, 100, 150, 200};
    const auto fractions = arm_contributions(tagged, edges);

    CHECK(fractions.at(arm::kGp)[0] == doctest::Approx(1.0));
    for (int b = 0; b < 4; ++b) {
        double total = 0.0;
        for (const auto& [tag, row] : fractions) total += row[b];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(fractions.at(arm::kDtree)[3] > fractions.at(arm::kEpsilon)[3]);
}

TEST_CASE("drift reset re-enters exploration and keeps history") {
    BanditController bandit(ConfigSpace::full(), quiet_params(23));
    auto objective = [](const Configuration& c) { return 300.0 + c.id() % 13; };
    drive(bandit, 1, 50, objective);
    REQUIRE(bandit.find_class(1)->phase == BanditPhase::Steady);
    const auto history_size = bandit.find_class(1)->history.size();

    bandit.reset_class_on_drift(1);
    CHECK(bandit.find_class(1)->phase == BanditPhase::GpExplore);
    CHECK(bandit.find_class(1)->history.size() == history_size);
    CHECK(bandit.find_class(1)->pending_lhc.empty());
}

TEST_CASE("changepoint-gated reset fires on drift and stays quiet without") {
    BanditController bandit(ConfigSpace::full(), quiet_params(29));
    // steady on a stable incumbent
    auto flat = [](const Configuration&) { return 400.0; };
    drive(bandit, 1, 60, flat);
    REQUIRE(bandit.find_class(1)->phase == BanditPhase::Steady);
    CHECK_FALSE(bandit.maybe_reset_on_drift(1));

    // inject a level shift in the incumbent's PLT stream
    const int incumbent = bandit.find_class(1)->best_config_id;
    for (int i = 0; i < 40; ++i)
        bandit.on_feedback(feedback_for(
            1, Configuration::from_id(incumbent), 2000.0, 100 + i,
            arm::kDtree));
    CHECK(bandit.maybe_reset_on_drift(1));
    CHECK(bandit.find_class(1)->phase == BanditPhase::GpExplore);
}

TEST_CASE("restricted spaces bound every arm's draw") {
    EnsembleParams p = quiet_params(31);
    p.epsilon = 0.5;
    const ConfigSpace space = ConfigSpace::restricted({"cc"});
    BanditController bandit(space, p);
    std::set<int> allowed;
    for (const auto& c : space.enumerate()) allowed.insert(c.id());
    auto objective = [](const Configuration& c) { return 300.0 + c.id() % 7; };
    for (const auto& [id, tag] : drive(bandit, 1, 60, objective))
        CHECK(allowed.count(id) == 1);
}
