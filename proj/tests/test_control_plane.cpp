#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgetune/control_plane.hpp"

#include <nlohmann/json.hpp>

#include <random>

using namespace edgetune;

namespace {

NCModel two_class_model() {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> jit(0.0, 0.05);
    std::vector<FeatureVector> samples;
    for (int i = 0; i < 20; ++i)
        samples.push_back(FeatureVector{50000 * std::exp(jit(rng)),
                                        20 * std::exp(jit(rng)), 0.0, 2e5});
    for (int i = 0; i < 20; ++i)
        samples.push_back(FeatureVector{500 * std::exp(jit(rng)),
                                        300 * std::exp(jit(rng)), 0.1, 5e6});
    std::mt19937_64 fit_rng(2);
    return fit_netclass(samples, 2, fit_rng);
}

NCRuleMap rule_map(std::int64_t version, const NCModel& model,
                   std::map<int, Configuration> decisions) {
    NCRuleMap m;
    m.version = version;
    m.nc_models.emplace(0, model);
    m.class_decisions = std::move(decisions);
    return m;
}

const FeatureVector kFast{50000, 20, 0.0, 2e5};
const FeatureVector kSlow{500, 300, 0.1, 5e6};

}  // namespace

TEST_CASE("zero-delay pushes land at the publish tick") {
    SimQueue queue;
    Topology topo;
    topo.update_interval_ms = 1000;
    ControlPlane cp(topo, queue);
    cp.start();

    const NCModel model = two_class_model();
    queue.run_until(10);
    cp.manager(0).push_rules(
        rule_map(cp.manager(0).next_version(), model,
                 {{0, Configuration::from_id(5)}, {1, Configuration::from_id(9)}}));
    queue.run_until(10);  // delivery event carries the same timestamp
    CHECK(cp.agent(0).snapshot().version == 1);
}

TEST_CASE("propagation delay defers the snapshot swap") {
    SimQueue queue;
    Topology topo;
    topo.delay_ms = 5000;
    topo.update_interval_ms = 100000;
    ControlPlane cp(topo, queue);
    cp.start();

    const NCModel model = two_class_model();
    cp.manager(0).push_rules(rule_map(1, model, {{0, Configuration::from_id(5)}}));
    queue.run_until(4999);
    CHECK(cp.agent(0).snapshot().version == 0);
    const auto before = cp.agent(0).lookup(kFast);
    CHECK_FALSE(before.from_rule);  // still the empty snapshot

    queue.run_until(5000);
    CHECK(cp.agent(0).snapshot().version == 1);
}

TEST_CASE("two pushes in one delay window arrive in order") {
    SimQueue queue;
    Topology topo;
    topo.delay_ms = 1000;
    topo.update_interval_ms = 100000;
    ControlPlane cp(topo, queue);
    cp.start();

    const NCModel model = two_class_model();
    std::vector<std::int64_t> seen;
    queue.run_until(0);
    cp.manager(0).push_rules(rule_map(1, model, {}));
    queue.run_until(10);
    cp.manager(0).push_rules(rule_map(2, model, {}));
    queue.run_until(999);
    CHECK(cp.agent(0).snapshot().version == 0);
    queue.run_until(1000);
    CHECK(cp.agent(0).snapshot().version == 1);
    queue.run_until(1010);
    CHECK(cp.agent(0).snapshot().version == 2);
}

TEST_CASE("version regression is rejected") {
    SimQueue queue;
    Topology topo;
    ControlPlane cp(topo, queue);
    cp.start();
    const NCModel model = two_class_model();
    cp.manager(0).push_rules(rule_map(3, model, {}));
    CHECK_THROWS(cp.manager(0).push_rules(rule_map(3, model, {})));
    CHECK_THROWS(cp.manager(0).push_rules(rule_map(2, model, {})));

    Agent lone(0);
    auto v2 = std::make_shared<const NCRuleMap>(rule_map(2, model, {}));
    auto v1 = std::make_shared<const NCRuleMap>(rule_map(1, model, {}));
    lone.deliver(v2);
    CHECK_THROWS(lone.deliver(v1));
}

TEST_CASE("empty v0 snapshot serves the default and records a pending query") {
    Agent agent(0);
    const auto r = agent.lookup(kFast);
    CHECK_FALSE(r.from_rule);
    CHECK(r.class_id == -1);
    CHECK(r.config == default_config());
    CHECK(agent.pending_query_count() == 1);
    // same features again: still one pending key
    agent.lookup(kFast);
    CHECK(agent.pending_query_count() == 1);
    agent.lookup(kSlow);
    CHECK(agent.pending_query_count() == 2);
    CHECK(agent.answer_pending() == 2);
    CHECK(agent.pending_query_count() == 0);
}

TEST_CASE("populated snapshots answer from the class decision") {
    Agent agent(0);
    const NCModel model = two_class_model();
    const int fast_class = namespaced_class(0, classify(model, kFast));
    const int slow_class = namespaced_class(0, classify(model, kSlow));
    REQUIRE(fast_class != slow_class);

    auto rules = std::make_shared<const NCRuleMap>(
        rule_map(1, model,
                 {{fast_class, Configuration::from_id(11)},
                  {slow_class, Configuration::from_id(22)}}));
    agent.deliver(rules);

    const auto a = agent.lookup(kFast);
    CHECK(a.from_rule);
    CHECK(a.config.id() == 11);
    CHECK(a.version == 1);
    const auto b = agent.lookup(kSlow);
    CHECK(b.config.id() == 22);

    // identical queries before any new push answer identically
    const auto a2 = agent.lookup(kFast);
    CHECK(a2.config.id() == a.config.id());
    CHECK(a2.version == a.version);
}

TEST_CASE("classified misses fall back to the default and enqueue a query") {
    Agent agent(0);
    const NCModel model = two_class_model();
    const int fast_class = namespaced_class(0, classify(model, kFast));
    auto rules = std::make_shared<const NCRuleMap>(
        rule_map(1, model, {{fast_class, Configuration::from_id(11)}}));
    agent.deliver(rules);

    const auto miss = agent.lookup(kSlow);  // class exists, decision missing
    CHECK_FALSE(miss.from_rule);
    CHECK(miss.config == default_config());
    CHECK(agent.pending_query_count() == 1);
}

TEST_CASE("manager ticks at the update interval and counts telemetry") {
    SimQueue queue;
    Topology topo;
    topo.update_interval_ms = 120000;  // two sim minutes
    ControlPlane cp(topo, queue);

    std::vector<std::int64_t> ticks;
    cp.manager(0).on_tick = [&](std::int64_t t) { ticks.push_back(t); };
    cp.start();

    PerformanceSample s;
    s.client_id = "c";
    s.plt_ms = 100.0;
    queue.run_until(1000);
    cp.manager(0).send_telemetry(s);
    cp.manager(0).send_telemetry(s);
    queue.run_until(121000);
    cp.manager(0).send_telemetry(s);
    queue.run_until(600000);

    REQUIRE(ticks.size() == 5);
    CHECK(ticks[0] == 120000);
    CHECK(ticks[1] == 240000);
    CHECK(ticks[4] == 600000);

    const auto& counts = cp.manager(0).tick_sample_counts();
    REQUIRE(counts.size() == 5);
    CHECK(counts[0].second == 2);
    CHECK(counts[1].second == 1);
    CHECK(counts[2].second == 0);
}

TEST_CASE("telemetry arrives only after the propagation delay") {
    SimQueue queue;
    Topology topo;
    topo.delay_ms = 7000;
    topo.update_interval_ms = 100000;
    ControlPlane cp(topo, queue);
    long received = 0;
    cp.manager(0).on_telemetry = [&](const PerformanceSample&) { ++received; };
    cp.start();

    PerformanceSample s;
    s.plt_ms = 1.0;
    queue.run_until(100);
    cp.manager(0).send_telemetry(s);
    queue.run_until(7099);
    CHECK(received == 0);
    queue.run_until(7100);
    CHECK(received == 1);
}

TEST_CASE("rule maps serialize and round-trip") {
    const NCModel model = two_class_model();
    NCRuleMap m = rule_map(9, model, {{0, Configuration::from_id(100)},
                                      {1, Configuration::from_id(200)}});
    const nlohmann::json j = m.to_json();
    const NCRuleMap back = NCRuleMap::from_json(j);
    CHECK(back.version == 9);
    CHECK(back.class_decisions.at(0).id() == 100);
    CHECK(back.class_decisions.at(1).id() == 200);
    REQUIRE(back.nc_models.count(0) == 1);
    CHECK(classify(back.nc_models.at(0), kFast) == classify(model, kFast));
    CHECK(classify(back.nc_models.at(0), kSlow) == classify(model, kSlow));
}

TEST_CASE("local topology gives each pop its own manager") {
    SimQueue queue;
    Topology topo;
    topo.mode = Topology::Mode::LocalPerPop;
    topo.pops = 3;
    ControlPlane cp(topo, queue);
    CHECK(cp.manager_count() == 3);
    CHECK(cp.manager_of_pop(2).index() == 2);
    CHECK(cp.agent(1).pop() == 1);

    Topology global = topo;
    global.mode = Topology::Mode::Global;
    SimQueue q2;
    ControlPlane cpg(global, q2);
    CHECK(cpg.manager_count() == 1);
    CHECK(cpg.manager_of_pop(2).index() == 0);
    CHECK(cpg.manager(0).agents().size() == 3);
}
