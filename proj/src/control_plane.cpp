#include "edgetune/control_plane.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <stdexcept>

namespace edgetune {

nlohmann::json NCRuleMap::to_json() const {
    nlohmann::json decisions = nlohmann::json::object();
    for (const auto& [class_id, config] : class_decisions)
        decisions[std::to_string(class_id)] = {{"id", config.id()},
                                               {"config", config.to_string()}};
    nlohmann::json rules = nlohmann::json::object();
    for (const auto& [pop, model] : nc_models)
        rules[std::to_string(pop)] = export_rules(model);
    nlohmann::json j{{"version", version},
                     {"publish_ts_ms", publish_ts_ms},
                     {"nc_rules", rules},
                     {"decisions", decisions}};
    if (tree.trained()) j["tree"] = dtree_to_json(tree);
    return j;
}

NCRuleMap NCRuleMap::from_json(const nlohmann::json& j) {
    NCRuleMap m;
    m.version = j.at("version").get<std::int64_t>();
    m.publish_ts_ms = j.value("publish_ts_ms", 0LL);
    for (const auto& [pop, rules] : j.at("nc_rules").items())
        m.nc_models.emplace(std::stoi(pop), import_rules(rules));
    if (j.contains("tree")) m.tree = dtree_from_json(j.at("tree"));
    for (const auto& [key, value] : j.at("decisions").items())
        m.class_decisions.emplace(std::stoi(key),
                                  Configuration::from_id(value.at("id").get<int>()));
    return m;
}

void SimQueue::schedule(std::int64_t t_ms, Fn fn, int priority) {
    if (t_ms < now_) t_ms = now_;  // immediate delivery for past times
    events_.push({t_ms, priority, next_seq_++, std::move(fn)});
}

void SimQueue::run_until(std::int64_t t_ms) {
    while (!events_.empty() && events_.top().t <= t_ms) {
        Event e = events_.top();
        events_.pop();
        now_ = e.t;
        e.fn(e.t);
    }
    now_ = std::max(now_, t_ms);
}

void SimQueue::run_all() {
    while (!events_.empty()) {
        Event e = events_.top();
        events_.pop();
        now_ = e.t;
        e.fn(e.t);
    }
}

void Agent::deliver(std::shared_ptr<const NCRuleMap> rules) {
    if (rules->version <= snapshot_->version)
        throw std::runtime_error("agent: rule version regression");
    snapshot_ = std::move(rules);  // atomic swap of the whole snapshot
}

std::optional<int> Agent::classify_features(const FeatureVector& f) const {
    auto it = snapshot_->nc_models.find(pop_);
    if (it == snapshot_->nc_models.end()) return std::nullopt;
    return namespaced_class(pop_, classify(it->second, f));
}

Agent::LookupResult Agent::lookup(const FeatureVector& f) {
    LookupResult r;
    r.version = snapshot_->version;
    const auto class_id = classify_features(f);
    if (class_id) {
        r.class_id = *class_id;
        auto it = snapshot_->class_decisions.find(*class_id);
        if (it != snapshot_->class_decisions.end()) {
            r.config = it->second;
            r.from_rule = true;
            return r;
        }
        pending_.insert("class:" + std::to_string(*class_id));
    } else {
        // no rules at all yet; key the query by coarse feature buckets
        char key[64];
        std::snprintf(key, sizeof(key), "f:%.0f/%.0f/%.3f/%.0f",
                      f.bandwidth_kbps, f.rtt_ms, f.loss_rate, f.complexity);
        pending_.insert(key);
    }
    r.config = default_config();
    r.from_rule = false;
    return r;
}

Manager::Manager(int index, SimQueue& queue, std::vector<Agent*> agents,
                 std::int64_t update_interval_ms, std::int64_t delay_ms)
    : index_(index),
      queue_(queue),
      agents_(std::move(agents)),
      interval_ms_(update_interval_ms),
      delay_ms_(delay_ms) {
    if (interval_ms_ <= 0)
        throw std::invalid_argument("manager: update interval must be > 0");
    if (delay_ms_ < 0)
        throw std::invalid_argument("manager: delay must be >= 0");
}

void Manager::start() {
    queue_.schedule(interval_ms_, [this](std::int64_t t) { tick(t); }, 0);
}

void Manager::tick(std::int64_t t_ms) {
    tick_counts_.emplace_back(t_ms, samples_since_tick_);
    samples_since_tick_ = 0;
    for (Agent* a : agents_) a->answer_pending();
    if (on_tick) on_tick(t_ms);
    queue_.schedule(t_ms + interval_ms_, [this](std::int64_t t) { tick(t); }, 0);
}

void Manager::push_rules(NCRuleMap rules) {
    if (rules.version <= last_version_)
        throw std::runtime_error("manager: rule version regression");
    last_version_ = rules.version;
    rules.publish_ts_ms = queue_.now();
    auto shared = std::make_shared<const NCRuleMap>(std::move(rules));
    for (Agent* a : agents_)
        queue_.schedule(
            queue_.now() + delay_ms_,
            [a, shared](std::int64_t) { a->deliver(shared); }, 0);
}

void Manager::send_telemetry(PerformanceSample sample) {
    queue_.schedule(
        queue_.now() + delay_ms_,
        [this, sample = std::move(sample)](std::int64_t) {
            ++samples_since_tick_;
            if (on_telemetry) on_telemetry(sample);
        },
        0);
}

ControlPlane::ControlPlane(const Topology& topo, SimQueue& queue) : topo_(topo) {
    if (topo_.pops < 1) throw std::invalid_argument("topology: pops must be >= 1");
    for (int p = 0; p < topo_.pops; ++p)
        agents_.push_back(std::make_unique<Agent>(p));

    if (topo_.mode == Topology::Mode::Global) {
        std::vector<Agent*> all;
        for (auto& a : agents_) all.push_back(a.get());
        managers_.push_back(std::make_unique<Manager>(
            0, queue, all, topo_.update_interval_ms, topo_.delay_ms));
    } else {
        for (int p = 0; p < topo_.pops; ++p)
            managers_.push_back(std::make_unique<Manager>(
                p, queue, std::vector<Agent*>{agents_[p].get()},
                topo_.update_interval_ms, topo_.delay_ms));
    }
}

void ControlPlane::start() {
    for (auto& m : managers_) m->start();
}

}  // namespace edgetune
