#pragma once

#include "edgetune/bandit.hpp"
#include "edgetune/config_space.hpp"
#include "edgetune/dtree.hpp"
#include "edgetune/netclass.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace edgetune {

/// Class ids are namespaced per PoP so they stay identical whether a
/// manager is global or local: id = pop * kClassStride + local cluster.
constexpr int kClassStride = 4096;
inline int namespaced_class(int pop, int local) {
    return pop * kClassStride + local;
}

/// Versioned snapshot pushed from a manager to its agents: per-PoP
/// network-class rules, per-class configuration decisions and the
/// serialized exploitation tree. Immutable once published.
struct NCRuleMap {
    std::int64_t version = 0;
    std::map<int, NCModel> nc_models;  // pop -> classifier rules
    std::map<int, Configuration> class_decisions;
    DTree tree;
    std::int64_t publish_ts_ms = 0;

    nlohmann::json to_json() const;
    static NCRuleMap from_json(const nlohmann::json& j);
};

struct Topology {
    enum class Mode { Global, LocalPerPop };
    Mode mode = Mode::Global;
    int pops = 1;
    std::int64_t delay_ms = 0;            // manager -> agent propagation
    std::int64_t update_interval_ms = 120000;
};

/// Deterministic discrete-event queue. Ties order by priority (control
/// plane runs at 0, ahead of session events at 1) and then by scheduling
/// order.
class SimQueue {
  public:
    using Fn = std::function<void(std::int64_t)>;

    void schedule(std::int64_t t_ms, Fn fn, int priority = 1);
    /// Runs every event with time <= t_ms, then sets now to t_ms.
    void run_until(std::int64_t t_ms);
    void run_all();
    std::int64_t now() const { return now_; }

  private:
    struct Event {
        std::int64_t t;
        int priority;
        std::uint64_t seq;
        Fn fn;
        bool operator>(const Event& o) const {
            if (t != o.t) return t > o.t;
            if (priority != o.priority) return priority > o.priority;
            return seq > o.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t next_seq_ = 0;
    std::int64_t now_ = 0;
};

/// Caches the latest delivered rule snapshot and serves lookups from
/// exactly one snapshot. Misses fall back to the default configuration
/// and record a pending query, answered at the next manager tick.
class Agent {
  public:
    explicit Agent(int pop_index) : pop_(pop_index) {}

    void deliver(std::shared_ptr<const NCRuleMap> rules);

    struct LookupResult {
        Configuration config;
        bool from_rule = false;  // false: default-on-miss
        int class_id = -1;
        std::int64_t version = 0;
    };
    LookupResult lookup(const FeatureVector& f);

    /// Namespaced class id, or nullopt before this PoP has rules.
    std::optional<int> classify_features(const FeatureVector& f) const;

    const NCRuleMap& snapshot() const { return *snapshot_; }
    int pop() const { return pop_; }
    std::size_t pending_query_count() const { return pending_.size(); }
    std::size_t answer_pending() {
        const auto n = pending_.size();
        pending_.clear();
        return n;
    }

  private:
    int pop_ = 0;
    std::shared_ptr<const NCRuleMap> snapshot_ =
        std::make_shared<NCRuleMap>();  // empty v0
    std::set<std::string> pending_;
};

/// Simulated Configuration Manager: batches telemetry behind the
/// propagation delay, ticks at the update interval, and pushes versioned
/// rule maps to its agents.
class Manager {
  public:
    Manager(int index, SimQueue& queue, std::vector<Agent*> agents,
            std::int64_t update_interval_ms, std::int64_t delay_ms);

    /// Schedules recurring ticks starting at one update interval.
    void start();

    /// Validates the version, stamps publish time and schedules delivery
    /// to every agent after the propagation delay.
    void push_rules(NCRuleMap rules);

    /// Telemetry arrives (and on_telemetry fires) after the delay.
    void send_telemetry(PerformanceSample sample);

    std::int64_t next_version() { return last_version_ + 1; }
    std::int64_t last_version() const { return last_version_; }
    int index() const { return index_; }
    const std::vector<Agent*>& agents() const { return agents_; }
    const std::vector<std::pair<std::int64_t, long>>& tick_sample_counts()
        const {
        return tick_counts_;
    }

    std::function<void(const PerformanceSample&)> on_telemetry;
    std::function<void(std::int64_t)> on_tick;

  private:
    void tick(std::int64_t t_ms);

    int index_ = 0;
    SimQueue& queue_;
    std::vector<Agent*> agents_;
    std::int64_t interval_ms_;
    std::int64_t delay_ms_;
    std::int64_t last_version_ = 0;
    long samples_since_tick_ = 0;
    std::vector<std::pair<std::int64_t, long>> tick_counts_;
};

/// Wires agents and managers for a topology: one agent per PoP, plus one
/// manager overall (Global) or one per PoP (LocalPerPop).
class ControlPlane {
  public:
    ControlPlane(const Topology& topo, SimQueue& queue);

    Agent& agent(int pop) { return *agents_[pop]; }
    Manager& manager_of_pop(int pop) {
        return *managers_[topo_.mode == Topology::Mode::Global ? 0 : pop];
    }
    int manager_count() const { return static_cast<int>(managers_.size()); }
    Manager& manager(int idx) { return *managers_[idx]; }
    const Topology& topology() const { return topo_; }
    void start();

  private:
    Topology topo_;
    std::vector<std::unique_ptr<Agent>> agents_;
    std::vector<std::unique_ptr<Manager>> managers_;
};

}  // namespace edgetune
