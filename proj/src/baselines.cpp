#include "edgetune/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edgetune {

namespace {

std::uint64_t fnv1a_str(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t h = seed ^ (salt + 0x9E3779B97F4A7C15ULL);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

struct MeanStats {
    long count = 0;
    double sum = 0.0;
    double mean() const { return count > 0 ? sum / count : 0.0; }
};

class DefaultStrategy final : public Strategy {
  public:
    std::pair<Configuration, std::string> decide(const DecisionContext&) override {
        return {default_config(), "Default"};
    }
    std::string name() const override { return to_cstring(StrategyKind::Default); }
};

class OptimalStrategy final : public Strategy {
  public:
    OptimalStrategy(const ConfigSpace& space, OracleParams params)
        : candidates_(space.enumerate()), params_(params) {}

    bool needs_true_condition() const override { return true; }

    std::pair<Configuration, std::string> decide(const DecisionContext& ctx) override {
        if (!ctx.true_condition || !ctx.website)
            throw std::invalid_argument("optimal: true condition required");
        auto [config, plt] =
            optimal_config_in(candidates_, *ctx.true_condition, *ctx.website,
                              params_);
        return {config, "Optimal"};
    }
    std::string name() const override { return to_cstring(StrategyKind::Optimal); }

  private:
    std::vector<Configuration> candidates_;
    OracleParams params_;
};

// Round-robin exploration of the whole space, then the best observed
// mean; state keyed per client or per class.
class BruteStrategy final : public Strategy {
  public:
    BruteStrategy(const ConfigSpace& space, bool per_class)
        : space_(space.enumerate()), per_class_(per_class) {}

    bool needs_class() const override { return per_class_; }

    std::pair<Configuration, std::string> decide(const DecisionContext& ctx) override {
        State& st = state_for(ctx);
        const char* tag = per_class_ ? "BruteNC" : "Brute";
        if (st.next < space_.size()) return {space_[st.next++], tag};
        return {Configuration::from_id(best_of(st)), tag};
    }

    void feedback(const PerformanceSample& s) override {
        State& st = per_class_ ? by_class_[s.class_id] : by_client_[s.client_id];
        auto& m = st.stats[s.config_id];
        ++m.count;
        m.sum += s.plt_ms;
    }

    std::map<int, Configuration> class_decisions() const override {
        std::map<int, Configuration> out;
        if (!per_class_) return out;
        for (const auto& [class_id, st] : by_class_)
            if (!st.stats.empty())
                out.emplace(class_id, Configuration::from_id(best_of(st)));
        return out;
    }

    std::string name() const override {
        return to_cstring(per_class_ ? StrategyKind::BruteNC : StrategyKind::Brute);
    }

    long exploration_decisions() const { return exploration_count_; }

  private:
    struct State {
        std::size_t next = 0;
        std::map<int, MeanStats> stats;
    };

    State& state_for(const DecisionContext& ctx) {
        State& st =
            per_class_ ? by_class_[ctx.class_id] : by_client_[ctx.client_id];
        if (st.next < space_.size()) ++exploration_count_;
        return st;
    }

    static int best_of(const State& st) {
        int best = default_config().id();
        double best_mean = std::numeric_limits<double>::infinity();
        for (const auto& [id, m] : st.stats)
            if (m.count > 0 && m.mean() < best_mean) {
                best_mean = m.mean();
                best = id;
            }
        return best;
    }

    std::vector<Configuration> space_;
    bool per_class_;
    std::map<std::string, State> by_client_;
    std::map<int, State> by_class_;
    long exploration_count_ = 0;
};

// Bayesian-optimization loop per client or per class: LHC bootstrap, GP
// suggestions, then a frozen incumbent once the stop rule fires.
class BoStrategy final : public Strategy {
  public:
    BoStrategy(const ConfigSpace& space, bool per_class, int init_sample,
               double ei_threshold, int min_sample_tested, std::uint64_t seed,
               StrategyKind kind)
        : space_(space),
          space_list_(space.enumerate()),
          per_class_(per_class),
          init_sample_(init_sample),
          ei_threshold_(ei_threshold),
          min_tested_(min_sample_tested),
          seed_(seed),
          kind_(kind) {}

    bool needs_class() const override { return per_class_; }

    std::pair<Configuration, std::string> decide(const DecisionContext& ctx) override {
        State& st = state_for(ctx);
        const char* tag = to_cstring(kind_);
        if (!st.pending.empty()) {
            Configuration c = st.pending.front();
            st.pending.pop_front();
            return {c, tag};
        }
        if (st.stopped) return {incumbent(st), tag};
        if (st.scores.empty()) return {incumbent(st), tag};  // in flight

        std::vector<Configuration> candidates;
        for (const auto& c : space_list_)
            if (!st.gp.tested_config_ids.count(c.id())) candidates.push_back(c);
        if (candidates.empty()) {
            st.stopped = true;
            return {incumbent(st), tag};
        }
        refresh(st);
        auto [suggestion, ei] = suggest_next(st.gp, candidates);
        if (should_stop(st.gp)) {
            st.stopped = true;
            return {incumbent(st), tag};
        }
        ++st.gp_steps;
        return {suggestion, tag};
    }

    void feedback(const PerformanceSample& s) override {
        State& st = per_class_ ? by_class_[s.class_id] : by_client_[s.client_id];
        init(st, s.class_id, s.client_id);
        st.gp.tested_config_ids.insert(s.config_id);
        if (s.condition_changed) return;  // unattributable blend
        st.scores.add(s.config_id, s.website_id, s.plt_ms);
        st.dirty = true;
        if (!st.stopped) st.best_id = st.scores.argmin_score();
    }

    std::map<int, Configuration> class_decisions() const override {
        std::map<int, Configuration> out;
        if (!per_class_) return out;
        for (const auto& [class_id, st] : by_class_)
            if (st.best_id >= 0)
                out.emplace(class_id, Configuration::from_id(st.best_id));
        return out;
    }

    std::string name() const override { return to_cstring(kind_); }

    int gp_steps_for_class(int class_id) const {
        auto it = by_class_.find(class_id);
        return it == by_class_.end() ? 0 : it->second.gp_steps;
    }

  private:
    struct State {
        bool initialized = false;
        GPExploreState gp;
        std::deque<Configuration> pending;
        ConfigScoreBoard scores;
        int best_id = -1;
        bool stopped = false;
        bool dirty = true;
        int gp_steps = 0;
    };

    void init(State& st, int class_id, const std::string& client_id) {
        if (st.initialized) return;
        st.initialized = true;
        st.gp.init_sample = init_sample_;
        st.gp.min_sample_tested = min_tested_;
        st.gp.ei_rel_threshold = ei_threshold_;
        std::mt19937_64 rng(mix_seed(
            seed_, per_class_ ? static_cast<std::uint64_t>(class_id)
                              : fnv1a_str(client_id)));
        const int k =
            std::min<std::size_t>(init_sample_, space_list_.size());
        for (auto& c : space_.lhc_sample(k, rng)) st.pending.push_back(c);
    }

    State& state_for(const DecisionContext& ctx) {
        State& st =
            per_class_ ? by_class_[ctx.class_id] : by_client_[ctx.client_id];
        init(st, ctx.class_id, ctx.client_id);
        return st;
    }

    Configuration incumbent(const State& st) const {
        return st.best_id >= 0 ? Configuration::from_id(st.best_id)
                               : default_config();
    }

    void refresh(State& st) {
        if (!st.dirty) return;
        const int n = static_cast<int>(st.scores.config_count());
        Eigen::MatrixXd X(n, 10);
        Eigen::VectorXd y(n);
        int i = 0;
        for (const auto& [id, count] : st.scores.observation_counts()) {
            X.row(i) = encode(Configuration::from_id(id)).transpose();
            y[i] = st.scores.score(id);
            ++i;
        }
        st.gp.model = GPModel::fit(X, y);
        st.dirty = false;
    }

    ConfigSpace space_;
    std::vector<Configuration> space_list_;
    bool per_class_;
    int init_sample_;
    double ei_threshold_;
    int min_tested_;
    std::uint64_t seed_;
    StrategyKind kind_;
    std::map<std::string, State> by_client_;
    std::map<int, State> by_class_;
};

// One arm per configuration, epsilon-greedy with the exploration rate
// decaying as arms accumulate pulls.
class MabNcStrategy final : public Strategy {
  public:
    MabNcStrategy(const ConfigSpace& space, double epsilon0, std::uint64_t seed)
        : space_list_(space.enumerate()), epsilon0_(epsilon0), seed_(seed) {}

    bool needs_class() const override { return true; }

    std::pair<Configuration, std::string> decide(const DecisionContext& ctx) override {
        State& st = by_class_[ctx.class_id];
        if (!st.initialized) {
            st.initialized = true;
            st.rng.seed(mix_seed(seed_, 0xAB00 + ctx.class_id));
        }
        const double eps =
            epsilon0_ * std::min(1.0, static_cast<double>(space_list_.size()) /
                                          (st.pulls + 1.0));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(st.rng) < eps || st.arms.empty()) {
            std::uniform_int_distribution<std::size_t> pick(
                0, space_list_.size() - 1);
            return {space_list_[pick(st.rng)], "MABNC"};
        }
        int best = -1;
        double best_mean = std::numeric_limits<double>::infinity();
        for (const auto& [id, m] : st.arms)
            if (m.mean() < best_mean) {
                best_mean = m.mean();
                best = id;
            }
        return {Configuration::from_id(best), "MABNC"};
    }

    void feedback(const PerformanceSample& s) override {
        State& st = by_class_[s.class_id];
        auto& m = st.arms[s.config_id];
        ++m.count;
        m.sum += s.plt_ms;
        ++st.pulls;
    }

    std::map<int, Configuration> class_decisions() const override {
        std::map<int, Configuration> out;
        for (const auto& [class_id, st] : by_class_) {
            int best = -1;
            double best_mean = std::numeric_limits<double>::infinity();
            for (const auto& [id, m] : st.arms)
                if (m.mean() < best_mean) {
                    best_mean = m.mean();
                    best = id;
                }
            if (best >= 0) out.emplace(class_id, Configuration::from_id(best));
        }
        return out;
    }

    std::string name() const override { return to_cstring(StrategyKind::MABNC); }

    double arm_mean(int class_id, int config_id) const {
        return by_class_.at(class_id).arms.at(config_id).mean();
    }

  private:
    struct State {
        bool initialized = false;
        std::map<int, MeanStats> arms;
        long pulls = 0;
        std::mt19937_64 rng;
    };
    std::vector<Configuration> space_list_;
    double epsilon0_;
    std::uint64_t seed_;
    std::map<int, State> by_class_;
};

class EnsembleStrategy final : public Strategy {
  public:
    EnsembleStrategy(const ConfigSpace& space, EnsembleParams params,
                     StrategyKind kind)
        : controller_(space, params), kind_(kind) {}

    bool needs_class() const override { return true; }

    std::pair<Configuration, std::string> decide(const DecisionContext& ctx) override {
        return controller_.on_session(ctx.class_id, ctx.features);
    }

    void feedback(const PerformanceSample& s) override {
        controller_.on_feedback(s);
    }

    std::map<int, Configuration> class_decisions() const override {
        std::map<int, Configuration> out;
        for (const auto& [class_id, cs] : controller_.classes())
            if (cs.best_config_id >= 0)
                out.emplace(class_id,
                            Configuration::from_id(cs.best_config_id));
        return out;
    }

    const DTree* on_model_update(const FeatureMask& mask) override {
        bool any = false;
        for (const auto& [id, cs] : controller_.classes())
            any |= !cs.history.empty();
        if (!any) return nullptr;
        controller_.update_models(mask);
        return &controller_.tree();
    }

    std::string name() const override { return to_cstring(kind_); }

    BanditController& controller() { return controller_; }

  private:
    BanditController controller_;
    StrategyKind kind_;
};

}  // namespace

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "default") return StrategyKind::Default;
    if (name == "brute") return StrategyKind::Brute;
    if (name == "brute-nc") return StrategyKind::BruteNC;
    if (name == "bo") return StrategyKind::BO;
    if (name == "bo-nc") return StrategyKind::BONC;
    if (name == "cherrypick-nc") return StrategyKind::CherryPickNC;
    if (name == "mab-nc") return StrategyKind::MABNC;
    if (name == "optimal") return StrategyKind::Optimal;
    if (name == "ensemble") return StrategyKind::Ensemble;
    if (name == "ensemble-nogp") return StrategyKind::EnsembleNoGP;
    if (name == "ensemble-nodt") return StrategyKind::EnsembleNoDT;
    throw std::invalid_argument("unknown strategy: " + name);
}

const char* to_cstring(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Default: return "default";
        case StrategyKind::Brute: return "brute";
        case StrategyKind::BruteNC: return "brute-nc";
        case StrategyKind::BO: return "bo";
        case StrategyKind::BONC: return "bo-nc";
        case StrategyKind::CherryPickNC: return "cherrypick-nc";
        case StrategyKind::MABNC: return "mab-nc";
        case StrategyKind::Optimal: return "optimal";
        case StrategyKind::Ensemble: return "ensemble";
        case StrategyKind::EnsembleNoGP: return "ensemble-nogp";
        case StrategyKind::EnsembleNoDT: return "ensemble-nodt";
    }
    return "?";
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind,
                                        const ConfigSpace& space,
                                        const StrategyOptions& options) {
    switch (kind) {
        case StrategyKind::Default:
            return std::make_unique<DefaultStrategy>();
        case StrategyKind::Optimal:
            return std::make_unique<OptimalStrategy>(space, options.oracle);
        case StrategyKind::Brute:
            return std::make_unique<BruteStrategy>(space, false);
        case StrategyKind::BruteNC:
            return std::make_unique<BruteStrategy>(space, true);
        case StrategyKind::BO:
            return std::make_unique<BoStrategy>(
                space, false, options.ensemble.init_sample,
                options.ensemble.ei_rel_threshold,
                options.ensemble.min_sample_tested, options.seed,
                StrategyKind::BO);
        case StrategyKind::BONC:
            return std::make_unique<BoStrategy>(
                space, true, options.ensemble.init_sample,
                options.ensemble.ei_rel_threshold,
                options.ensemble.min_sample_tested, options.seed,
                StrategyKind::BONC);
        case StrategyKind::CherryPickNC:
            return std::make_unique<BoStrategy>(
                space, true, options.cherrypick_init_sample,
                options.cherrypick_ei_threshold,
                options.ensemble.min_sample_tested, options.seed,
                StrategyKind::CherryPickNC);
        case StrategyKind::MABNC:
            return std::make_unique<MabNcStrategy>(space, options.mab_epsilon0,
                                                   options.seed);
        case StrategyKind::Ensemble:
        case StrategyKind::EnsembleNoGP:
        case StrategyKind::EnsembleNoDT: {
            EnsembleParams p = options.ensemble;
            p.seed = options.seed;
            p.no_gp = kind == StrategyKind::EnsembleNoGP;
            p.no_dt = kind == StrategyKind::EnsembleNoDT;
            return std::make_unique<EnsembleStrategy>(space, p, kind);
        }
    }
    throw std::invalid_argument("unhandled strategy kind");
}

BanditController* ensemble_controller(Strategy& strategy) {
    auto* e = dynamic_cast<EnsembleStrategy*>(&strategy);
    return e ? &e->controller() : nullptr;
}

}  // namespace edgetune
