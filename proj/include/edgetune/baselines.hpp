#pragma once

#include "edgetune/bandit.hpp"
#include "edgetune/config_space.hpp"
#include "edgetune/plt_oracle.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace edgetune {

enum class StrategyKind {
    Default,
    Brute,
    BruteNC,
    BO,
    BONC,
    CherryPickNC,
    MABNC,
    Optimal,
    Ensemble,
    EnsembleNoGP,
    EnsembleNoDT,
};

StrategyKind strategy_kind_from_name(const std::string& name);
const char* to_cstring(StrategyKind kind);

struct DecisionContext {
    std::string client_id;
    int class_id = -1;  // -1 when no classifier rules exist yet
    FeatureVector features;
    const NetworkCondition* true_condition = nullptr;  // Optimal only
    const Website* website = nullptr;
    std::int64_t ts_ms = 0;
};

/// Shared decision/feedback surface for the ensemble and every baseline.
class Strategy {
  public:
    virtual ~Strategy() = default;

    virtual std::pair<Configuration, std::string> decide(
        const DecisionContext& ctx) = 0;
    virtual void feedback(const PerformanceSample& sample) { (void)sample; }

    /// True when decisions are keyed by network class (the harness serves
    /// defaults until classifier rules exist).
    virtual bool needs_class() const { return false; }
    virtual bool needs_true_condition() const { return false; }

    /// Current per-class serving decisions for the pushed rule map.
    virtual std::map<int, Configuration> class_decisions() const { return {}; }

    /// Manager-tick hook (slow phase). Returns the retrained tree for
    /// strategies that publish one.
    virtual const DTree* on_model_update(const FeatureMask& mask) {
        (void)mask;
        return nullptr;
    }

    virtual std::string name() const = 0;
};

struct StrategyOptions {
    EnsembleParams ensemble;     // ensemble + ablations
    double mab_epsilon0 = 1.0;   // MABNC initial degree of randomness
    int cherrypick_init_sample = 6;
    double cherrypick_ei_threshold = 0.10;
    OracleParams oracle;         // Optimal's search model
    std::uint64_t seed = 0;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind,
                                        const ConfigSpace& space,
                                        const StrategyOptions& options);

/// Access to the underlying bandit for ensemble strategies (drift hooks,
/// arm inspection); null for baselines.
BanditController* ensemble_controller(Strategy& strategy);

}  // namespace edgetune
