#pragma once

#include "edgetune/config_space.hpp"
#include "edgetune/dtree.hpp"
#include "edgetune/gp.hpp"
#include "edgetune/netclass.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace edgetune {

namespace arm {
inline constexpr const char* kLhc = "LHC";
inline constexpr const char* kGp = "GP";
inline constexpr const char* kEpsilon = "Epsilon";
inline constexpr const char* kDtree = "DTree";
inline constexpr const char* kDefault = "Default";
}  // namespace arm

struct PerformanceSample {
    std::string client_id;
    int class_id = -1;
    FeatureVector features;
    std::string website_id;
    int config_id = 0;
    double plt_ms = 0.0;
    std::int64_t ts_ms = 0;
    std::string arm;
    /// The connection's conditions shifted mid-session; its PLT blends
    /// two regimes and is kept out of per-config scoring.
    bool condition_changed = false;
};

struct EnsembleParams {
    double epsilon = 0.05;  // population-wide degree of randomness
    int init_sample = 4;
    int min_sample_tested = 7;
    double ei_rel_threshold = 0.05;
    int best_window = 0;  // trailing samples per config for means; 0 = all
    /// Steady-state challenger gates: a challenger with two or more
    /// observations switches the incumbent past the first margin; a
    /// single observation needs the larger one (negative log-PLT noise
    /// is bounded, so a 40% singleton win cannot be a fluke). Model
    /// updates re-rank accumulated evidence under the slow margin.
    double incumbent_switch_margin = 0.10;
    double single_sample_switch_margin = 0.40;
    double slow_reeval_margin = 0.03;
    /// Share of epsilon draws that resample the class's current best
    /// configs instead of the whole space; resampling accumulates the
    /// evidence the re-evaluation margins need.
    double epsilon_resample_share = 0.5;
    int epsilon_resample_pool = 8;
    bool no_gp = false;   // skip the guided-exploration arm
    bool no_dt = false;   // skip the exploitation arm
    std::uint64_t seed = 0;
};

enum class BanditPhase { Bootstrap, GpExplore, Steady };

/// Config comparison within one class (or client). Raw PLTs are not
/// comparable across sessions that hit different websites, so each
/// configuration is scored by its mean log-PLT residual against its
/// sites' leave-one-out running means; score differences read as log PLT
/// ratios. Site levels aggregate many sessions, which keeps the offsets
/// robust to tail spikes.
class ConfigScoreBoard {
  public:
    void add(int config_id, const std::string& website_id, double plt_ms);

    bool empty() const { return configs_.empty(); }
    std::size_t config_count() const { return configs_.size(); }
    long count(int config_id) const;
    double mean_plt(int config_id) const;

    /// Site-adjusted mean log PLT; lower is better. Computed against the
    /// current site offsets, so scores stay mutually comparable.
    double score(int config_id) const;

    /// Same residual, but taken against another board's site levels
    /// (population-pooled offsets for sparse per-client boards).
    double score_against(int config_id, const ConfigScoreBoard& sites) const;

    double site_mean(const std::string& website_id) const;
    bool has_site(const std::string& website_id) const {
        return sites_.count(website_id) > 0;
    }

    /// Lowest score, ties to the lowest config id; -1 when empty.
    int argmin_score(long min_count = 1) const;

    /// Up to k config ids ordered by ascending score.
    std::vector<int> top_k(int k) const;

    const std::map<int, long>& observation_counts() const { return counts_; }

  private:
    struct Level {
        long n = 0;
        double sum_log = 0.0;
        double mean() const { return n > 0 ? sum_log / n : 0.0; }
    };
    struct ConfigAgg {
        long n = 0;
        double sum_log = 0.0;
        double sum_plt = 0.0;
        std::map<std::string, std::pair<long, double>> by_site;  // n, sum
    };
    Level grand_;
    std::map<std::string, Level> sites_;
    std::map<int, ConfigAgg> configs_;
    std::map<int, long> counts_;
};

struct ClassState {
    int class_id = -1;
    BanditPhase phase = BanditPhase::Bootstrap;
    GPExploreState gp;
    std::vector<PerformanceSample> history;
    ConfigScoreBoard scores;
    int best_config_id = -1;
    std::deque<Configuration> pending_lhc;
    bool dt_seed_slot = false;  // tree existed when the class was created
    bool gp_dirty = true;
    std::mt19937_64 rng;
};

/// Per-network-class contextual bandit ensemble: LHC bootstrap, GP
/// exploration with EI termination, steady-state decision-tree
/// exploitation, and a population-wide epsilon resampling gate.
class BanditController {
  public:
    BanditController(ConfigSpace space, EnsembleParams params);

    /// Decision for one session of the given class; creates class state
    /// on first sight.
    std::pair<Configuration, std::string> on_session(int class_id,
                                                     const FeatureVector& f);

    /// Ingests one observed sample (its class state is created if the
    /// sample predates the class's first decision, e.g. retro-classified
    /// default-served telemetry).
    void on_feedback(const PerformanceSample& sample);

    struct ModelUpdate {
        DTree tree;
        std::map<int, Configuration> class_decisions;
        long training_samples = 0;
    };
    /// Retrains the cross-class exploitation tree; labels are each
    /// class's current incumbent. Throws if no class has data.
    ModelUpdate update_models(const FeatureMask& mask);

    /// Non-stationarity hook: clears the bootstrap queue and re-enters
    /// guided exploration, keeping history.
    void reset_class_on_drift(int class_id);

    /// Runs changepoint detection over the class's recent incumbent PLT
    /// stream; commits a reset when a changepoint fires. Returns true on
    /// reset.
    bool maybe_reset_on_drift(int class_id, int window = 200,
                              double hazard_lambda = 250.0);

    const ClassState* find_class(int class_id) const;
    ClassState& state(int class_id);
    const std::map<int, ClassState>& classes() const { return classes_; }
    const DTree& tree() const { return tree_; }
    const ConfigSpace& space() const { return space_; }
    const EnsembleParams& params() const { return params_; }

  private:
    ConfigSpace space_;
    std::vector<Configuration> space_list_;
    EnsembleParams params_;
    std::map<int, ClassState> classes_;
    DTree tree_;
    std::mt19937_64 gate_rng_;

    ClassState& ensure_class(int class_id);
    void refresh_gp(ClassState& cs);
    Configuration steady_decision(ClassState& cs, const FeatureVector& f,
                                  std::string* arm_out);
    Configuration best_or_default(const ClassState& cs) const;
    void update_best(ClassState& cs, int config_id);
};

/// Per-bucket decision fractions by arm tag; fractions of each non-empty
/// bucket sum to 1.
std::map<std::string, std::vector<double>> arm_contributions(
    const std::vector<std::pair<std::int64_t, std::string>>& tagged_decisions,
    const std::vector<std::int64_t>& bucket_edges);

}  // namespace edgetune
