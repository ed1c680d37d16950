#pragma once

#include "edgetune/baselines.hpp"
#include "edgetune/control_plane.hpp"
#include "edgetune/plt_oracle.hpp"
#include "edgetune/workload.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgetune {

/// Invalid experiment configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimatorParams {
    double alpha = 0.5;             // EWMA weight on the newest observation
    double first_sight_fuzz = 0.10; // +-10% multiplicative error on first sight
};

struct ExperimentConfig {
    std::optional<WorkloadSpec> workload;
    std::string trace_path;  // used when no workload spec is given
    std::vector<Website> trace_websites;  // catalog for trace runs
    OracleParams oracle;
    StrategyKind algo = StrategyKind::Ensemble;
    StrategyOptions strategy;
    Topology topology;
    /// Features available to the exploitation tree (and the ablation
    /// axis).
    FeatureMask feature_mask = kAllFeatures;
    /// Features used for network-class clustering; defaults to the
    /// network dimensions only (complexity stays a model feature).
    FeatureMask nc_feature_mask = {true, true, true, false};
    /// Knobs left free to tune; nullopt frees all seven, an empty list
    /// pins everything to the defaults.
    std::optional<std::vector<std::string>> knob_mask;
    int nc_k = 0;                        // 0: pick via choose_k
    double nc_cv_threshold = 0.25;
    int nc_k_max = 16;
    int nc_min_samples = 20;
    bool noise = true;
    bool drift_detection = false;
    EstimatorParams estimator;
    std::uint64_t seed = 1;
    std::string out_path;

    /// Effective configuration space under the knob mask.
    ConfigSpace config_space() const;
    void validate() const;  // throws ConfigError
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

/// One line of the results file.
struct ResultRow {
    std::int64_t ts_ms = 0;  // decision time (session arrival)
    std::string client_id;
    int class_id = -1;
    std::string website_id;
    std::string algo;
    std::string arm;
    std::vector<int> config_ids;  // one per phase
    double plt_ms = 0.0;
    double default_plt_ms = 0.0;
    double optimal_plt_ms = 0.0;
};

struct RunResult {
    std::vector<ResultRow> rows;
    std::vector<std::pair<std::int64_t, std::string>> decisions;  // ts, arm
    std::map<int, std::vector<std::pair<std::int64_t, long>>>
        tick_sample_counts;       // per manager
    std::map<int, int> final_class_decisions;  // class -> config id
    long drift_resets = 0;
};

RunResult run_experiment(const ExperimentConfig& cfg);

/// Runs and writes the results CSV plus a .meta.json sidecar.
void run_experiment_to_file(const ExperimentConfig& cfg);

void write_results_csv(const std::string& path, const RunResult& result);
std::vector<ResultRow> read_results_csv(const std::string& path);

constexpr const char* kResultsHeader =
    "ts_ms,client_id,class_id,website_id,algo,arm,config_ids,plt_ms,"
    "default_plt_ms,optimal_plt_ms";

/// One run per subset along the given axis ("features" or "knobs"),
/// sharing the base config's workload and seed. Returns subset name ->
/// result.
std::vector<std::pair<std::string, RunResult>> ablate(
    const ExperimentConfig& base, const std::string& axis,
    const std::vector<std::vector<std::string>>& subsets);

}  // namespace edgetune
